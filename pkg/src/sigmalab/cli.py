"""Command-line front end: load a run config, dispatch, write reports.

One self-describing JSON config per run; the few flags below override
config fields so a run record stays complete.  Identical config + seed
produces byte-identical outputs.  Exit codes are a stable contract:

* 0 - success
* 2 - config error (parse failure, missing/invalid field)
* 3 - evaluation error (BVP non-convergence, singular metric, ...)
* 4 - empty result (e.g. a tube that does not intersect the region)

Config fields (JSON object; unknown fields are rejected nowhere, ignored):

``geometry``    {kind, dim, metric (row-major), radius, D, sigma0};
                kind in {euclidean, minkowski, distorted-minkowski, sphere}.
``metric``      {kind: flat|sphere|matrix, dim, matrix (row-major), radius};
                builds the metric field for Riemannian-side commands.
``points``      list of chart points (sigma command expects two).
``vectors``     {a: {origin, head}, b: {origin, head}}.
``tube``        {kind, p0, p1, q0, aux_points, thickness_stations}.
``region``      {min: [...], max: [...]} box, per-axis bounds.
``cloud``       {points: [...]} or {count, box: {min, max}} (conditions).
``n``           candidate dimension for the conditions command.
``transport``   {u0, path, path2 (optional), steps_per_segment}.
``budget``      sample count (tube / compare-defs), >= 1.
``tol``         membership / check tolerance, > 0.
``dist_tol``    same/different threshold for compare-defs.
``trials``      subset trials for condition I.
``seed``        64-bit unsigned seed for all randomized machinery.
``plot_pairs``  coordinate-axis pairs for 2-D projection exports.
``output``      {path, format: json|csv}.

The environment variable ``SIGMALAB_THREADS`` is validated and recorded
in every report for reproducibility; the current implementation
vectorizes in-process, so the value is advisory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .euclidean import run_all_conditions
from .riemann import (
    flat_metric,
    geodesic_bvp,
    parallel_transport,
    sphere_metric,
    world_function_from_metric,
)
from .tubes import (
    TubeSpec,
    compare_definitions,
    sample_tube,
    tube_cross_section_thickness,
)
from .vectors import (
    IndefiniteNormError,
    PointPairVector,
    is_collinear,
    is_parallel,
    scalar_product,
    squared_norm,
)
from .worldfunc import (
    EvaluationError,
    GeometryError,
    make_distorted_minkowski,
    make_euclidean,
    make_minkowski,
    make_sphere,
)

__all__ = ["main", "build_geometry", "build_metric", "load_config"]


class ConfigError(ValueError):
    """Config file missing, unparsable, or shaped wrong."""


class EmptyResultError(RuntimeError):
    """A command produced an empty result set."""


def load_config(path) -> dict:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path!r} is not valid JSON: line {exc.lineno} column "
            f"{exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _need(cfg, field, kind=None):
    if field not in cfg:
        raise ConfigError(f"config field {field!r} is required for this command")
    val = cfg[field]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config field {field!r} has the wrong type")
    return val


def build_geometry(record):
    """Geometry config record {kind, dim, metric, radius, D, sigma0} ->
    WorldFunction."""
    if not isinstance(record, dict) or "kind" not in record:
        raise ConfigError("geometry record must be an object with a 'kind' field")
    kind = record["kind"]
    try:
        if kind == "euclidean":
            dim = int(record.get("dim", 0))
            if dim < 1:
                raise ConfigError("geometry.dim must be a positive integer")
            metric = record.get("metric")
            if metric is not None:
                metric = np.asarray(metric, dtype=float).reshape(dim, dim)
            return make_euclidean(dim, metric)
        if kind == "minkowski":
            return make_minkowski()
        if kind == "distorted-minkowski":
            return make_distorted_minkowski(
                record.get("D", 0.0), record.get("sigma0", 0.0)
            )
        if kind == "sphere":
            return make_sphere(record.get("radius", 1.0))
    except GeometryError as exc:
        raise ConfigError(f"geometry record invalid: {exc}") from exc
    raise ConfigError(f"unknown geometry kind {kind!r}")


def build_metric(record):
    """Metric config record {kind, dim, matrix, radius} -> MetricField."""
    if not isinstance(record, dict) or "kind" not in record:
        raise ConfigError("metric record must be an object with a 'kind' field")
    kind = record["kind"]
    try:
        if kind == "flat":
            return flat_metric(int(record.get("dim", 0)))
        if kind == "sphere":
            return sphere_metric(record.get("radius", 1.0))
        if kind == "matrix":
            dim = int(record.get("dim", 0))
            mat = np.asarray(_need(record, "matrix"), dtype=float).reshape(dim, dim)
            return flat_metric(mat)
    except (GeometryError, ValueError) as exc:
        raise ConfigError(f"metric record invalid: {exc}") from exc
    raise ConfigError(f"unknown metric kind {kind!r}")


def _points(cfg, field, count=None):
    pts = _need(cfg, field, list)
    arr = np.asarray(pts, dtype=float)
    if count is not None and (arr.ndim != 2 or arr.shape[0] != count):
        raise ConfigError(f"config field {field!r} must list {count} points")
    return arr


def _vector(record, name):
    if not isinstance(record, dict) or "origin" not in record or "head" not in record:
        raise ConfigError(f"vector {name!r} needs 'origin' and 'head'")
    try:
        return PointPairVector(
            np.asarray(record["origin"], float), np.asarray(record["head"], float)
        )
    except GeometryError as exc:
        raise ConfigError(f"vector {name!r} invalid: {exc}") from exc


def _region(cfg):
    reg = _need(cfg, "region", dict)
    if "min" not in reg or "max" not in reg:
        raise ConfigError("region needs 'min' and 'max' arrays")
    lo = np.asarray(reg["min"], dtype=float)
    hi = np.asarray(reg["max"], dtype=float)
    if lo.shape != hi.shape or np.any(lo >= hi):
        raise ConfigError("region must satisfy min < max per axis")
    return lo, hi


def _seed(cfg):
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed > 2**64 - 1:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return seed


def _tol(cfg, field="tol", default=1e-9):
    tol = cfg.get(field, default)
    if not isinstance(tol, (int, float)) or tol <= 0:
        raise ConfigError(f"{field} must be a positive number")
    return float(tol)


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _emit(report, out_path, fmt):
    payload = _json_ready(report)
    if fmt == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        rows = ["key,value"]
        flat = _flatten(payload)
        for key in sorted(flat):
            rows.append(f"{key},{_csv_value(flat[key])}")
        text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    if out_path:
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        suffix = ".json" if fmt == "json" else ".csv"
        target = out_path if out_path.endswith(suffix) else out_path + suffix
        with open(target, "w", newline="") as fh:
            fh.write(text)
        return target
    return None


def _csv_value(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, str) and ("," in v or "\n" in v):
        return '"' + v.replace('"', '""') + '"'
    return str(v)


def _flatten(obj, prefix=""):
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


def _report_shell(command, cfg):
    threads = os.environ.get("SIGMALAB_THREADS")
    if threads is not None:
        try:
            threads = int(threads)
        except ValueError as exc:
            raise ConfigError("SIGMALAB_THREADS must be an integer") from exc
    return {
        "command": command,
        "tool": {"name": "sigmalab", "version": __version__, "threads": threads},
        "config": cfg,
    }


def cmd_sigma(cfg):
    sigma = build_geometry(_need(cfg, "geometry", dict))
    pts = _points(cfg, "points", count=2)
    try:
        val = float(sigma(pts[0], pts[1]))
    except GeometryError as exc:
        raise ConfigError(str(exc)) from exc
    result = {"sigma": val}
    if "metric" in cfg:
        metric = build_metric(cfg["metric"])
        wf = world_function_from_metric(metric)
        sol = geodesic_bvp(metric, pts[0], pts[1])
        result["metric_sigma"] = float(wf(pts[0], pts[1]))
        result["bvp"] = {
            "converged": bool(sol.converged),
            "residual": float(sol.residual),
            "length": float(sol.length),
        }
    return result, 0


def cmd_parallel(cfg):
    sigma = build_geometry(_need(cfg, "geometry", dict))
    vecs = _need(cfg, "vectors", dict)
    a = _vector(vecs.get("a"), "a")
    b = _vector(vecs.get("b"), "b")
    tol = _tol(cfg, default=1e-9)
    sp = float(scalar_product(sigma, a, b))
    na = float(squared_norm(sigma, a))
    nb = float(squared_norm(sigma, b))
    parallel = None
    parallel_error = None
    try:
        parallel = bool(is_parallel(sigma, a, b, tol=tol))
    except IndefiniteNormError as exc:
        parallel_error = str(exc)
    collinear = bool(is_collinear(sigma, a, b, tol=tol))
    result = {
        "scalar_product": sp,
        "squared_norms": [na, nb],
        "parallel": parallel,
        "collinear": collinear,
        "residual": sp * sp - na * nb,
    }
    if parallel_error:
        result["parallel_error"] = parallel_error
    return result, 0


def _tube_spec(cfg, sigma):
    rec = _need(cfg, "tube", dict)
    kind = rec.get("kind", "tube-through-origin")
    try:
        return TubeSpec(
            kind,
            sigma,
            np.asarray(_need(rec, "p0"), float),
            np.asarray(_need(rec, "p1"), float),
            q0=None if rec.get("q0") is None else np.asarray(rec["q0"], float),
            aux_points=None
            if rec.get("aux_points") is None
            else np.asarray(rec["aux_points"], float),
        )
    except GeometryError as exc:
        raise ConfigError(f"tube record invalid: {exc}") from exc


def cmd_tube(cfg, out_path):
    sigma = build_geometry(_need(cfg, "geometry", dict))
    spec = _tube_spec(cfg, sigma)
    region = _region(cfg)
    budget = int(cfg.get("budget", 1024))
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    tol = _tol(cfg, default=1e-12)
    sample_set = sample_tube(spec, region, budget, tol, seed=_seed(cfg))
    result = sample_set.summary()
    stations = _need(cfg, "tube", dict).get("thickness_stations")
    if stations is not None:
        thick = []
        for st in stations:
            thick.append(
                float(
                    tube_cross_section_thickness(
                        spec, np.asarray(st, float), tol=tol
                    )
                )
            )
        result["thickness"] = thick
    if out_path and len(sample_set):
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        csv_path = out_path + ".samples.csv"
        sample_set.write_csv(csv_path)
        result["samples_csv"] = csv_path
        for pair in cfg.get("plot_pairs", []):
            proj = f"{out_path}.proj{int(pair[0])}{int(pair[1])}.csv"
            sample_set.write_projection_csv(proj, pair)
            result.setdefault("projection_csv", []).append(proj)
    code = 0 if len(sample_set) else 4
    return result, code


def cmd_conditions(cfg):
    sigma = build_geometry(_need(cfg, "geometry", dict))
    n = int(_need(cfg, "n"))
    cloud_rec = _need(cfg, "cloud", dict)
    if "points" in cloud_rec:
        cloud = np.asarray(cloud_rec["points"], dtype=float)
    else:
        box = cloud_rec.get("box")
        if box is None:
            raise ConfigError("cloud needs 'points' or a 'box' with a 'count'")
        lo = np.asarray(box["min"], float)
        hi = np.asarray(box["max"], float)
        count = int(cloud_rec.get("count", 50))
        gen = np.random.default_rng(_seed(cfg))
        cloud = lo + (hi - lo) * gen.random((count, lo.shape[0]))
    if cloud.shape[0] < n + 2:
        raise ConfigError(f"cloud must contain at least n+2 = {n + 2} points")
    region = _region(cfg) if "region" in cfg else None
    reports = run_all_conditions(
        sigma,
        n,
        cloud,
        search_region=region,
        trials=int(cfg.get("trials", 200)),
        rng=_seed(cfg),
    )
    result = {
        "conditions": [r.to_dict() for r in reports],
        "overall_pass": bool(all(r.passed for r in reports)),
    }
    return result, 0


def cmd_transport(cfg):
    metric = build_metric(_need(cfg, "metric", dict))
    rec = _need(cfg, "transport", dict)
    u0 = np.asarray(_need(rec, "u0"), dtype=float)
    path = np.asarray(_need(rec, "path"), dtype=float)
    steps = int(rec.get("steps_per_segment", 8))
    res = parallel_transport(metric, u0, path, steps_per_segment=steps)
    result = {
        "components": res.components,
        "norm_initial": res.norm_initial,
        "norm_final": res.norm_final,
        "norm_drift": res.norm_drift,
    }
    if rec.get("path2") is not None:
        path2 = np.asarray(rec["path2"], dtype=float)
        res2 = parallel_transport(metric, u0, path2, steps_per_segment=steps)
        end = path[-1]
        if not np.allclose(end, path2[-1], atol=1e-12):
            raise ConfigError("path and path2 must share their final point")
        ginv = metric.inverse(end)
        dot = float(res.components @ ginv @ res2.components)
        n1 = float(res.components @ ginv @ res.components)
        n2 = float(res2.components @ ginv @ res2.components)
        ang = float(np.arccos(np.clip(dot / np.sqrt(n1 * n2), -1.0, 1.0)))
        result["second_path"] = {
            "components": res2.components,
            "norm_drift": res2.norm_drift,
        }
        result["angle_between_results"] = ang
    if "geometry" in cfg and "vectors" in cfg:
        sigma = build_geometry(cfg["geometry"])
        a = _vector(cfg["vectors"].get("a"), "a")
        b = _vector(cfg["vectors"].get("b"), "b")
        verdict = bool(is_collinear(sigma, a, b, tol=_tol(cfg, default=1e-9)))
        again = bool(is_collinear(sigma, a, b, tol=_tol(cfg, default=1e-9)))
        result["sigma_collinear"] = verdict
        result["sigma_collinear_route_independent"] = verdict == again
    return result, 0


def cmd_compare_defs(cfg):
    sigma = build_geometry(_need(cfg, "geometry", dict))
    rec = _need(cfg, "tube", dict)
    region = _region(cfg)
    report = compare_definitions(
        sigma,
        np.asarray(_need(rec, "p0"), float),
        np.asarray(_need(rec, "p1"), float),
        np.asarray(_need(rec, "aux_points"), float),
        region,
        int(cfg.get("budget", 512)),
        _tol(cfg, default=1e-12),
        dist_tol=_tol(cfg, "dist_tol", default=1e-6),
        seed=_seed(cfg),
    )
    return report.to_dict(), 0


_COMMANDS = {
    "sigma": cmd_sigma,
    "parallel": cmd_parallel,
    "conditions": cmd_conditions,
    "transport": cmd_transport,
    "compare-defs": cmd_compare_defs,
}


def _parser():
    parser = argparse.ArgumentParser(
        prog="sigmalab",
        description="world-function geometry laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sigma", "parallel", "tube", "conditions", "transport", "compare-defs"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override config output path")
        p.add_argument(
            "--format", choices=("json", "csv"), default=None,
            help="override config output format",
        )
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        output = cfg.get("output", {}) or {}
        out_path = args.out if args.out is not None else output.get("path")
        fmt = args.format if args.format is not None else output.get("format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError("output format must be 'json' or 'csv'")
        report = _report_shell(args.command, cfg)
        if args.command == "tube":
            result, code = cmd_tube(cfg, out_path)
        else:
            result, code = _COMMANDS[args.command](cfg)
        report["result"] = result
        _emit(report, out_path, fmt)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, EvaluationError) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return 3
    except EmptyResultError as exc:
        print(f"empty result: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
