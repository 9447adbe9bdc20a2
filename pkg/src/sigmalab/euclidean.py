"""Numerical checks that a world function describes proper Euclidean n-space.

Four conditions characterize the n-dimensional proper Euclidean geometry
among world-function geometries:

* I   - some (n+1)-point frame has a nonsingular Gram determinant while
        every sampled larger frame has a vanishing one (the geometry has
        rank exactly n);
* II  - sigma is reconstructed exactly from frame coordinates through
        the inverse Gram matrix;
* III - the Gram matrix has only positive eigenvalues;
* IV  - the frame-coordinate map is a bijection: each coordinate target
        has one and only one solution point.

The conditions are exact statements over infinite families; at desk
scale they are checked on randomized finite samples with documented
trial counts and tolerances, and a pass means "no counterexample
found".  Determinant tolerances are normalized by the Hadamard bound
(product of Gram row norms), which stays meaningful for indefinite
geometries where diagonal entries can vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import root

from .vectors import pair_product
from .worldfunc import GeometryError, WorldFunction, as_point, as_points

__all__ = [
    "BasisFrame",
    "ConditionReport",
    "gram_matrix",
    "gram_determinant",
    "check_condition_I",
    "sigma_coordinates",
    "check_condition_II",
    "check_condition_III",
    "check_condition_IV",
    "run_all_conditions",
]


@dataclass
class ConditionReport:
    """Outcome of one condition check, with a diagnostic witness record."""

    condition: str
    passed: bool
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "passed": bool(self.passed),
            "witness": _plain(self.witness),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def gram_matrix(sigma: WorldFunction, p0, heads) -> np.ndarray:
    """Gram matrix G[i, l] = (P0Pi . P0Pl) of the basis vectors at p0."""
    p0 = as_point(p0, sigma.dim)
    heads = as_points(np.atleast_2d(np.asarray(heads, dtype=float)), sigma.dim)
    n = heads.shape[0]
    g = np.empty((n, n))
    for i in range(n):
        for l in range(i, n):
            val = float(pair_product(sigma, p0, heads[i], p0, heads[l]))
            g[i, l] = val
            g[l, i] = val
    return g


def gram_determinant(sigma: WorldFunction, p0, heads) -> float:
    """Determinant of the Gram matrix of basis vectors P0Pi.

    Heads are put in a canonical (lexicographic) order before the LU
    factorization; a symmetric permutation leaves the determinant
    unchanged, so this makes the reported value exactly independent of
    the order in which the heads are supplied.
    """
    heads = np.atleast_2d(np.asarray(heads, dtype=float))
    order = np.lexsort(heads.T[::-1])
    g = gram_matrix(sigma, p0, heads[order])
    return float(np.linalg.det(g))


def _hadamard_scale(g: np.ndarray) -> float:
    rows = np.sqrt(np.einsum("ij,ij->i", g, g))
    return float(np.prod(np.maximum(rows, 1e-300)))


@dataclass
class BasisFrame:
    """An origin with n basis heads, their Gram matrix, and its inverse."""

    p0: np.ndarray
    heads: np.ndarray
    gram: np.ndarray
    gram_inverse: np.ndarray

    @classmethod
    def build(cls, sigma: WorldFunction, p0, heads) -> "BasisFrame":
        p0 = as_point(p0, sigma.dim)
        heads = as_points(np.atleast_2d(np.asarray(heads, dtype=float)), sigma.dim)
        g = gram_matrix(sigma, p0, heads)
        try:
            ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise GeometryError(f"singular frame Gram matrix: {exc}") from exc
        miss = float(np.max(np.abs(g @ ginv - np.eye(g.shape[0]))))
        if miss > 1e-10:
            raise GeometryError(
                f"frame Gram matrix badly conditioned (inverse check {miss:.3e})"
            )
        return cls(p0=p0, heads=heads, gram=g, gram_inverse=ginv)

    @property
    def n(self) -> int:
        return self.heads.shape[0]


def sigma_coordinates(sigma: WorldFunction, frame: BasisFrame, p) -> np.ndarray:
    """Covariant frame coordinates x_i(P) = (P0Pi . P0P).

    Batched: ``p`` may be a stack of points of shape (..., dim); the
    result then has shape (..., n).
    """
    p = as_points(p, sigma.dim)
    cols = [
        pair_product(sigma, frame.p0, frame.heads[i], frame.p0, p)
        for i in range(frame.n)
    ]
    return np.stack(cols, axis=-1)


def check_condition_I(
    sigma: WorldFunction, n, point_cloud, trials=200, tol=1e-8, rng=None
) -> ConditionReport:
    """Rank test: some (n+1)-subset spans, all sampled (n+2)-subsets do not.

    Samples ``trials`` random subsets of each size from the cloud.  A
    subset passes the span test when |F_n| exceeds tol times the
    Hadamard scale of its Gram matrix; the overflow test requires every
    sampled |F_{n+1}| to stay below the same relative threshold.
    """
    n = int(n)
    cloud = as_points(np.asarray(point_cloud, dtype=float), sigma.dim)
    m = cloud.shape[0]
    if m < n + 2:
        raise GeometryError(f"need at least n+2 = {n + 2} points, got {m}")
    gen = np.random.default_rng(rng)
    best_span = (-np.inf, None)
    worst_over = (-np.inf, None)
    for _ in range(int(trials)):
        idx = gen.choice(m, size=n + 1, replace=False)
        g = gram_matrix(sigma, cloud[idx[0]], cloud[idx[1:]])
        ratio = abs(float(np.linalg.det(g))) / _hadamard_scale(g)
        if ratio > best_span[0]:
            best_span = (ratio, idx)
        idx2 = gen.choice(m, size=n + 2, replace=False)
        g2 = gram_matrix(sigma, cloud[idx2[0]], cloud[idx2[1:]])
        ratio2 = abs(float(np.linalg.det(g2))) / _hadamard_scale(g2)
        if ratio2 > worst_over[0]:
            worst_over = (ratio2, idx2)
    passed = best_span[0] > tol and worst_over[0] < tol
    witness = {
        "trials": int(trials),
        "tol": float(tol),
        "best_span_ratio": best_span[0],
        "best_span_points": cloud[best_span[1]],
        "worst_overflow_ratio": worst_over[0],
        "worst_overflow_points": cloud[worst_over[1]],
    }
    if not passed:
        witness["reason"] = (
            "no spanning subset found" if best_span[0] <= tol
            else "a larger subset still spans"
        )
    return ConditionReport("I", passed, witness)


def check_condition_II(
    sigma: WorldFunction, frame: BasisFrame, point_pairs, tol=1e-9
) -> ConditionReport:
    """Reconstruction test: sigma(P,Q) = 0.5 g^ik dx_i dx_k on sampled pairs."""
    pairs = as_points(np.asarray(point_pairs, dtype=float), sigma.dim)
    if pairs.ndim != 3 or pairs.shape[1] != 2:
        raise GeometryError("point_pairs must have shape (k, 2, dim)")
    xp = sigma_coordinates(sigma, frame, pairs[:, 0])
    xq = sigma_coordinates(sigma, frame, pairs[:, 1])
    dx = xp - xq
    recon = 0.5 * np.einsum("ki,il,kl->k", dx, frame.gram_inverse, dx)
    direct = np.asarray(sigma(pairs[:, 0], pairs[:, 1]))
    resid = np.abs(direct - recon) / np.maximum(np.abs(direct), 1.0)
    worst = int(np.argmax(resid))
    passed = bool(resid[worst] <= tol)
    witness = {
        "tol": float(tol),
        "max_residual": float(resid[worst]),
        "worst_pair": pairs[worst],
        "sigma_direct": float(direct[worst]),
        "sigma_reconstructed": float(recon[worst]),
    }
    return ConditionReport("II", passed, witness)


def check_condition_III(frame: BasisFrame, tol=1e-12) -> ConditionReport:
    """Eigenvalue test: the frame Gram matrix is positive-definite."""
    eigs = np.linalg.eigvalsh(frame.gram)
    floor = tol * max(1.0, float(np.max(np.abs(eigs))))
    passed = bool(eigs[0] > floor)
    witness = {"eigenvalues": eigs, "threshold": floor}
    return ConditionReport("III", passed, witness)


def check_condition_IV(
    sigma: WorldFunction,
    frame: BasisFrame,
    y_samples,
    search_region,
    tol=1e-8,
    starts=8,
    cluster_radius=1e-6,
    rng=None,
) -> ConditionReport:
    """Bijectivity test: each coordinate target has exactly one solution.

    For each sampled target y the system (P0Pi . P0P) = y_i is solved by
    multi-start root finding with starts drawn from ``search_region``
    (the report states the region; global bijectivity is not verifiable
    numerically).  Converged solutions are merged into clusters of
    chart radius ``cluster_radius``; the condition holds when every
    target yields exactly one cluster.
    """
    ys = np.atleast_2d(np.asarray(y_samples, dtype=float))
    if ys.shape[1] != frame.n:
        raise GeometryError("y_samples must have one component per basis vector")
    lo = np.asarray(search_region[0], dtype=float)
    hi = np.asarray(search_region[1], dtype=float)
    if lo.shape != (sigma.dim,) or hi.shape != (sigma.dim,) or np.any(lo >= hi):
        raise GeometryError("search_region must be a (lo, hi) box with lo < hi")
    gen = np.random.default_rng(rng)
    start_pts = lo + (hi - lo) * gen.random((int(starts), sigma.dim))
    bad = []
    counts = []
    for y in ys:
        def fun(p, _y=y):
            return sigma_coordinates(sigma, frame, p) - _y

        sols = []
        for x0 in start_pts:
            try:
                res = root(fun, x0, method="hybr")
            except Exception:
                continue
            if not res.success:
                continue
            miss = float(np.max(np.abs(fun(res.x))))
            if miss > tol * max(1.0, float(np.max(np.abs(y)))):
                continue
            sols.append(res.x)
        clusters: list[np.ndarray] = []
        for s in sols:
            for c in clusters:
                if np.linalg.norm(s - c) <= cluster_radius:
                    break
            else:
                clusters.append(s)
        counts.append(len(clusters))
        if len(clusters) != 1:
            bad.append({"y": y, "clusters": [c for c in clusters]})
    passed = not bad
    witness = {
        "region": {"lo": lo, "hi": hi},
        "tol": float(tol),
        "starts": int(starts),
        "cluster_counts": counts,
    }
    if bad:
        witness["offending_targets"] = bad
    return ConditionReport("IV", passed, witness)


def _spanning_frame(sigma, n, cloud, trials, rng):
    """Best-conditioned (n+1)-point frame found by random search."""
    gen = np.random.default_rng(rng)
    m = cloud.shape[0]
    best = (-np.inf, None)
    for _ in range(int(trials)):
        idx = gen.choice(m, size=n + 1, replace=False)
        g = gram_matrix(sigma, cloud[idx[0]], cloud[idx[1:]])
        ratio = abs(float(np.linalg.det(g))) / _hadamard_scale(g)
        if ratio > best[0]:
            best = (ratio, idx)
    idx = best[1]
    return BasisFrame.build(sigma, cloud[idx[0]], cloud[idx[1:]])


def run_all_conditions(
    sigma: WorldFunction,
    n,
    point_cloud,
    search_region=None,
    trials=200,
    tol_rank=1e-8,
    tol_recon=1e-9,
    tol_solve=1e-8,
    n_pairs=100,
    n_targets=6,
    rng=None,
) -> list[ConditionReport]:
    """Run conditions I-IV off one point cloud; returns the four reports.

    The frame for II-IV is the best-conditioned (n+1)-subset of the
    cloud; condition II pairs and condition IV targets are drawn from
    the cloud, so the targets are reachable whenever the geometry really
    is flat.  ``search_region`` defaults to the cloud bounding box.
    """
    cloud = as_points(np.asarray(point_cloud, dtype=float), sigma.dim)
    gen = np.random.default_rng(rng)
    reports = [
        check_condition_I(sigma, n, cloud, trials=trials, tol=tol_rank, rng=gen)
    ]
    frame = _spanning_frame(sigma, int(n), cloud, trials, gen)
    m = cloud.shape[0]
    pairs = cloud[gen.integers(0, m, size=(int(n_pairs), 2))]
    reports.append(check_condition_II(sigma, frame, pairs, tol=tol_recon))
    reports.append(check_condition_III(frame))
    if search_region is None:
        pad = 0.25 * (cloud.max(axis=0) - cloud.min(axis=0) + 1.0)
        search_region = (cloud.min(axis=0) - pad, cloud.max(axis=0) + pad)
    targets = sigma_coordinates(
        sigma, frame, cloud[gen.choice(m, size=int(n_targets), replace=False)]
    )
    reports.append(
        check_condition_IV(
            sigma, frame, targets, search_region, tol=tol_solve, rng=gen
        )
    )
    return reports
