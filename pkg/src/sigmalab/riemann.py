"""Conventional Riemannian constructions built on a metric field.

Everything here is the coordinate-and-connection side of the story:
Christoffel symbols from central finite differences of the metric,
geodesics integrated with a fixed-step classical Runge-Kutta scheme, the
two-point geodesic problem solved by shooting with a damped Gauss-Newton
update (plus a secant-continuation fallback near hard targets), world
functions induced by a metric by squaring half the geodesic length, and
parallel transport of covariant components along polylines.

Numerical conventions
---------------------
* First-derivative steps default to eps^(1/3) * max(1, |coordinate|).
  For differentiating a *numeric* world function the step scales with
  that function's advertised evaluation noise instead of machine eps;
  otherwise the solver jitter would dominate the difference quotient.
* The metric-induced world function memoizes on coordinates quantized to
  a 1e-12 grid, so repeated evaluation is deterministic and affordable
  inside samplers.  The cache is a plain dict; concurrent writers race
  benignly (values are deterministic, last writer wins).
* Lorentzian sign: the sign of g_ik xdot^i xdot^k is constant along the
  causal geodesics in scope and the induced sigma inherits it.  A sign
  change along the path is rejected as a mixed-character geodesic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .worldfunc import (
    EvaluationError,
    GeometryError,
    WorldFunction,
    as_point,
    as_points,
)

__all__ = [
    "MetricField",
    "GeodesicSolution",
    "TransportResult",
    "flat_metric",
    "sphere_metric",
    "minkowski_metric",
    "metric_derivative",
    "christoffel",
    "geodesic_integrate",
    "geodesic_bvp",
    "world_function_from_metric",
    "sigma_gradient",
    "riemannian_scalar_product",
    "parallel_transport",
    "sphere_great_circle_points",
]

_EPS = float(np.finfo(float).eps)
_FD_REL = _EPS ** (1.0 / 3.0)
_COND_LIMIT = 1e12


class MetricField:
    """Position-dependent metric tensor g_ik(x).

    ``func`` maps points of shape ``(..., dim)`` to matrices of shape
    ``(..., dim, dim)``.  The matrix must be symmetric at every evaluated
    point; ``signature`` is ``riemannian-positive`` (all eigenvalues
    positive) or ``lorentzian`` (exactly one positive).
    """

    def __init__(self, dim, func, signature="riemannian-positive", name="metric"):
        if signature not in ("riemannian-positive", "lorentzian"):
            raise GeometryError(f"unknown metric signature {signature!r}")
        self.dim = int(dim)
        self._func = func
        self.signature = signature
        self.name = str(name)

    def matrix(self, x) -> np.ndarray:
        x = as_points(x, self.dim)
        g = np.asarray(self._func(x), dtype=float)
        want = x.shape[:-1] + (self.dim, self.dim)
        if g.shape != want:
            raise GeometryError(f"metric returned shape {g.shape}, expected {want}")
        asym = float(np.max(np.abs(g - np.swapaxes(g, -1, -2))))
        if asym > 1e-10 * max(1.0, float(np.max(np.abs(g)))):
            raise GeometryError(f"metric not symmetric at evaluated point ({asym:.3e})")
        return g

    def inverse(self, x) -> np.ndarray:
        return np.linalg.inv(self.matrix(x))

    def __repr__(self):
        return f"MetricField({self.name!r}, dim={self.dim}, signature={self.signature!r})"


def flat_metric(metric_or_dim) -> MetricField:
    """Constant-matrix metric field; identity when given an integer dim.

    Signature is detected from the eigenvalues (positive-definite or
    Lorentzian); anything else is rejected.
    """
    if np.ndim(metric_or_dim) == 0:
        g = np.eye(int(metric_or_dim))
    else:
        g = np.asarray(metric_or_dim, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise GeometryError(f"flat metric must be square, got shape {g.shape}")
    if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
        raise GeometryError("flat metric must be symmetric")
    g = 0.5 * (g + g.T)
    dim = g.shape[0]
    eigs = np.linalg.eigvalsh(g)
    if np.all(eigs > 0):
        sig = "riemannian-positive"
    elif np.sum(eigs > 0) == 1 and np.all(eigs[eigs <= 0] < 0):
        sig = "lorentzian"
    else:
        raise GeometryError(
            f"flat metric must be positive-definite or Lorentzian, eigenvalues {eigs}"
        )
    g.setflags(write=False)

    def func(x):
        return np.broadcast_to(g, x.shape[:-1] + g.shape)

    return MetricField(dim, func, sig, name=f"flat({dim})")


def sphere_metric(radius) -> MetricField:
    """Round 2-sphere metric diag(r^2, r^2 sin^2 theta) in (theta, phi)."""
    radius = float(radius)
    if radius <= 0.0:
        raise GeometryError("sphere radius must be positive")

    def func(x):
        theta = x[..., 0]
        g = np.zeros(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = radius**2
        g[..., 1, 1] = (radius * np.sin(theta)) ** 2
        return g

    return MetricField(2, func, "riemannian-positive", name=f"sphere(r={radius:g})")


def minkowski_metric() -> MetricField:
    return flat_metric(np.diag([1.0, -1.0, -1.0, -1.0]))


def _fd_steps(x, rel):
    """Per-coordinate central-difference steps, exactly representable."""
    h = rel * np.maximum(1.0, np.abs(x))
    return (x + h) - x


def metric_derivative(metric: MetricField, x, step=None) -> np.ndarray:
    """dg[..., i, j, l] = d g_ij / d x^l by central differences."""
    x = as_points(x, metric.dim)
    d = metric.dim
    rel = _FD_REL if step is None else float(step)
    h = _fd_steps(x, rel)
    out = np.empty(x.shape[:-1] + (d, d, d))
    for l in range(d):
        xp = x.copy()
        xm = x.copy()
        xp[..., l] += h[..., l]
        xm[..., l] -= h[..., l]
        out[..., l] = (metric.matrix(xp) - metric.matrix(xm)) / (
            2.0 * h[..., l][..., None, None]
        )
    return out


def christoffel(metric: MetricField, x, step=None) -> np.ndarray:
    """Christoffel symbols Gamma[..., k, i, l] = Gamma^k_{il} at x.

    Metric partials come from central finite differences with step
    eps^(1/3) * max(1, |coordinate|).  The result is symmetric in (i, l)
    exactly as computed.  Raises :class:`EvaluationError` with the
    condition number when the metric is singular at x.
    """
    x = as_points(x, metric.dim)
    g = metric.matrix(x)
    cond = float(np.max(np.linalg.cond(g)))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise EvaluationError(
            f"singular metric (condition number {cond:.3e}) at {x!r}"
        )
    dg = metric_derivative(metric, x, step)
    # M[i, j, l] = g_ij,l + g_lj,i - g_il,j
    m = dg + np.swapaxes(dg, -3, -1) - np.swapaxes(dg, -2, -1)
    ginv = np.linalg.inv(g)
    return 0.5 * np.einsum("...kj,...ijl->...kil", ginv, m)


def _gamma_lean(metric: MetricField, x, rel):
    """Same finite-difference Christoffel symbols as :func:`christoffel`,
    with one batched metric call and no per-call diagnostics.  Used by
    the integrator hot path; an exactly singular metric still raises."""
    func = metric._func
    d = metric.dim
    h = rel * np.maximum(1.0, np.abs(x))
    h = (x + h) - x
    pts = np.empty((1 + 2 * d,) + x.shape)
    pts[0] = x
    for l in range(d):
        pts[1 + 2 * l] = x
        pts[1 + 2 * l][..., l] += h[..., l]
        pts[2 + 2 * l] = x
        pts[2 + 2 * l][..., l] -= h[..., l]
    gs = np.asarray(func(pts.reshape(-1, d)), dtype=float).reshape(
        (1 + 2 * d,) + x.shape[:-1] + (d, d)
    )
    g = gs[0]
    dg = np.empty(x.shape[:-1] + (d, d, d))
    for l in range(d):
        dg[..., l] = (gs[1 + 2 * l] - gs[2 + 2 * l]) / (
            2.0 * h[..., l][..., None, None]
        )
    m = dg + np.swapaxes(dg, -3, -1) - np.swapaxes(dg, -2, -1)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise EvaluationError(f"singular metric along path: {exc}") from exc
    return 0.5 * np.einsum("...kj,...ijl->...kil", ginv, m)


@dataclass
class GeodesicSolution:
    """A geodesic path with its affine parameter, endpoints, and length.

    ``points[0]`` is the start; for boundary-value solves ``points[-1]``
    matches the requested endpoint within ``residual``.  ``causal_sign``
    is the sign of g_ik xdot^i xdot^k (always +1 for positive metrics,
    0 for a null or undetermined character).
    """

    taus: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    length: float
    converged: bool
    residual: float
    causal_sign: int = 1

    @property
    def path(self):
        """List of (tau, point, velocity) tuples."""
        return list(zip(self.taus, self.points, self.velocities))

    def write_csv(self, target):
        """CSV rows (tau, coordinates..., velocity components...), 17 digits."""
        dim = self.points.shape[1]
        header = (
            ["tau"]
            + [f"x{i}" for i in range(dim)]
            + [f"v{i}" for i in range(dim)]
        )
        close = False
        if isinstance(target, (str, bytes)):
            fh = open(target, "w", newline="")
            close = True
        else:
            fh = target
        try:
            fh.write(",".join(header) + "\n")
            for t, x, v in zip(self.taus, self.points, self.velocities):
                row = [t, *x, *v]
                fh.write(",".join(f"{val:.17g}" for val in row) + "\n")
        finally:
            if close:
                fh.close()


@dataclass
class TransportResult:
    """Covariant components after transport, with the polyline used."""

    components: np.ndarray
    path_used: np.ndarray
    norm_initial: float
    norm_final: float

    @property
    def norm_drift(self) -> float:
        """Relative drift of g^ik u_i u_k over the whole path."""
        return abs(self.norm_final - self.norm_initial) / max(
            abs(self.norm_initial), 1e-300
        )


def _rhs(metric, x, v, step):
    gamma = _gamma_lean(metric, x, _FD_REL if step is None else float(step))
    acc = -np.einsum("...kil,...i,...l->...k", gamma, v, v)
    return v, acc


def _rk4_step(metric, x, v, h, step):
    k1x, k1v = _rhs(metric, x, v, step)
    k2x, k2v = _rhs(metric, x + 0.5 * h * k1x, v + 0.5 * h * k1v, step)
    k3x, k3v = _rhs(metric, x + 0.5 * h * k2x, v + 0.5 * h * k2v, step)
    k4x, k4v = _rhs(metric, x + h * k3x, v + h * k3v, step)
    xn = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    vn = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return xn, vn


def _integrate_states(metric, x0, v0, tau_max, steps, step=None):
    """Endpoint-only RK4 propagation, batched over leading axes."""
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    h = tau_max / steps
    for _ in range(steps):
        x, v = _rk4_step(metric, x, v, h, step)
    return x, v


def geodesic_integrate(
    metric: MetricField, x0, v0, tau_max=1.0, steps=256, step=None
) -> GeodesicSolution:
    """Integrate the geodesic equation from (x0, v0) for affine time tau_max.

    Fixed-step classical Runge-Kutta.  Arc length is the quadrature of
    sqrt(|g_ik xdot^i xdot^k|); for Lorentzian metrics the sign of the
    integrand is tracked separately in ``causal_sign``.  A metric
    singularity along the way truncates the path and sets
    ``converged=False``.
    """
    x0 = as_point(x0, metric.dim)
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != x0.shape:
        raise GeometryError("velocity shape must match chart dimension")
    steps = int(steps)
    if steps < 1 or tau_max < 0:
        raise GeometryError("need steps >= 1 and tau_max >= 0")
    taus = np.linspace(0.0, tau_max, steps + 1)
    xs = np.empty((steps + 1, metric.dim))
    vs = np.empty_like(xs)
    xs[0], vs[0] = x0, v0
    h = tau_max / steps
    converged = True
    n_done = steps
    for k in range(steps):
        try:
            xs[k + 1], vs[k + 1] = _rk4_step(metric, xs[k], vs[k], h, step)
        except EvaluationError:
            converged = False
            n_done = k
            break
    taus = taus[: n_done + 1]
    xs = xs[: n_done + 1]
    vs = vs[: n_done + 1]
    return _finish_solution(metric, taus, xs, vs, converged, residual=0.0)


def _finish_solution(metric, taus, xs, vs, converged, residual):
    e = np.einsum("...ik,...i,...k->...", metric.matrix(xs), vs, vs)
    scale = max(1.0, float(np.max(np.abs(e))))
    if np.all(e > 1e-9 * scale):
        sign = 1
    elif np.all(e < -1e-9 * scale):
        sign = -1
    else:
        sign = 0
    speed = np.sqrt(np.abs(e))
    if len(taus) > 1:
        length = float(simpson(speed, x=taus))
    else:
        length = 0.0
    drift = float(np.max(np.abs(e - e[0]))) / scale
    return GeodesicSolution(
        taus=taus,
        points=xs,
        velocities=vs,
        length=length,
        converged=converged,
        residual=max(float(residual), 0.0) if converged else float(residual),
        causal_sign=sign if metric.signature == "lorentzian" else 1,
    )


def _bvp_steps(delta):
    return int(np.clip(32 * max(1.0, float(np.linalg.norm(delta))), 96, 384))


def _endpoint_norms(metric, x0, vs, target, steps, step):
    """Terminal-point miss for a batch of initial velocities; inf on blow-up."""
    x_start = np.broadcast_to(x0, vs.shape).copy()
    with np.errstate(all="ignore"):
        pf, _ = _integrate_states(metric, x_start, vs, 1.0, steps, step)
    miss = np.linalg.norm(pf - target, axis=-1)
    return pf, np.where(np.isfinite(miss), miss, np.inf)


def _shoot(metric, x0, target, v, tol, max_iter, steps, step=None):
    """Damped Gauss-Newton on the shooting residual.  Returns (v, rnorm, ok)."""
    d = x0.shape[0]
    alphas = np.array([1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125])
    vcap = 100.0 * (1.0 + float(np.linalg.norm(target - x0)))
    _, rn = _endpoint_norms(metric, x0, v[None, :], target, steps, step)
    rnorm = float(rn[0])
    for _ in range(max_iter):
        if rnorm <= tol:
            return v, rnorm, True
        dv_fd = 1e-7 * np.maximum(1.0, np.abs(v))
        ensemble = np.vstack([v, v + np.diag(dv_fd)])
        pf, rn = _endpoint_norms(metric, x0, ensemble, target, steps, step)
        rnorm = float(rn[0])
        if rnorm <= tol:
            return v, rnorm, True
        if not np.all(np.isfinite(pf)):
            return v, rnorm, False
        r = pf[0] - target
        jac = (pf[1:] - pf[0]).T / dv_fd
        try:
            dv = np.linalg.lstsq(jac, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            return v, rnorm, False
        # full step usually wins; only fall back to the damped ensemble
        vn = v + dv
        if float(np.linalg.norm(vn)) <= vcap:
            _, rn1 = _endpoint_norms(metric, x0, vn[None, :], target, steps, step)
            if rn1[0] < rnorm * (1.0 - 1e-4):
                v = vn
                rnorm = float(rn1[0])
                continue
        cands = v + alphas[1:, None] * dv
        keep = np.linalg.norm(cands, axis=1) <= vcap
        cnorm = np.full(len(cands), np.inf)
        if np.any(keep):
            _, cnorm_k = _endpoint_norms(metric, x0, cands[keep], target, steps, step)
            cnorm[keep] = cnorm_k
        best = int(np.argmin(cnorm))
        if cnorm[best] < rnorm * (1.0 - 1e-4 * alphas[1 + best]):
            v = cands[best]
            rnorm = float(cnorm[best])
            continue
        # stalled update: regularized retry, then give up
        jtj = jac.T @ jac
        lam = 1e-3 * max(np.trace(jtj) / d, 1e-30)
        ok_retry = False
        for _ in range(8):
            try:
                dv = np.linalg.solve(jtj + lam * np.eye(d), -jac.T @ r)
            except np.linalg.LinAlgError:
                break
            vn = v + dv
            if float(np.linalg.norm(vn)) <= vcap:
                _, rn2 = _endpoint_norms(metric, x0, vn[None, :], target, steps, step)
                if rn2[0] < rnorm:
                    v = vn
                    rnorm = float(rn2[0])
                    ok_retry = True
                    break
            lam *= 10.0
        if not ok_retry:
            return v, rnorm, False
    return v, rnorm, rnorm <= tol


def _solve_bvp_velocity(metric, x, xprime, tol, max_iter, steps, v0_guess, step):
    """Initial velocity shooting with secant-continuation fallback."""
    delta = xprime - x
    v = np.array(delta if v0_guess is None else v0_guess, dtype=float)
    v, rnorm, ok = _shoot(metric, x, xprime, v, tol, max_iter, steps, step)
    if not ok:
        v = delta.copy()
        for s in np.linspace(0.125, 1.0, 8):
            tgt = x + s * delta
            v, rnorm, ok = _shoot(metric, x, tgt, v, tol, 15, steps, step)
            if not ok:
                break
    return v, rnorm, ok


def geodesic_bvp(
    metric: MetricField,
    x,
    xprime,
    tol=1e-8,
    max_iter=60,
    steps=None,
    v0_guess=None,
    step=None,
) -> GeodesicSolution:
    """Geodesic segment between two points by shooting on the initial velocity.

    The unknown is the velocity at ``x`` for unit affine time; the
    initial guess is the chart straight-line secant.  Damped Gauss-Newton
    iterations stop when the terminal point matches ``xprime`` within
    ``tol`` chart distance.  If the direct solve stalls (e.g. near a
    conjugate point), the target is approached by continuation along the
    secant, warm-starting each stage.  Non-convergence returns the best
    effort with ``converged=False``; when several geodesics join the
    endpoints, the branch the solver converged to is the one reported.
    """
    x = as_point(x, metric.dim)
    xprime = as_point(xprime, metric.dim)
    delta = xprime - x
    if float(np.linalg.norm(delta)) == 0.0:
        taus = np.zeros(1)
        pts = x[None, :].copy()
        vel = np.zeros_like(pts)
        return GeodesicSolution(taus, pts, vel, 0.0, True, 0.0, 1)
    steps_ = _bvp_steps(delta) if steps is None else int(steps)
    v, rnorm, ok = _solve_bvp_velocity(
        metric, x, xprime, tol, max_iter, steps_, v0_guess, step
    )
    sol = geodesic_integrate(metric, x, v, 1.0, steps_, step)
    endpoint_miss = float(np.linalg.norm(sol.points[-1] - xprime))
    sol.converged = bool(ok and sol.converged and endpoint_miss <= tol)
    sol.residual = endpoint_miss
    return sol


def world_function_from_metric(
    metric: MetricField, bvp_tol=1e-12, steps=None, cache_quantum=1e-12
) -> WorldFunction:
    """World function sigma = (sign) * 0.5 * (geodesic length)^2.

    Each evaluation solves the two-point geodesic problem by shooting;
    with the affine parametrization over unit time, half the squared
    length equals half the (signed) initial energy g_ik v^i v^k, which
    is what gets returned -- the quadrature route in
    :func:`geodesic_integrate` agrees to the flow accuracy and is
    cross-checked in the test suite.  Results are memoized on
    coordinates quantized to ``cache_quantum`` (pairs are cached in
    canonical order, so sigma(P, Q) and sigma(Q, P) are bitwise equal),
    and consecutive evaluations warm-start from the previous solution,
    which makes finite-difference stencils cheap.  For Lorentzian
    metrics sigma carries the sign of the energy; a sign change between
    the endpoints is rejected as a mixed-character geodesic.
    Non-convergence raises :class:`EvaluationError` with the residual.
    """
    cache: dict = {}
    last: dict = {"a": None, "b": None, "v": None}
    lorentz = metric.signature == "lorentzian"

    def solve_pair(a, b):
        guess = None
        if last["a"] is not None:
            near = float(
                np.linalg.norm(a - last["a"]) + np.linalg.norm(b - last["b"])
            )
            if near < 5e-2:
                guess = last["v"]
        steps_ = _bvp_steps(b - a) if steps is None else int(steps)
        v, rnorm, ok = _solve_bvp_velocity(
            metric, a, b, bvp_tol, 60, steps_, guess, None
        )
        if not ok and guess is not None:
            v, rnorm, ok = _solve_bvp_velocity(
                metric, a, b, bvp_tol, 60, steps_, None, None
            )
        if ok:
            last["a"], last["b"], last["v"] = a, b, v
        return v, rnorm, ok, steps_

    def eval_pair(p, q):
        if np.array_equal(p, q):
            return 0.0
        kp = tuple(np.round(p / cache_quantum).astype(np.int64).tolist())
        kq = tuple(np.round(q / cache_quantum).astype(np.int64).tolist())
        key = (kp, kq) if kp <= kq else (kq, kp)
        hit = cache.get(key)
        if hit is not None:
            return hit
        a, b = (p, q) if kp <= kq else (q, p)
        v, rnorm, ok, steps_ = solve_pair(a, b)
        if not ok:
            raise EvaluationError(
                f"geodesic BVP did not converge (residual {rnorm:.3e}) "
                f"for pair {a!r} -> {b!r}"
            )
        e0 = float(v @ metric.matrix(a) @ v)
        if lorentz:
            xf, vf = _integrate_states(metric, a.copy(), v.copy(), 1.0, steps_)
            ef = float(vf @ metric.matrix(xf) @ vf)
            scale = max(abs(e0), abs(ef), 1e-12)
            if e0 * ef < 0 and min(abs(e0), abs(ef)) > 1e-9 * scale:
                raise EvaluationError(
                    "mixed-character geodesic: interval sign changes along path"
                )
        val = 0.5 * e0
        cache[key] = float(val)
        return float(val)

    def fn(p, q):
        if p.ndim == 1 and q.ndim == 1:
            return np.float64(eval_pair(p, q))
        pb, qb = np.broadcast_arrays(p, q)
        out = np.empty(pb.shape[:-1])
        for idx in np.ndindex(out.shape):
            out[idx] = eval_pair(pb[idx], qb[idx])
        return out

    wf = WorldFunction(
        fn,
        metric.dim,
        "numeric-riemannian",
        params={"metric": metric, "bvp_tol": float(bvp_tol)},
        eval_noise=max(1e-13, float(bvp_tol)),
    )
    return wf


def sigma_gradient(sigma: WorldFunction, x, xprime, step=None) -> np.ndarray:
    """Covariant gradient of sigma in its first argument, by central differences.

    The step is noise^(1/3) * max(1, |coordinate|) where the noise floor
    is the world function's ``eval_noise`` (machine eps for closed
    forms).  The Riemannian representation of the vector from x to x' is
    the *negative* of this gradient.  Evaluation failures at stencil
    points propagate.
    """
    x = as_point(x, sigma.dim)
    xprime = as_point(xprime, sigma.dim)
    noise = max(float(getattr(sigma, "eval_noise", _EPS)), _EPS)
    rel = noise ** (1.0 / 3.0) if step is None else float(step)
    h = _fd_steps(x, rel)
    grad = np.empty(sigma.dim)
    for i in range(sigma.dim):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        grad[i] = (float(sigma(xp, xprime)) - float(sigma(xm, xprime))) / (2.0 * h[i])
    return grad


def riemannian_scalar_product(
    metric: MetricField, sigma: WorldFunction, x, xprime, xsecond
) -> float:
    """g^ik(x) sigma_i(x, x') sigma_k(x, x'') for common-origin vectors."""
    x = as_point(x, metric.dim)
    gi = sigma_gradient(sigma, x, xprime)
    gk = sigma_gradient(sigma, x, xsecond)
    ginv = metric.inverse(x)
    return float(gi @ ginv @ gk)


def parallel_transport(
    metric: MetricField, u0, path, steps_per_segment=8, step=None
) -> TransportResult:
    """Transport covariant components u_i along a polyline of chart points.

    Integrates du_i = Gamma^k_{il} u_k dx^l with classical Runge-Kutta
    sub-steps on each segment; this is the index-lowered form of the
    velocity-transport law in the geodesic equation and the unique law
    that keeps two infinitesimally close vectors the same length.  The
    metric norm g^ik u_i u_k is reported before and after so the drift
    can be checked.  A singular metric on the way is rejected naming the
    offending segment.
    """
    path = as_points(path)
    if path.ndim != 2 or path.shape[0] < 2:
        raise GeometryError("path must be a polyline of at least two points")
    if path.shape[1] != metric.dim:
        raise GeometryError("path dimension does not match the metric")
    u = as_point(u0, metric.dim).copy()
    m = int(steps_per_segment)
    if m < 1:
        raise GeometryError("steps_per_segment must be >= 1")
    n0 = float(u @ metric.inverse(path[0]) @ u)
    rel = _FD_REL if step is None else float(step)
    for seg in range(path.shape[0] - 1):
        a = path[seg]
        delta = path[seg + 1] - a
        h = 1.0 / m
        try:
            cond = float(np.linalg.cond(metric.matrix(a)))
            if not np.isfinite(cond) or cond > _COND_LIMIT:
                raise EvaluationError(f"condition number {cond:.3e}")

            def rhs(tt, uu):
                gamma = _gamma_lean(metric, a + tt * delta, rel)
                return np.einsum("kil,k,l->i", gamma, uu, delta)

            for k in range(m):
                t = k * h
                k1 = rhs(t, u)
                k2 = rhs(t + 0.5 * h, u + 0.5 * h * k1)
                k3 = rhs(t + 0.5 * h, u + 0.5 * h * k2)
                k4 = rhs(t + h, u + h * k3)
                u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except EvaluationError as exc:
            raise EvaluationError(f"transport rejected at segment {seg}: {exc}") from exc
    nf = float(u @ metric.inverse(path[-1]) @ u)
    return TransportResult(
        components=u, path_used=path, norm_initial=n0, norm_final=nf
    )


def sphere_great_circle_points(p, q, count=64) -> np.ndarray:
    """Chart polyline along the great circle from p to q on the unit sphere.

    Points are (theta, phi); the longitude is unwrapped for continuity
    and shifted so the first point reproduces ``p`` exactly.  Antipodal
    endpoints have no unique arc and are rejected.  Intended for
    building transport paths and geodesic test fixtures; the radius
    drops out of the chart coordinates.
    """
    p = as_point(p, 2)
    q = as_point(q, 2)
    up = _embed(p)
    uq = _embed(q)
    cosang = float(np.clip(up @ uq, -1.0, 1.0))
    ang = float(np.arctan2(np.linalg.norm(np.cross(up, uq)), cosang))
    if ang > np.pi - 1e-12:
        raise GeometryError("antipodal endpoints do not select a unique arc")
    if ang == 0.0:
        return np.vstack([p, q])
    w = uq - cosang * up
    w = w / np.linalg.norm(w)
    t = np.linspace(0.0, ang, int(count))
    pts3 = np.cos(t)[:, None] * up + np.sin(t)[:, None] * w
    theta = np.arccos(np.clip(pts3[:, 2], -1.0, 1.0))
    phi = np.unwrap(np.arctan2(pts3[:, 1], pts3[:, 0]))
    phi += 2.0 * np.pi * np.round((p[1] - phi[0]) / (2.0 * np.pi))
    out = np.column_stack([theta, phi])
    out[0] = p
    return out


def _embed(p):
    st = np.sin(p[0])
    return np.array([st * np.cos(p[1]), st * np.sin(p[1]), np.cos(p[0])])
