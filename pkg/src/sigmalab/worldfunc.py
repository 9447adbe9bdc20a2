"""World functions: the single datum defining a geometry.

A geometry on a chart is specified entirely by its world function
``sigma(P, Q)``, equal to half the squared distance between the points P
and Q.  Unlike the distance itself, sigma stays real where the distance
would be imaginary (spacelike separations in a Lorentzian chart), which
makes it the right primitive for indefinite geometries.

Points are plain 1-D float arrays; :func:`as_point` / :func:`as_points`
validate shape and finiteness.  Every built-in evaluator broadcasts over
leading axes, so stacks of points of shape ``(..., dim)`` evaluate in a
single call.  Evaluation is pure: calling twice with equal arguments
returns bitwise-identical values.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "GeometryError",
    "EvaluationError",
    "WorldFunction",
    "as_point",
    "as_points",
    "make_euclidean",
    "make_minkowski",
    "make_distorted_minkowski",
    "make_sphere",
]

MINKOWSKI_METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
MINKOWSKI_METRIC.setflags(write=False)


class GeometryError(ValueError):
    """A geometry, point, metric, or frame violates its contract."""


class EvaluationError(RuntimeError):
    """A numerical evaluation (BVP solve, transport, sampling) failed."""


def as_point(p, dim=None) -> np.ndarray:
    """Validate a single chart point: 1-D, float, all coordinates finite."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1:
        raise GeometryError(f"point must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise GeometryError(
            f"point has {arr.shape[0]} coordinates, expected {dim}"
        )
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"point has non-finite coordinates: {arr!r}")
    return arr


def as_points(p, dim=None) -> np.ndarray:
    """Validate a point or a stack of points of shape ``(..., dim)``."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        raise GeometryError("a point needs at least one coordinate axis")
    if dim is not None and arr.shape[-1] != dim:
        raise GeometryError(
            f"points have {arr.shape[-1]} coordinates, expected {dim}"
        )
    if not np.all(np.isfinite(arr)):
        raise GeometryError("points contain non-finite coordinates")
    return arr


class WorldFunction:
    """Evaluator sigma(P, Q) with sigma(P, P) = 0 and sigma(P, Q) = sigma(Q, P).

    Attributes
    ----------
    dim : int
        Chart dimension.
    kind : str
        One of ``euclidean``, ``minkowski``, ``distorted-minkowski``,
        ``sphere``, ``numeric-riemannian``.
    params : dict
        Kind-specific parameters (metric matrix, radius, distortion
        constants, underlying metric field).
    eval_noise : float
        Absolute noise floor of one evaluation: machine epsilon for the
        closed-form kinds, solver tolerance for numeric ones.  Finite
        differencing downstream sizes its step from this.
    """

    def __init__(self, fn, dim, kind, params=None, eval_noise=None):
        self._fn = fn
        self.dim = int(dim)
        self.kind = str(kind)
        self.params = dict(params or {})
        if eval_noise is None:
            eval_noise = float(np.finfo(float).eps)
        self.eval_noise = float(eval_noise)

    def evaluate(self, p, q):
        """sigma(p, q); broadcasts over stacks of points ``(..., dim)``."""
        p = as_points(p, self.dim)
        q = as_points(q, self.dim)
        return self._fn(p, q)

    __call__ = evaluate

    def __repr__(self):
        return f"WorldFunction(kind={self.kind!r}, dim={self.dim})"


def _quadratic(g):
    """sigma for a constant metric: 0.5 * g_ik (x-x')^i (x-x')^k."""

    def fn(p, q):
        d = p - q
        return 0.5 * np.einsum("...i,ij,...j->...", d, g, d)

    return fn


def make_euclidean(dim, metric=None) -> WorldFunction:
    """Flat world function for a constant symmetric positive-definite metric.

    ``metric`` defaults to the identity.  Rejects non-symmetric or
    non-positive-definite matrices, naming the offending eigenvalue.
    """
    dim = int(dim)
    if dim < 1:
        raise GeometryError("dimension must be a positive integer")
    if metric is None:
        g = np.eye(dim)
    else:
        g = np.asarray(metric, dtype=float)
    if g.shape != (dim, dim):
        raise GeometryError(f"metric must be {dim}x{dim}, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise GeometryError("metric has non-finite entries")
    asym = float(np.max(np.abs(g - g.T)))
    if asym > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
        raise GeometryError(f"metric is not symmetric (max |g - g^T| = {asym:.3e})")
    g = 0.5 * (g + g.T)
    eigs = np.linalg.eigvalsh(g)
    if eigs[0] <= 0.0:
        raise GeometryError(
            f"metric is not positive-definite: eigenvalue {eigs[0]:.6g} <= 0"
        )
    g.setflags(write=False)
    return WorldFunction(_quadratic(g), dim, "euclidean", {"metric": g})


def make_minkowski() -> WorldFunction:
    """4-dimensional flat world function with signature (+, -, -, -)."""
    return WorldFunction(
        _quadratic(MINKOWSKI_METRIC), 4, "minkowski", {"metric": MINKOWSKI_METRIC}
    )


def make_distorted_minkowski(D, sigma0) -> WorldFunction:
    """Minkowski world function with an additive distortion above a threshold.

    sigma = sigma_M + D where sigma_M > sigma0, else sigma = sigma_M.  The
    transition is a sharp step; the threshold is never placed on test
    points.  D = 0 reproduces :func:`make_minkowski` bitwise.
    """
    D = float(D)
    sigma0 = float(sigma0)
    if D < 0.0:
        raise GeometryError("distortion constant D must be nonnegative")
    if sigma0 < 0.0:
        raise GeometryError("distortion threshold sigma0 must be nonnegative")
    base = _quadratic(MINKOWSKI_METRIC)

    def fn(p, q):
        sm = base(p, q)
        return np.where(sm > sigma0, sm + D, sm)

    return WorldFunction(
        fn, 4, "distorted-minkowski", {"D": D, "sigma0": sigma0}
    )


def make_sphere(radius) -> WorldFunction:
    """World function of the round 2-sphere in (colatitude, longitude) chart.

    sigma(P, Q) = 0.5 * (radius * central_angle)^2.  The central angle is
    computed with the arctangent form of the great-circle formula, which
    stays accurate for nearly-coincident and nearly-antipodal pairs.
    Points at the chart poles are accepted; the longitude is ignored
    there, as the embedding makes it irrelevant.
    """
    radius = float(radius)
    if radius <= 0.0:
        raise GeometryError("sphere radius must be positive")

    def fn(p, q):
        up = _sphere_embed(p)
        uq = _sphere_embed(q)
        cross = np.cross(up, uq)
        sin_ang = np.sqrt(np.einsum("...i,...i->...", cross, cross))
        cos_ang = np.einsum("...i,...i->...", up, uq)
        ang = np.arctan2(sin_ang, cos_ang)
        return 0.5 * (radius * ang) ** 2

    return WorldFunction(fn, 2, "sphere", {"radius": radius})


def _sphere_embed(p):
    """Chart point (theta, phi) -> unit vector in R^3."""
    theta = p[..., 0]
    phi = p[..., 1]
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
