"""Sigma-immanent vector calculus.

A vector here is an ordered pair of points.  Scalar products, norms, and
the parallelism/collinearity tests below are expressed through the world
function alone: no coordinates, no connection, no transport path enters.
The verdicts are absolute in the sense that they depend only on the two
vectors and the geometry, never on a route connecting them.

Tolerance convention: the defining identities are exact in real
arithmetic; in floating point every test uses a relative residual
normalized by the largest magnitude entering the identity (with a unit
floor where the contract pins one), default 1e-9, overridable per call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .worldfunc import GeometryError, WorldFunction, as_point, as_points

__all__ = [
    "IndefiniteNormError",
    "PointPairVector",
    "pair_product",
    "scalar_product",
    "squared_norm",
    "is_parallel",
    "is_collinear",
    "collinearity_surface_residual",
    "fit_proportionality",
    "proportional_components_check",
]


class IndefiniteNormError(GeometryError):
    """A norm-based test was asked about a vector of negative squared norm."""


@dataclass(frozen=True)
class PointPairVector:
    """Ordered pair of points.  Origin and head may coincide (zero vector)."""

    origin: np.ndarray
    head: np.ndarray

    def __post_init__(self):
        o = as_point(self.origin)
        h = as_point(self.head, dim=o.shape[0])
        o.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "head", h)

    @property
    def dim(self) -> int:
        return self.origin.shape[0]

    def reversed(self) -> "PointPairVector":
        return PointPairVector(self.head, self.origin)

    def is_zero(self) -> bool:
        return bool(np.array_equal(self.origin, self.head))


def pair_product(sigma, p0, p1, q0, q1):
    """Scalar product of the point-pair vectors P0P1 and Q0Q1.

    Accumulated as (s(P0,Q1) + s(P1,Q0)) - (s(P0,Q0) + s(P1,Q1)).  With a
    symmetric world function this grouping makes the exchange identity
    (a.b) = (b.a) and the reversal identity (-a.b) = -(a.b) hold bitwise,
    not merely to rounding.  Broadcasts over stacks of points.
    """
    return (sigma(p0, q1) + sigma(p1, q0)) - (sigma(p0, q0) + sigma(p1, q1))


def _coerce(sigma: WorldFunction, v) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(v, PointPairVector):
        o, h = v.origin, v.head
    else:
        o, h = v
    o = as_points(o, sigma.dim)
    h = as_points(h, sigma.dim)
    return o, h


def scalar_product(sigma: WorldFunction, a, b):
    """(a.b) for two point-pair vectors under the world function ``sigma``.

    ``a`` and ``b`` may be :class:`PointPairVector` instances or plain
    ``(origin, head)`` pairs of points (or stacks of points).
    """
    p0, p1 = _coerce(sigma, a)
    q0, q1 = _coerce(sigma, b)
    return pair_product(sigma, p0, p1, q0, q1)


def squared_norm(sigma: WorldFunction, a):
    """(a.a); identically equal to 2*sigma(origin, head)."""
    return scalar_product(sigma, a, a)


def is_parallel(sigma: WorldFunction, a, b, tol=1e-9) -> bool:
    """Absolute parallelism test: (a.b) = |a| |b| within ``tol``.

    Requires both squared norms to be nonnegative; for indefinite
    geometries where a norm is imaginary, raises
    :class:`IndefiniteNormError` and the determinant-based
    :func:`is_collinear` applies instead.  Antiparallel vectors return
    False ((a.b) = -|a||b|).  A zero vector is parallel to anything: both
    sides of the defining identity vanish.
    """
    na = float(squared_norm(sigma, a))
    nb = float(squared_norm(sigma, b))
    sp = float(scalar_product(sigma, a, b))
    gate = tol * max(abs(sp), abs(na), abs(nb), 1.0)
    if na < -gate or nb < -gate:
        raise IndefiniteNormError("indefinite-norm vector; use is_collinear")
    rhs = float(np.sqrt(max(na, 0.0) * max(nb, 0.0)))
    denom = max(abs(sp), rhs)
    if denom == 0.0:
        return True
    return abs(sp - rhs) <= tol * denom


def is_collinear(sigma: WorldFunction, a, b, tol=1e-9) -> bool:
    """Signature-agnostic collinearity: (a.b)^2 = (a.a)(b.b) within ``tol``.

    Residual is normalized by max(|a.a * b.b|, (a.b)^2, 1).  This is the
    form that remains meaningful for spacelike vectors, where the norm
    itself is imaginary.  A zero vector is collinear with anything; with
    a = 0 included, the vanishing of the determinant is taken at face
    value (see module notes).
    """
    na = float(squared_norm(sigma, a))
    nb = float(squared_norm(sigma, b))
    sp = float(scalar_product(sigma, a, b))
    sp2 = sp * sp
    nn = na * nb
    return abs(sp2 - nn) <= tol * max(abs(nn), sp2, 1.0)


def collinearity_surface_residual(sigma: WorldFunction, p0, p1, pk, r):
    """Determinant residual of the surface holding P0R collinear to P0P1.

    Returns det [[(P0P1.P0R), (P0Pk.P0R)], [(P0P1.P0P1), (P0Pk.P0P1)]],
    zero exactly when R lies on the surface selected by the auxiliary
    point Pk.  Batched over ``r`` of shape ``(..., dim)``.
    """
    p0 = as_points(p0, sigma.dim)
    p1 = as_points(p1, sigma.dim)
    pk = as_points(pk, sigma.dim)
    r = as_points(r, sigma.dim)
    a_r = pair_product(sigma, p0, p1, p0, r)
    k_r = pair_product(sigma, p0, pk, p0, r)
    a_a = pair_product(sigma, p0, p1, p0, p1)
    k_a = pair_product(sigma, p0, pk, p0, p1)
    return a_r * k_a - k_r * a_a


def _basis_products(sigma, p0, heads, r):
    p0 = as_point(p0, sigma.dim)
    heads = [as_point(h, sigma.dim) for h in heads]
    if not heads:
        raise GeometryError("need at least one basis head")
    n = len(heads)
    gram = np.empty((n, n))
    for i, hi in enumerate(heads):
        for l, hl in enumerate(heads):
            gram[i, l] = pair_product(sigma, p0, hi, p0, hl)
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > 1e12:
        raise GeometryError("degenerate basis")
    lhs = np.array([pair_product(sigma, p0, h, p0, r) for h in heads])
    rhs = np.array([pair_product(sigma, p0, h, p0, heads[0]) for h in heads])
    return lhs, rhs


def fit_proportionality(sigma: WorldFunction, p0, heads, r):
    """Least-squares constant a with (P0Pi.P0R) = a (P0Pi.P0P1) for all i.

    ``heads[0]`` plays the role of P1.  Returns ``(a, residuals)``.
    """
    r = as_point(r, sigma.dim)
    lhs, rhs = _basis_products(sigma, p0, heads, r)
    denom = float(rhs @ rhs)
    a = 0.0 if denom == 0.0 else float(lhs @ rhs) / denom
    return a, lhs - a * rhs


def proportional_components_check(sigma: WorldFunction, p0, heads, r, tol=1e-9) -> bool:
    """True when one constant a explains all basis-component relations.

    Independent of the determinant route in
    :func:`collinearity_surface_residual`, for cross-validation.  The
    degenerate fit a = 0 (r at the origin) counts as collinear, matching
    the zero-vector convention of :func:`is_collinear`.
    """
    r = as_point(r, sigma.dim)
    lhs, rhs = _basis_products(sigma, p0, heads, r)
    denom = float(rhs @ rhs)
    a = 0.0 if denom == 0.0 else float(lhs @ rhs) / denom
    resid = lhs - a * rhs
    scale = max(1.0, float(np.max(np.abs(lhs))), abs(a) * float(np.max(np.abs(rhs))))
    return bool(np.max(np.abs(resid)) <= tol * scale)
