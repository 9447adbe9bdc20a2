import numpy as np
import pytest

import sigmalab as sl


def embed_sphere(p):
    """Chart (theta, phi) -> unit vector in R^3."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    u = np.column_stack(
        [
            np.sin(p[:, 0]) * np.cos(p[:, 1]),
            np.sin(p[:, 0]) * np.sin(p[:, 1]),
            np.cos(p[:, 0]),
        ]
    )
    return u[0] if u.shape[0] == 1 else u


def chart_sphere(u):
    return np.array(
        [np.arccos(np.clip(u[2], -1.0, 1.0)), np.arctan2(u[1], u[0])]
    )


def random_sphere_pair(rng, theta_lo=0.1, theta_hi=3.0, band=0.35):
    """Chart pair at central angle in [theta_lo, theta_hi] whose minimal arc
    stays inside the colatitude band (no pole grazing, chart-continuous
    longitude representative)."""
    while True:
        p = np.array(
            [rng.uniform(band + 0.05, np.pi - band - 0.05), rng.uniform(-1.0, 1.0)]
        )
        ang = rng.uniform(theta_lo, theta_hi)
        u = embed_sphere(p)
        ax = np.cross(u, rng.standard_normal(3))
        ax /= np.linalg.norm(ax)
        ts = np.linspace(0.0, ang, 64)
        arc = np.cos(ts)[:, None] * u[None, :] + np.sin(ts)[:, None] * np.cross(ax, u)[None, :]
        if np.max(np.abs(arc[:, 2])) > np.cos(band):
            continue
        phi = np.unwrap(np.arctan2(arc[:, 1], arc[:, 0]))
        phi += 2.0 * np.pi * np.round((p[1] - phi[0]) / (2.0 * np.pi))
        q = np.array([np.arccos(np.clip(arc[-1, 2], -1.0, 1.0)), phi[-1]])
        return p, q, ang


def tilted_octant_loop(n_per_side=220):
    """Geodesic triangle with three right angles (one octant), tilted so the
    whole loop stays in colatitude [0.9, 2.48] away from the chart poles.
    Returns (polyline, vertexA).  Enclosed solid angle is pi/2."""
    beta = 0.9
    rot = np.array(
        [
            [np.cos(beta), 0.0, np.sin(beta)],
            [0.0, 1.0, 0.0],
            [-np.sin(beta), 0.0, np.cos(beta)],
        ]
    )
    a3 = rot @ np.array([1.0, 0.0, 0.0])
    b3 = np.array([0.0, 1.0, 0.0])
    c3 = rot @ np.array([0.0, 0.0, 1.0])
    va, vb, vc = chart_sphere(a3), chart_sphere(b3), chart_sphere(c3)
    path = np.vstack(
        [
            sl.sphere_great_circle_points(va, vb, n_per_side),
            sl.sphere_great_circle_points(vb, vc, n_per_side)[1:],
            sl.sphere_great_circle_points(vc, va, n_per_side)[1:],
        ]
    )
    return path, va


def sphere_tangent_frame_coords(metric, p, u_cov):
    """Components of a covariant vector in the orthonormal tangent frame."""
    ginv = metric.inverse(p)
    uc = ginv @ u_cov
    return np.array([uc[0], uc[1] * np.sin(p[0])])


@pytest.fixture(scope="session")
def five_geometries():
    """The built-in world functions exercised by the algebra properties."""
    return [
        sl.make_euclidean(2),
        sl.make_euclidean(3, np.diag([2.0, 1.0, 0.5])),
        sl.make_minkowski(),
        sl.make_distorted_minkowski(0.01, 0.005),
        sl.make_sphere(1.0),
    ]


def random_points_for(sigma, rng, n):
    """Random chart points appropriate for each geometry kind."""
    if sigma.kind == "sphere":
        return np.column_stack(
            [rng.uniform(0.3, np.pi - 0.3, n), rng.uniform(-2.0, 2.0, n)]
        )
    return rng.uniform(-10.0, 10.0, (n, sigma.dim))
