import numpy as np
import pytest

import sigmalab as sl
from sigmalab import GeometryError

from conftest import random_points_for


def test_euclidean_identity_metric_values():
    e2 = sl.make_euclidean(2)
    assert float(e2([0, 0], [3, 4])) == 12.5
    assert float(e2([1.5, -2.0], [1.5, -2.0])) == 0.0


def test_euclidean_diagonal_metric():
    wf = sl.make_euclidean(2, [[2.0, 0.0], [0.0, 1.0]])
    assert float(wf([0, 0], [1, 1])) == 1.5


def test_euclidean_rejects_bad_metrics():
    with pytest.raises(GeometryError, match="symmetric"):
        sl.make_euclidean(2, [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(GeometryError, match="eigenvalue"):
        sl.make_euclidean(2, [[1.0, 0.0], [0.0, -2.0]])
    with pytest.raises(GeometryError):
        sl.make_euclidean(2, np.eye(3))


def test_minkowski_values():
    mk = sl.make_minkowski()
    o = [0, 0, 0, 0]
    assert float(mk(o, [1, 0, 0, 0])) == 0.5
    assert float(mk(o, [0, 1, 0, 0])) == -0.5
    assert float(mk(o, [1, 1, 0, 0])) == 0.0


def test_distorted_minkowski_step():
    dm = sl.make_distorted_minkowski(0.01, 0.005)
    o = [0, 0, 0, 0]
    assert float(dm(o, [1, 0, 0, 0])) == pytest.approx(0.51, abs=0)
    assert float(dm(o, [0, 1, 0, 0])) == -0.5
    with pytest.raises(GeometryError):
        sl.make_distorted_minkowski(-0.1, 0.0)
    with pytest.raises(GeometryError):
        sl.make_distorted_minkowski(0.1, -1.0)


def test_distorted_zero_agrees_with_minkowski_bitwise():
    mk = sl.make_minkowski()
    dm = sl.make_distorted_minkowski(0.0, 0.005)
    rng = np.random.default_rng(11)
    p = rng.uniform(-5, 5, (500, 4))
    q = rng.uniform(-5, 5, (500, 4))
    assert np.array_equal(np.asarray(mk(p, q)), np.asarray(dm(p, q)))


def test_sphere_closed_form_oracle():
    # north pole to equator: quarter circle
    sp = sl.make_sphere(1.0)
    assert float(sp([0.0, 0.3], [np.pi / 2, 0.0])) == pytest.approx(
        np.pi**2 / 8, rel=1e-15
    )
    assert float(sp([1.1, 0.4], [1.1, 0.4])) == 0.0
    # antipodal points on radius 2
    sp2 = sl.make_sphere(2.0)
    assert float(sp2([np.pi / 2, 0.0], [np.pi / 2, np.pi])) == pytest.approx(
        2 * np.pi**2, rel=1e-15
    )
    with pytest.raises(GeometryError):
        sl.make_sphere(0.0)


def test_sphere_pole_longitude_irrelevant():
    sp = sl.make_sphere(1.0)
    a = float(sp([0.0, 0.0], [0.7, 0.3]))
    b = float(sp([0.0, 2.1], [0.7, 0.3]))
    assert a == b


def test_symmetry_and_coincidence_exact(five_geometries):
    rng = np.random.default_rng(7)
    for sigma in five_geometries:
        p = random_points_for(sigma, rng, 1000)
        q = random_points_for(sigma, rng, 1000)
        spq = np.asarray(sigma(p, q))
        sqp = np.asarray(sigma(q, p))
        assert np.array_equal(spq, sqp), sigma.kind
        assert np.all(np.asarray(sigma(p, p)) == 0.0), sigma.kind


def test_euclidean_identity_within_4_ulp():
    for n in (1, 2, 3, 5):
        wf = sl.make_euclidean(n)
        rng = np.random.default_rng(n)
        p = rng.uniform(-10, 10, (300, n))
        q = rng.uniform(-10, 10, (300, n))
        got = np.asarray(wf(p, q))
        want = 0.5 * np.sum((p - q) ** 2, axis=1)
        assert np.all(np.abs(got - want) <= 4 * np.spacing(np.abs(want)))


def test_sphere_satisfies_eikonal_identity():
    # g^ik s_i s_k = 2 s under central finite differences
    sp = sl.make_sphere(1.0)
    metric = sl.sphere_metric(1.0)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        x = np.array([rng.uniform(0.4, np.pi - 0.4), rng.uniform(-1.5, 1.5)])
        y = np.array([rng.uniform(0.4, np.pi - 0.4), rng.uniform(-1.5, 1.5)])
        if float(sp(x, y)) < 5e-3:
            continue
        g = sl.sigma_gradient(sp, x, y)
        lhs = float(g @ metric.inverse(x) @ g)
        worst = max(worst, abs(lhs - 2.0 * float(sp(x, y))))
    assert worst < 1e-6


def test_point_validation():
    with pytest.raises(GeometryError):
        sl.as_point([[1.0, 2.0]])
    with pytest.raises(GeometryError):
        sl.as_point([1.0, np.nan])
    with pytest.raises(GeometryError):
        sl.make_euclidean(2)([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])


def test_evaluation_is_deterministic(five_geometries):
    rng = np.random.default_rng(5)
    for sigma in five_geometries:
        p = random_points_for(sigma, rng, 10)
        q = random_points_for(sigma, rng, 10)
        a = np.asarray(sigma(p, q))
        b = np.asarray(sigma(p, q))
        assert np.array_equal(a, b)
