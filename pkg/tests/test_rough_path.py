import io

import numpy as np
import pytest

from roughpaths.rough_path import (
    GeometricRoughPath,
    PiecewiseLinearPath,
    chen_deviation,
    group_like_deviation,
    holder_distance,
    holder_norm,
    increment,
    increments_from,
    lift_path,
    path_norm,
    restrict,
    unit_rough_path,
)
from roughpaths.tensor_algebra import TensorSeries, tensor_mul


def random_path(rng, d, n_segments, horizon=1.0):
    times = np.sort(rng.uniform(0.0, horizon, n_segments - 1))
    times = np.concatenate([[0.0], times, [horizon]])
    while np.any(np.diff(times) <= 1e-9):
        times = np.sort(rng.uniform(0.0, horizon, n_segments - 1))
        times = np.concatenate([[0.0], times, [horizon]])
    points = rng.standard_normal((n_segments + 1, d))
    return PiecewiseLinearPath(times, points)


def test_path_validation():
    with pytest.raises(ValueError):
        PiecewiseLinearPath([0.0, 0.0, 1.0], np.zeros((3, 2)))
    with pytest.raises(ValueError):
        PiecewiseLinearPath([0.0, 1.0], np.zeros((3, 2)))


def test_csv_roundtrip():
    p = PiecewiseLinearPath([0.0, 0.5, 1.0], [[0.0, 1.0], [2.0, -1.0], [3.0, 0.25]])
    q = PiecewiseLinearPath.from_csv(io.StringIO(p.to_csv()))
    assert np.allclose(p.times, q.times)
    assert np.allclose(p.points, q.points)


def test_csv_rejects_missing_column():
    bad = "t,x1\n0.0\n1.0,2.0\n"
    with pytest.raises(ValueError):
        PiecewiseLinearPath.from_csv(io.StringIO(bad))


def test_lift_single_segment():
    p = PiecewiseLinearPath([0.0, 1.0], [[0.0, 0.0], [1.0, 0.0]])
    X = lift_path(p, 2)
    end = X.value(1)
    assert np.allclose(end.level(1), [1.0, 0.0])
    expected2 = np.zeros(4)
    expected2[0] = 0.5  # e1 (x) e1 / 2
    assert np.allclose(end.level(2), expected2)


def test_lift_constant_path_is_unit():
    p = PiecewiseLinearPath([0.0, 0.3, 1.0], np.ones((3, 2)))
    X = lift_path(p, 3)
    for idx in range(3):
        g = X.value(idx)
        assert np.allclose(g.level(0), [1.0])
        for r in range(1, 4):
            assert np.allclose(g.level(r), 0.0)


def test_lift_two_segment_level_two():
    # Chen product of exp(e1) and exp(e2): level 2 is (e1e1 + e2e2)/2 + e1e2.
    p = PiecewiseLinearPath([0.0, 0.5, 1.0], [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    X = lift_path(p, 2)
    lvl2 = X.value(2).level(2).reshape(2, 2)
    expected = np.array([[0.5, 1.0], [0.0, 0.5]])
    assert np.allclose(lvl2, expected, atol=1e-15)


def test_increment_identity_and_endpoint():
    rng = np.random.default_rng(0)
    p = random_path(rng, 2, 5)
    X = lift_path(p, 3)
    unit = TensorSeries.unit(2, 3)
    ii = increment(X, 2, 2)
    for r in range(4):
        assert np.allclose(ii.level(r), unit.level(r))
    full = increment(X, 0, 5)
    end = X.value(5)
    for r in range(4):
        assert np.allclose(full.level(r), end.level(r), atol=1e-13)
    with pytest.raises(IndexError):
        increment(X, 0, 6)
    with pytest.raises(ValueError):
        increment(X, 3, 1)


def test_chen_on_random_paths():
    rng = np.random.default_rng(1)
    for _ in range(5):
        d = int(rng.integers(1, 4))
        N = int(rng.integers(2, 5))
        p = random_path(rng, d, int(rng.integers(2, 12)))
        X = lift_path(p, N)
        assert chen_deviation(X) <= 1e-12 * max(1.0, X.value(X.n_points - 1).max_abs())


def test_increments_from_matches_pointwise():
    rng = np.random.default_rng(2)
    p = random_path(rng, 2, 6)
    X = lift_path(p, 3)
    rows = increments_from(X, 2)
    for t in range(2, 7):
        inc = increment(X, 2, t)
        for r in range(4):
            assert np.allclose(rows[r][t], inc.level(r), atol=1e-13)


def test_all_increments_group_like():
    rng = np.random.default_rng(3)
    p = random_path(rng, 2, 4)
    X = lift_path(p, 3)
    assert group_like_deviation(X) <= 1e-12 * max(1.0, X.value(4).max_abs()) ** 3


def test_reparametrization_invariance_of_endpoint():
    rng = np.random.default_rng(4)
    pts = rng.standard_normal((6, 2))
    p1 = PiecewiseLinearPath(np.linspace(0, 1, 6), pts)
    p2 = PiecewiseLinearPath(np.cumsum(np.concatenate([[0.0], rng.uniform(0.1, 1.0, 5)])), pts)
    X1 = lift_path(p1, 3)
    X2 = lift_path(p2, 3)
    a, b = X1.value(5), X2.value(5)
    for r in range(4):
        assert np.allclose(a.level(r), b.level(r), atol=1e-12)


def test_holder_norm_linear_path():
    w = np.array([2.0, -1.0])
    times = np.linspace(0.0, 1.0, 9)
    p = PiecewiseLinearPath(times, np.outer(times, w))
    X = lift_path(p, 2)
    beta = 0.4
    # |w| (t-s)^(1-beta) is maximized at (0, 1) for a linear path on [0, 1].
    assert holder_norm(X, 1, beta) == pytest.approx(np.abs(w).sum())
    # level 2 is w (x) w (t-s)^2 / 2; ratio peaks at (0, 1) when beta <= 1/2.
    assert holder_norm(X, 2, beta) == pytest.approx(np.abs(np.outer(w, w)).sum() / 2.0)


def test_holder_norm_constant_path():
    p = PiecewiseLinearPath([0.0, 1.0, 2.0], np.zeros((3, 2)))
    X = lift_path(p, 2)
    assert holder_norm(X, 1, 0.5) == 0.0
    assert holder_norm(X, 2, 0.5) == 0.0


def test_holder_norm_monotone_under_refinement():
    rng = np.random.default_rng(5)
    p = random_path(rng, 2, 6)
    X = lift_path(p, 2)
    Xr = lift_path(p.refine_midpoints(), 2)
    for i in (1, 2):
        assert holder_norm(Xr, i, 0.45) >= holder_norm(X, i, 0.45) - 1e-13


def test_holder_distance_properties():
    rng = np.random.default_rng(6)
    times = np.linspace(0, 1, 7)
    pa = PiecewiseLinearPath(times, rng.standard_normal((7, 2)))
    pb = PiecewiseLinearPath(times, rng.standard_normal((7, 2)))
    Xa, Xb = lift_path(pa, 3), lift_path(pb, 3)
    assert holder_distance(Xa, Xa, 1 / 3) == 0.0
    assert holder_distance(Xa, Xb, 1 / 3) == pytest.approx(holder_distance(Xb, Xa, 1 / 3))
    # Distance to the unit path recovers the path norm.
    assert holder_distance(Xa, unit_rough_path(Xa), 1 / 3) == pytest.approx(path_norm(Xa, 1 / 3))
    pc = PiecewiseLinearPath(np.linspace(0, 1, 5), rng.standard_normal((5, 2)))
    with pytest.raises(ValueError):
        holder_distance(Xa, lift_path(pc, 3), 1 / 3)


def test_restrict_rebases_increments():
    rng = np.random.default_rng(7)
    p = random_path(rng, 2, 8)
    X = lift_path(p, 3)
    sub = restrict(X, 2, 6)
    assert sub.n_points == 5
    for m in range(5):
        expected = increment(X, 2, 2 + m)
        got = sub.value(m)
        for r in range(4):
            assert np.allclose(got.level(r), expected.level(r), atol=1e-13)
    # Chen consistency survives rebasing.
    assert chen_deviation(sub) < 1e-12 * max(1.0, sub.value(4).max_abs())


def test_step_increments_chain_to_endpoint():
    rng = np.random.default_rng(8)
    p = random_path(rng, 2, 5)
    X = lift_path(p, 2)
    acc = TensorSeries.unit(2, 2)
    for step in X.step_increments():
        acc = tensor_mul(acc, step)
    end = X.value(5)
    for r in range(3):
        assert np.allclose(acc.level(r), end.level(r), atol=1e-13)
