import numpy as np
import pytest

from roughpaths.controlled_path import (
    ControlledPath,
    canonical_lift,
    concatenate,
    default_alpha,
    distance,
    level_holder_norm,
    path_add,
    path_scale,
    path_sub,
    remainder,
    remainder_rows,
    restrict_path,
    seminorm,
    triple_norm,
    zero_remainder_path,
)
from roughpaths.rough_path import GeometricRoughPath, PiecewiseLinearPath, increments_from, lift_path


def random_driver(rng, d, N, n_segments, horizon=1.0):
    times = np.linspace(0.0, horizon, n_segments + 1)
    points = rng.standard_normal((n_segments + 1, d))
    return lift_path(PiecewiseLinearPath(times, points), N)


def random_controlled(rng, X, dim_u, alpha=None):
    a = default_alpha(X.N, X.beta) if alpha is None else alpha
    levels = [rng.standard_normal((X.n_points, dim_u, X.d**i)) for i in range(X.N)]
    return ControlledPath(X.times, X.d, X.N, dim_u, a, levels)


def test_constructor_validates_shapes():
    X = random_driver(np.random.default_rng(0), 2, 3, 4)
    with pytest.raises(ValueError):
        ControlledPath(X.times, 2, 3, 1, 0.3, [np.zeros((5, 1, 1)), np.zeros((5, 1, 2)), np.zeros((5, 1, 3))])


def test_canonical_lift_remainders_vanish():
    rng = np.random.default_rng(1)
    path = PiecewiseLinearPath(np.linspace(0, 1, 7), rng.standard_normal((7, 2)))
    X = lift_path(path, 3)
    Y = canonical_lift(X)
    for i in range(3):
        for s in range(7):
            rows = remainder_rows(Y, X, i, s)
            assert np.max(np.abs(rows)) < 1e-13
    # Independent check: the level-0 remainder telescopes polyline increments.
    for s in range(6):
        for t in range(s, 7):
            direct = (path.points[t] - path.points[s]) - (path.points[t] - path.points[s])
            assert np.allclose(remainder(Y, X, 0, s, t)[:, 0], direct, atol=1e-13)
    assert seminorm(Y, X) < 1e-12


def test_constant_path_zero_remainder():
    X = random_driver(np.random.default_rng(2), 2, 3, 5)
    levels = [np.ones((6, 1, 1)), np.zeros((6, 1, 2)), np.zeros((6, 1, 4))]
    Y = ControlledPath(X.times, 2, 3, 1, 0.3, levels)
    for i in range(3):
        assert np.max(np.abs(remainder_rows(Y, X, i, 0))) == 0.0
    assert seminorm(Y, X) == 0.0


def test_top_level_remainder_is_plain_increment():
    rng = np.random.default_rng(3)
    X = random_driver(rng, 2, 3, 4)
    Y = random_controlled(rng, X, 2)
    s, t = 1, 3
    top = remainder(Y, X, 2, s, t)
    assert np.allclose(top, Y.levels[2][t] - Y.levels[2][s])


def test_remainder_level_out_of_range():
    rng = np.random.default_rng(4)
    X = random_driver(rng, 2, 3, 4)
    Y = random_controlled(rng, X, 1)
    with pytest.raises(ValueError):
        remainder(Y, X, 3, 0, 1)


def test_seminorm_zero_path():
    X = random_driver(np.random.default_rng(5), 2, 3, 4)
    Y = ControlledPath(X.times, 2, 3, 1, 0.3, [np.zeros((5, 1, 2**i)) for i in range(3)])
    assert seminorm(Y, X) == 0.0
    assert triple_norm(Y, X) == 0.0


def test_distance_pseudometric():
    rng = np.random.default_rng(6)
    X = random_driver(rng, 2, 3, 5)
    Ya, Yb, Yc = (random_controlled(rng, X, 2) for _ in range(3))
    assert distance(Ya, Ya, X, X) == 0.0
    assert distance(Ya, Yb, X, X) == distance(Yb, Ya, X, X)
    dab = distance(Ya, Yb, X, X)
    dbc = distance(Yb, Yc, X, X)
    dac = distance(Ya, Yc, X, X)
    assert dac <= dab + dbc + 1e-12
    zero = ControlledPath(X.times, 2, 3, 2, Ya.alpha, [np.zeros_like(l) for l in Ya.levels])
    assert distance(Ya, zero, X, X) == pytest.approx(seminorm(Ya, X))


def test_triple_norm_homogeneity():
    rng = np.random.default_rng(7)
    X = random_driver(rng, 2, 3, 4)
    Y = random_controlled(rng, X, 1)
    base = triple_norm(Y, X)
    assert triple_norm(path_scale(Y, -2.5), X) == pytest.approx(2.5 * base)


def test_completeness_proxy_linear_decay():
    rng = np.random.default_rng(8)
    X = random_driver(rng, 2, 3, 4)
    Y = random_controlled(rng, X, 1)
    Z = random_controlled(rng, X, 1)
    base = triple_norm(Z, X)
    for n in range(1, 6):
        Yn = path_add(Y, path_scale(Z, 2.0**-n))
        assert triple_norm(path_sub(Yn, Y), X) == pytest.approx(2.0**-n * base, rel=1e-12)


def test_canonical_seminorm_ignores_top_driver_level():
    rng = np.random.default_rng(9)
    X = random_driver(rng, 2, 3, 5)
    Y = canonical_lift(X)
    levels = [arr.copy() for arr in X.levels]
    levels[3] = levels[3] + rng.standard_normal(levels[3].shape)
    X_perturbed = GeometricRoughPath(X.times, X.d, X.N, X.beta, levels)
    assert seminorm(Y, X_perturbed) == seminorm(Y, X)


def test_cross_interval_remainder_identity():
    # RY^k_{s,t} = RY^k_{u,t} + sum_j RY^j_{s,u} X^{j-k}_{u,t} for any levels.
    rng = np.random.default_rng(10)
    X = random_driver(rng, 2, 3, 8)
    Y = random_controlled(rng, X, 2)
    scale = max(np.max(np.abs(l)) for l in Y.levels)
    for s, u, t in [(0, 3, 7), (1, 4, 6), (2, 5, 8)]:
        xrows = increments_from(X, u)
        for k in range(Y.N):
            lhs = remainder(Y, X, k, s, t)
            rhs = remainder(Y, X, k, u, t)
            for j in range(k, Y.N):
                block = remainder(Y, X, j, s, u)
                cube = block.reshape(Y.dim_u, X.d ** (j - k), X.d**k)
                rhs = rhs + np.einsum("ejk,j->ek", cube, xrows[j - k][t])
            assert np.allclose(lhs, rhs, atol=1e-12 * max(1.0, scale))


def test_concatenate_roundtrip_and_trivial_left():
    rng = np.random.default_rng(11)
    X = random_driver(rng, 2, 3, 6)
    Y = random_controlled(rng, X, 2)
    left = restrict_path(Y, 0, 3)
    right = restrict_path(Y, 3, 6)
    back = concatenate(left, right, X)
    for a, b in zip(back.levels, Y.levels):
        assert np.array_equal(a, b)
    # Single-point left piece: the joined path is just the right piece.
    point = ControlledPath(Y.times[:1], Y.d, Y.N, Y.dim_u, Y.alpha,
                           [lvl[:1] for lvl in Y.levels])
    same = concatenate(point, Y, X)
    for a, b in zip(same.levels, Y.levels):
        assert np.array_equal(a, b)


def test_concatenate_rejects_mismatch():
    rng = np.random.default_rng(12)
    X = random_driver(rng, 2, 3, 6)
    Y = random_controlled(rng, X, 2)
    left = restrict_path(Y, 0, 3)
    shifted = restrict_path(Y, 3, 6).replace_levels(
        [lvl + 1e-6 for lvl in restrict_path(Y, 3, 6).levels])
    with pytest.raises(ValueError):
        concatenate(left, shifted, X)


def test_zero_remainder_paths_concatenate_cleanly():
    # Two zero-remainder pieces over adjacent intervals with matching data:
    # remainders stay identically zero across the junction.
    from roughpaths.rough_path import restrict

    rng = np.random.default_rng(14)
    X = random_driver(rng, 2, 3, 8)
    blocks = [rng.standard_normal((2, 2**i)) for i in range(3)]
    left = zero_remainder_path(blocks, restrict(X, 0, 4), 0.3)
    end_blocks = [left.levels[i][-1] for i in range(3)]
    right = zero_remainder_path(end_blocks, restrict(X, 4, 8), 0.3)
    glued = concatenate(left, right, X)
    for i in range(3):
        for s in range(8):
            assert np.max(np.abs(remainder_rows(glued, X, i, s))) < 1e-12
    assert seminorm(glued, X) < 1e-11


def test_level_holder_norm_linear_path():
    w = np.array([1.5, -0.5])
    times = np.linspace(0.0, 1.0, 9)
    X = lift_path(PiecewiseLinearPath(times, np.outer(times, w)), 3)
    Y = canonical_lift(X, alpha=0.3)
    # |Y^0_{s,t}| = |w| (t-s); the ratio peaks at the full interval.
    assert level_holder_norm(Y, 0, 0.3) == pytest.approx(np.abs(w).sum())
    assert level_holder_norm(Y, 1, 0.3) == 0.0
    # Top level matches its own remainder seminorm (plain increments).
    assert level_holder_norm(Y, Y.N - 1, 0.3) == 0.0


def test_default_alpha_midpoint():
    assert default_alpha(3, 1 / 3) == pytest.approx((0.25 + 1 / 3) / 2)


def test_exports_parse():
    rng = np.random.default_rng(13)
    X = random_driver(rng, 2, 2, 3)
    Y = canonical_lift(X)
    blob = Y.to_json_dict()
    assert blob["dim_u"] == 2 and len(blob["levels"]) == 2
    csv_text = Y.level0_csv()
    assert csv_text.splitlines()[0] == "t,y1,y2"
    assert len(csv_text.splitlines()) == 1 + Y.n_points
