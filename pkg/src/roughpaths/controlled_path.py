"""Controlled rough paths on the driver's grid.

A controlled path stores, per level i < N, the grid-sampled linear maps from
V^(x)i to the target space U.  Remainders subtract the local expansion
against the driver's increments; their grid-pair Holder maxima define the
seminorm, distance and full norm used by the solver.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from .rough_path import GeometricRoughPath, increments_from


class ControlledPath:
    """Tuple (Y^0, ..., Y^{N-1}) of map-valued paths sharing the driver grid.

    ``levels[i]`` has shape (P, dim_u, d**i); level 0 is the actual path with
    a trailing singleton axis.  Immutable after construction.
    """

    __slots__ = ("times", "d", "N", "dim_u", "alpha", "levels")

    def __init__(self, times, d: int, N: int, dim_u: int, alpha: float, levels):
        times = np.asarray(times, dtype=float).ravel()
        if len(levels) != N:
            raise ValueError(f"expected {N} level blocks, got {len(levels)}")
        stacked = []
        for i, arr in enumerate(levels):
            arr = np.ascontiguousarray(arr, dtype=float)
            if arr.shape != (times.size, dim_u, d**i):
                raise ValueError(
                    f"level {i} block has shape {arr.shape}, expected {(times.size, dim_u, d**i)}")
            arr.setflags(write=False)
            stacked.append(arr)
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "dim_u", dim_u)
        object.__setattr__(self, "alpha", float(alpha))
        object.__setattr__(self, "levels", tuple(stacked))

    def __setattr__(self, name, value):
        raise AttributeError("ControlledPath is immutable")

    @property
    def n_points(self) -> int:
        return self.times.size

    def level(self, i: int) -> np.ndarray:
        return self.levels[i]

    def path_values(self) -> np.ndarray:
        """The level-0 path as a (P, dim_u) array."""
        return self.levels[0][:, :, 0]

    def block(self, i: int, idx: int) -> np.ndarray:
        """Level-i map at one grid point, shape (dim_u, d**i)."""
        return self.levels[i][idx]

    def replace_levels(self, new_levels) -> "ControlledPath":
        return ControlledPath(self.times, self.d, self.N, self.dim_u, self.alpha, new_levels)

    def to_json_dict(self) -> dict:
        return {
            "grid": self.times.tolist(),
            "alpha": self.alpha,
            "d": self.d,
            "N": self.N,
            "dim_u": self.dim_u,
            "levels": [lvl.tolist() for lvl in self.levels],
        }

    def level0_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["t"] + [f"y{i+1}" for i in range(self.dim_u)])
        for t, row in zip(self.times, self.path_values()):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        return buf.getvalue()


def default_alpha(N: int, beta: float) -> float:
    """Midpoint of the admissible interval (1/(N+1), beta)."""
    return 0.5 * (1.0 / (N + 1) + beta)


def _check_pair(Y: ControlledPath, X: GeometricRoughPath) -> None:
    if Y.d != X.d or Y.N != X.N:
        raise ValueError("controlled path and driver disagree in (d, N)")
    if Y.n_points != X.n_points or not np.array_equal(Y.times, X.times):
        raise ValueError("controlled path must share the driver grid exactly")


def _apply_left(block: np.ndarray, xrows: np.ndarray, d: int, j: int, i: int) -> np.ndarray:
    """Contract a (dim_u, d^(i+j)) map with stacked level-j tensors on the left slots."""
    e = block.shape[0]
    cube = block.reshape(e, d**j, d**i)
    return np.einsum("ejk,tj->tek", cube, xrows)


def remainder_rows(Y: ControlledPath, X: GeometricRoughPath, i: int, s_idx: int,
                   x_rows=None) -> np.ndarray:
    """RY^i_{s,t} for fixed s and every t >= s, shape (P - s, dim_u, d**i).

    The expansion subtracts Y^{i+j}_s paired with X^j_{s,t} for
    j = 1..N-1-i; the top level reduces to plain increments.
    """
    _check_pair(Y, X)
    if not (0 <= i < Y.N):
        raise ValueError(f"level {i} outside 0..{Y.N - 1}")
    rows = x_rows if x_rows is not None else increments_from(X, s_idx)
    out = Y.levels[i][s_idx:] - Y.levels[i][s_idx]
    for j in range(1, Y.N - i):
        out = out - _apply_left(Y.levels[i + j][s_idx], rows[j][s_idx:], Y.d, j, i)
    return out


def remainder(Y: ControlledPath, X: GeometricRoughPath, i: int, s_idx: int, t_idx: int) -> np.ndarray:
    """Single remainder block RY^i_{s,t}, shape (dim_u, d**i)."""
    if s_idx > t_idx:
        raise ValueError("remainder requires s_idx <= t_idx")
    return remainder_rows(Y, X, i, s_idx)[t_idx - s_idx]


def _scan_pairs(times: np.ndarray, rows_fn, exponents) -> list[float]:
    """Max of l1-norm / gap**exponent over all grid pairs, one result per level.

    ``rows_fn(s)`` returns per-level arrays of blocks for t in s..P-1.
    """
    n = times.size
    worst = [0.0] * len(exponents)
    for s in range(n - 1):
        per_level = rows_fn(s)
        gaps = times[s + 1:] - times[s]
        for li, (arr, exp) in enumerate(zip(per_level, exponents)):
            norms = np.abs(arr[1:]).reshape(arr.shape[0] - 1, -1).sum(axis=1)
            worst[li] = max(worst[li], float(np.max(norms / gaps**exp)))
    return worst


def seminorm(Y: ControlledPath, X: GeometricRoughPath, alpha: float | None = None) -> float:
    """Sum over levels of the grid-pair maxima of |RY^i| / (t-s)^((N-i) alpha)."""
    _check_pair(Y, X)
    a = Y.alpha if alpha is None else alpha
    if not (1.0 / (Y.N + 1) < a <= 1.0):
        raise ValueError(f"alpha {a} outside (1/{Y.N + 1}, 1]")

    def rows(s):
        xr = increments_from(X, s)
        return [remainder_rows(Y, X, i, s, x_rows=xr) for i in range(Y.N)]

    exps = [(Y.N - i) * a for i in range(Y.N)]
    return float(sum(_scan_pairs(Y.times, rows, exps)))


def distance(Ya: ControlledPath, Yb: ControlledPath,
             Xa: GeometricRoughPath, Xb: GeometricRoughPath,
             alpha: float | None = None) -> float:
    """Controlled distance: levelwise grid maxima of |RY^i - RYtilde^i| ratios."""
    _check_pair(Ya, Xa)
    _check_pair(Yb, Xb)
    if Ya.n_points != Yb.n_points or not np.array_equal(Ya.times, Yb.times):
        raise ValueError("controlled paths must share the grid")
    if Ya.dim_u != Yb.dim_u:
        raise ValueError("controlled paths must share the target dimension")
    a = Ya.alpha if alpha is None else alpha

    def rows(s):
        xra = increments_from(Xa, s)
        xrb = increments_from(Xb, s)
        return [remainder_rows(Ya, Xa, i, s, x_rows=xra)
                - remainder_rows(Yb, Xb, i, s, x_rows=xrb)
                for i in range(Ya.N)]

    exps = [(Ya.N - i) * a for i in range(Ya.N)]
    return float(sum(_scan_pairs(Ya.times, rows, exps)))


def triple_norm(Y: ControlledPath, X: GeometricRoughPath, alpha: float | None = None) -> float:
    """Banach norm: controlled seminorm plus l1 norms of the initial blocks."""
    initial = sum(float(np.abs(Y.levels[i][0]).sum()) for i in range(Y.N))
    return seminorm(Y, X, alpha) + initial


def level_holder_norm(Y: ControlledPath, i: int, exponent: float) -> float:
    """Grid maximum of |Y^i_t - Y^i_s| / (t-s)^exponent."""
    if not (0 <= i < Y.N):
        raise ValueError(f"level {i} outside 0..{Y.N - 1}")
    n = Y.n_points
    worst = 0.0
    for s in range(n - 1):
        diffs = Y.levels[i][s + 1:] - Y.levels[i][s]
        norms = np.abs(diffs).reshape(n - s - 1, -1).sum(axis=1)
        gaps = (Y.times[s + 1:] - Y.times[s]) ** exponent
        worst = max(worst, float(np.max(norms / gaps)))
    return worst


def zero_remainder_path(blocks, X: GeometricRoughPath, alpha: float) -> ControlledPath:
    """The unique controlled path with the given start blocks and RY = 0.

    ``blocks[i]`` is the (dim_u, d**i) level-i map at the grid start; each
    level propagates along the driver's running signature so that every
    remainder vanishes identically.
    """
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    if len(blocks) != X.N:
        raise ValueError(f"expected {X.N} start blocks")
    e = blocks[0].shape[0]
    n, d = X.n_points, X.d
    levels = []
    for i in range(X.N):
        arr = np.zeros((n, e, d**i))
        for j in range(i, X.N):
            cube = blocks[j].reshape(e, d ** (j - i), d**i)
            arr += np.einsum("eab,ta->teb", cube, X.levels[j - i])
        levels.append(arr)
    return ControlledPath(X.times, d, X.N, e, alpha, levels)


def canonical_lift(X: GeometricRoughPath, alpha: float | None = None) -> ControlledPath:
    """The driver's own level-1 path controlled by itself: identity derivative,
    zero higher levels, identically vanishing remainders."""
    if X.N < 2:
        raise ValueError("canonical lift needs N >= 2")
    if alpha is None:
        alpha = default_alpha(X.N, X.beta)
    n, d = X.n_points, X.d
    levels = [X.levels[1][:, :, None]]
    levels.append(np.broadcast_to(np.eye(d), (n, d, d)).copy())
    for i in range(2, X.N):
        levels.append(np.zeros((n, d, d**i)))
    return ControlledPath(X.times, d, X.N, d, alpha, levels)


def path_add(Ya: ControlledPath, Yb: ControlledPath) -> ControlledPath:
    if not np.array_equal(Ya.times, Yb.times) or Ya.dim_u != Yb.dim_u:
        raise ValueError("controlled paths must share grid and target")
    return Ya.replace_levels([a + b for a, b in zip(Ya.levels, Yb.levels)])


def path_sub(Ya: ControlledPath, Yb: ControlledPath) -> ControlledPath:
    if not np.array_equal(Ya.times, Yb.times) or Ya.dim_u != Yb.dim_u:
        raise ValueError("controlled paths must share grid and target")
    return Ya.replace_levels([a - b for a, b in zip(Ya.levels, Yb.levels)])


def path_scale(Y: ControlledPath, c: float) -> ControlledPath:
    return Y.replace_levels([c * a for a in Y.levels])


def concatenate(left: ControlledPath, right: ControlledPath, X: GeometricRoughPath,
                tol: float = 1e-10) -> ControlledPath:
    """Join controlled paths over adjacent intervals sharing a junction point.

    End values of ``left`` must match start values of ``right`` at every
    level within ``tol`` (max-abs); the junction row keeps the left values.
    """
    if left.d != right.d or left.N != right.N or left.dim_u != right.dim_u:
        raise ValueError("controlled paths are incompatible")
    if left.times[-1] != right.times[0]:
        raise ValueError("junction times differ")
    mismatch = max(float(np.max(np.abs(left.levels[i][-1] - right.levels[i][0])))
                   for i in range(left.N))
    if mismatch > tol:
        raise ValueError(f"junction value mismatch {mismatch:.3e} exceeds {tol:.3e}")
    times = np.concatenate([left.times, right.times[1:]])
    start = int(np.searchsorted(X.times, times[0]))
    if start + times.size > X.n_points or not np.array_equal(times, X.times[start:start + times.size]):
        raise ValueError("joined grid must be a contiguous slice of the driver grid")
    levels = [np.concatenate([a, b[1:]], axis=0) for a, b in zip(left.levels, right.levels)]
    return ControlledPath(times, left.d, left.N, left.dim_u, left.alpha, levels)


def restrict_path(Y: ControlledPath, s_idx: int, t_idx: int,
                  alpha: float | None = None) -> ControlledPath:
    """Slice a controlled path to grid indices s_idx..t_idx."""
    if not (0 <= s_idx < t_idx < Y.n_points):
        raise ValueError("invalid restriction indices")
    rows = slice(s_idx, t_idx + 1)
    return ControlledPath(Y.times[rows], Y.d, Y.N, Y.dim_u,
                          Y.alpha if alpha is None else alpha,
                          [lvl[rows] for lvl in Y.levels])
