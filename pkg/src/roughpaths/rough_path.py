"""Geometric rough paths built from piecewise-linear drivers.

A lift stores the running signatures X_{t0,ti} on the driver grid; arbitrary
increments come from one group inverse and one product.  Holder norms and
distances are grid maxima over all O(M^2) pairs, computed row by row so the
pairwise increment tensors are never materialized at once.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from .tensor_algebra import TensorSeries, exp_segment, group_inverse, is_group_like, tensor_mul


class PiecewiseLinearPath:
    """Continuous piecewise-linear path: strictly increasing times, points in R^d."""

    __slots__ = ("times", "points")

    def __init__(self, times, points):
        times = np.asarray(times, dtype=float).ravel()
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if times.size != points.shape[0]:
            raise ValueError("times and points disagree in length")
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing with at least two entries")
        times.setflags(write=False)
        points = np.ascontiguousarray(points, dtype=float)
        points.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseLinearPath is immutable")

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_segments(self) -> int:
        return self.times.size - 1

    @classmethod
    def from_csv(cls, source) -> "PiecewiseLinearPath":
        """Parse `t,x1,...,xd` rows; ``source`` is a path or open text file."""
        if hasattr(source, "read"):
            rows = list(csv.reader(source))
        else:
            with open(source, newline="") as fh:
                rows = list(csv.reader(fh))
        if not rows:
            raise ValueError("empty path CSV")
        header = [h.strip() for h in rows[0]]
        if header[:1] != ["t"] or len(header) < 2 or any(not h.startswith("x") for h in header[1:]):
            raise ValueError("path CSV must have header t,x1,...,xd")
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        if data.ndim != 2 or data.shape[1] != len(header):
            raise ValueError("path CSV rows do not match header width")
        return cls(data[:, 0], data[:, 1:])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["t"] + [f"x{i+1}" for i in range(self.d)])
        for t, p in zip(self.times, self.points):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in p])
        return buf.getvalue()

    def refine_midpoints(self) -> "PiecewiseLinearPath":
        """Insert segment midpoints; the underlying geometric path is unchanged."""
        t = self.times
        p = self.points
        mid_t = 0.5 * (t[:-1] + t[1:])
        mid_p = 0.5 * (p[:-1] + p[1:])
        new_t = np.empty(2 * t.size - 1)
        new_t[0::2] = t
        new_t[1::2] = mid_t
        new_p = np.empty((2 * p.shape[0] - 1, p.shape[1]))
        new_p[0::2] = p
        new_p[1::2] = mid_p
        return PiecewiseLinearPath(new_t, new_p)


class GeometricRoughPath:
    """Grid-sampled group-valued path t -> X_{t0,t} with a declared Holder exponent.

    ``levels[i]`` stacks the level-i blocks of the running signature at every
    grid point, shape (M+1, d**i).  Use :func:`lift_path` to construct lifts;
    the raw constructor checks shapes only.
    """

    __slots__ = ("times", "d", "N", "beta", "levels", "_steps")

    def __init__(self, times, d: int, N: int, beta: float, levels):
        times = np.asarray(times, dtype=float).ravel()
        if times.size < 1 or (times.size > 1 and np.any(np.diff(times) <= 0)):
            raise ValueError("grid times must be strictly increasing")
        if len(levels) != N + 1:
            raise ValueError(f"expected {N + 1} stacked level blocks")
        if not (0.0 < beta <= 1.0):
            raise ValueError("beta must lie in (0, 1]")
        stacked = []
        for i, arr in enumerate(levels):
            arr = np.ascontiguousarray(arr, dtype=float)
            if arr.shape != (times.size, d**i):
                raise ValueError(f"level {i} block has shape {arr.shape}, expected {(times.size, d**i)}")
            arr.setflags(write=False)
            stacked.append(arr)
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "beta", float(beta))
        object.__setattr__(self, "levels", tuple(stacked))
        object.__setattr__(self, "_steps", None)

    def __setattr__(self, name, value):
        raise AttributeError("GeometricRoughPath is immutable")

    @property
    def n_points(self) -> int:
        return self.times.size

    def value(self, idx: int) -> TensorSeries:
        """Running signature X_{t0, t_idx} as a series."""
        self._check_index(idx)
        return TensorSeries._wrap(self.d, self.N, [lvl[idx] for lvl in self.levels])

    def _check_index(self, idx: int) -> None:
        if not (0 <= idx < self.n_points):
            raise IndexError(f"grid index {idx} outside 0..{self.n_points - 1}")

    def step_increments(self) -> list[TensorSeries]:
        """Increments between consecutive grid points (cached)."""
        if self._steps is None:
            steps = [increment(self, m, m + 1) for m in range(self.n_points - 1)]
            object.__setattr__(self, "_steps", tuple(steps))
        return list(self._steps)

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "N": self.N,
            "beta": self.beta,
            "grid": self.times.tolist(),
            "levels": [lvl.tolist() for lvl in self.levels],
        }


def lift_path(path: PiecewiseLinearPath, N: int, beta: float | None = None) -> GeometricRoughPath:
    """Level-N signature lift of a piecewise-linear path, exact by Chen concatenation."""
    d = path.d
    if beta is None:
        beta = min(0.5, 1.0 / N)
    n = path.times.size
    levels = [np.zeros((n, d**i)) for i in range(N + 1)]
    levels[0][:, 0] = 1.0
    g = TensorSeries.unit(d, N)
    for i in range(1, n):
        g = tensor_mul(g, exp_segment(path.points[i] - path.points[i - 1], N))
        for r in range(1, N + 1):
            levels[r][i] = g.levels[r]
    return GeometricRoughPath(path.times, d, N, beta, levels)


def increment(X: GeometricRoughPath, s_idx: int, t_idx: int) -> TensorSeries:
    """The increment X_{s,t} = X_{t0,s}^{-1} (x) X_{t0,t}."""
    X._check_index(s_idx)
    X._check_index(t_idx)
    if s_idx > t_idx:
        raise ValueError("increment requires s_idx <= t_idx")
    if s_idx == t_idx:
        return TensorSeries.unit(X.d, X.N)
    return tensor_mul(group_inverse(X.value(s_idx)), X.value(t_idx))


def increments_from(X: GeometricRoughPath, s_idx: int) -> list[np.ndarray]:
    """Stacked increments X_{s,t} for every grid point t, one array per level.

    Level r output has shape (M+1, d**r); rows with t < s hold group-algebra
    values that callers should ignore.
    """
    X._check_index(s_idx)
    inv = group_inverse(X.value(s_idx))
    out = [np.zeros((X.n_points, X.d**r)) for r in range(X.N + 1)]
    out[0][:, 0] = 1.0
    for r in range(1, X.N + 1):
        acc = out[r]
        for i in range(r + 1):
            acc += np.einsum("a,tb->tab", inv.levels[i], X.levels[r - i]).reshape(X.n_points, -1)
    return out


def restrict(X: GeometricRoughPath, s_idx: int, t_idx: int) -> GeometricRoughPath:
    """Sub-path on grid indices s_idx..t_idx, rebased so the start is the unit."""
    X._check_index(s_idx)
    X._check_index(t_idx)
    if s_idx >= t_idx:
        raise ValueError("restrict requires s_idx < t_idx")
    rows = slice(s_idx, t_idx + 1)
    levels = [arr[rows] for arr in increments_from(X, s_idx)]
    return GeometricRoughPath(X.times[rows], X.d, X.N, X.beta, levels)


def holder_norm(X: GeometricRoughPath, level: int, beta: float) -> float:
    """Grid maximum of |X^level_{s,t}| / (t-s)^(level*beta) over all pairs s < t."""
    if not (1 <= level <= X.N):
        raise ValueError(f"level {level} outside 1..{X.N}")
    if not (0.0 < beta <= 1.0):
        raise ValueError("exponent must lie in (0, 1]")
    n = X.n_points
    worst = 0.0
    for s in range(n - 1):
        incs = increments_from(X, s)[level][s + 1:]
        gaps = (X.times[s + 1:] - X.times[s]) ** (level * beta)
        worst = max(worst, float(np.max(np.abs(incs).sum(axis=1) / gaps)))
    return worst


def _pairwise_level_norm(Xa: GeometricRoughPath, Xb: GeometricRoughPath, level: int, exponent: float) -> float:
    n = Xa.n_points
    worst = 0.0
    for s in range(n - 1):
        da = increments_from(Xa, s)[level][s + 1:]
        db = increments_from(Xb, s)[level][s + 1:]
        gaps = (Xa.times[s + 1:] - Xa.times[s]) ** exponent
        worst = max(worst, float(np.max(np.abs(da - db).sum(axis=1) / gaps)))
    return worst


def holder_distance(Xa: GeometricRoughPath, Xb: GeometricRoughPath, beta: float) -> float:
    """Sum over levels of the Holder seminorm of the levelwise increment difference."""
    if Xa.d != Xb.d or Xa.N != Xb.N:
        raise ValueError("rough paths are incompatible")
    if Xa.n_points != Xb.n_points or not np.array_equal(Xa.times, Xb.times):
        raise ValueError("rough paths must share the grid; resample upstream")
    return sum(_pairwise_level_norm(Xa, Xb, i, i * beta) for i in range(1, Xa.N + 1))


def path_norm(X: GeometricRoughPath, beta: float) -> float:
    """Sum over levels of the level Holder norms (distance to the unit path)."""
    return sum(holder_norm(X, i, beta) for i in range(1, X.N + 1))


def unit_rough_path(X: GeometricRoughPath) -> GeometricRoughPath:
    """Constant unit path on the same grid (the zero point of the Holder distance)."""
    n = X.n_points
    levels = [np.zeros((n, X.d**i)) for i in range(X.N + 1)]
    levels[0][:, 0] = 1.0
    return GeometricRoughPath(X.times, X.d, X.N, X.beta, levels)


def chen_deviation(X: GeometricRoughPath) -> float:
    """Max coefficient deviation of X_{s,u} (x) X_{u,t} from X_{s,t} over grid triples.

    Batched per junction index u over all (s <= u, t >= u) pairs.
    """
    n = X.n_points
    d, N = X.d, X.N
    pair = [np.zeros((n, n, d**r)) for r in range(N + 1)]
    for s in range(n):
        rows = increments_from(X, s)
        for r in range(N + 1):
            pair[r][s] = rows[r]
    worst = 0.0
    for u in range(n):
        for r in range(1, N + 1):
            prod = np.zeros((u + 1, n - u, d**r))
            for i in range(r + 1):
                left = pair[i][: u + 1, u]
                right = pair[r - i][u, u:]
                prod += np.einsum("sa,tb->stab", left, right).reshape(u + 1, n - u, -1)
            dev = np.abs(prod - pair[r][: u + 1, u:])
            worst = max(worst, float(dev.max()))
    return worst


def group_like_deviation(X: GeometricRoughPath, tol: float = 1e-10) -> float:
    """Worst group-likeness violation over all grid-pair increments."""
    worst = 0.0
    for s in range(X.n_points):
        for t in range(s, X.n_points):
            _, dev = is_group_like(increment(X, s, t), tol)
            worst = max(worst, dev)
    return worst
