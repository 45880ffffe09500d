"""Independent brute-force references used by the test suite.

Classical RK4 integration, left-point Riemann-Stieltjes sums, and a
recursive enumeration of ordered subset partitions.  Deliberately naive:
these are oracles, not production paths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OracleResult:
    value: np.ndarray
    method: str
    resolution: int


def ode_rk4(field, path, y0, substeps: int = 1) -> np.ndarray:
    """Classical RK4 for dy = field(y) dx along a piecewise-linear driver.

    ``field(y)`` returns the (dim_u, d) matrix applied to dx.  Returns the
    solution at every grid point of ``path``, shape (M+1, dim_u).
    """
    times = np.asarray(path.times, dtype=float)
    points = np.asarray(path.points, dtype=float)
    y = np.array(y0, dtype=float).ravel()
    out = [y.copy()]
    for seg in range(len(times) - 1):
        dx = (points[seg + 1] - points[seg]) / substeps
        for _ in range(substeps):
            k1 = field(y) @ dx
            k2 = field(y + 0.5 * k1) @ dx
            k3 = field(y + 0.5 * k2) @ dx
            k4 = field(y + k3) @ dx
            y = y + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        out.append(y.copy())
    return np.array(out)


def riemann_stieltjes(integrand, path, refinement: int = 1) -> OracleResult:
    """Left-point Stieltjes sum of ``integrand(t) dx_t`` over the driver grid.

    ``integrand(t)`` returns a (dim_u, d) matrix.  Each grid segment is split
    into ``refinement`` equal pieces; the path is interpolated linearly.
    """
    times = np.asarray(path.times, dtype=float)
    points = np.asarray(path.points, dtype=float)
    total = None
    for seg in range(len(times) - 1):
        t0, t1 = times[seg], times[seg + 1]
        dx = (points[seg + 1] - points[seg]) / refinement
        for j in range(refinement):
            t = t0 + (t1 - t0) * j / refinement
            term = np.asarray(integrand(t), dtype=float) @ dx
            total = term if total is None else total + term
    if total is None:
        total = np.zeros(0)
    return OracleResult(value=total, method="left_stieltjes", resolution=refinement)


def enumerate_partitions(r: int, k: int, allow_empty: bool = True) -> list:
    """All ordered k-tuples of disjoint subsets covering {0, ..., r-1}.

    Recursive subset-choice enumeration (first block chooses a subset, the
    rest partition the remainder), independent of the base-k assignment walk
    used by the algebra module.
    """
    def subsets(items):
        items = list(items)
        for mask in range(1 << len(items)):
            yield tuple(items[i] for i in range(len(items)) if mask >> i & 1)

    def rec(remaining, blocks_left):
        if blocks_left == 1:
            yield (tuple(remaining),)
            return
        for first in subsets(remaining):
            rest = [p for p in remaining if p not in first]
            for tail in rec(rest, blocks_left - 1):
                yield (first,) + tail

    out = []
    for blocks in rec(list(range(r)), k):
        if not allow_empty and any(len(b) == 0 for b in blocks):
            continue
        out.append(blocks)
    return out
