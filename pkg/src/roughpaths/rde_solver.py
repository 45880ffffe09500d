"""Fixed-point solver for dY = F(Y) dX in the controlled-path sense.

One Picard step composes the field with the current iterate and integrates
the result; local solves iterate from the canonical zero-remainder start
path inside the unit ball, and a patching loop with adaptive interval
length extends local solutions to the full horizon.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .controlled_path import (
    ControlledPath,
    concatenate,
    distance,
    path_sub,
    seminorm,
    triple_norm,
    zero_remainder_path,
)
from .lipschitz import LipFunction, compose, compose_at_point
from .rough_integral import integral_controlled
from .rough_path import GeometricRoughPath, holder_distance, restrict


class ContractionFailure(RuntimeError):
    """Local Picard iteration did not contract; the caller should shrink tau."""


class BallExit(ContractionFailure):
    """Iterates converged but the fixed point sits outside the unit ball.

    Shrinking tau only helps up to a point: the ball distance carries a
    Holder-constant term that does not scale with the interval length, so
    rough drivers can make the ball unattainable on any grid interval.
    """

    def __init__(self, message, local=None):
        super().__init__(message)
        self.local = local


class SolveFailure(RuntimeError):
    """Global solve failed; carries the partial solution and report."""

    def __init__(self, message, partial=None, report=None):
        super().__init__(message)
        self.partial = partial
        self.report = report


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    beta: float
    max_picard_iters: int = 60
    contraction_tol: float = 1e-10
    tau_init: float = 0.25
    tau_shrink: float = 0.5
    max_patches: int = 64
    explosion_bound: float = 1e8

    def validate(self, N: int) -> list:
        """Enforce the strict exponent window; returns warnings for near-boundary values."""
        lo, hi = 1.0 / (N + 1), 1.0 / N
        if not (lo < self.alpha < self.beta <= hi):
            raise ValueError(
                f"exponents must satisfy 1/{N + 1} < alpha < beta <= 1/{N}, "
                f"got alpha={self.alpha}, beta={self.beta}")
        if min(self.max_picard_iters, self.max_patches) < 1:
            raise ValueError("iteration and patch budgets must be positive")
        if min(self.contraction_tol, self.tau_init, self.tau_shrink, self.explosion_bound) <= 0:
            raise ValueError("tolerances must be positive")
        if self.tau_shrink >= 1.0:
            raise ValueError("tau_shrink must lie in (0, 1)")
        warnings = []
        # The interval for alpha is open at both ends; beta = 1/N is allowed.
        if self.alpha - lo < 1e-9 or self.beta - self.alpha < 1e-9:
            warnings.append(f"alpha={self.alpha} sits at the edge of the open interval "
                            f"({lo:.6f}, beta={self.beta}); estimates degrade near the boundary")
        return warnings


@dataclass
class PatchReport:
    t_start: float
    t_end: float
    tau: float
    iterations: int
    final_residual: float
    residuals: list = field(default_factory=list)


@dataclass
class SolveReport:
    patches: list
    n_patches: int = 0
    solution_seminorm: float = 0.0
    solution_norm: float = 0.0
    global_residual: float = 0.0
    junction_mismatch: float = 0.0
    ball_exits: int = 0
    wall_time_s: float = 0.0
    success: bool = False

    def to_json_dict(self) -> dict:
        return {
            "patches": [vars(p) for p in self.patches],
            "n_patches": self.n_patches,
            "solution_seminorm": self.solution_seminorm,
            "solution_norm": self.solution_norm,
            "global_residual": self.global_residual,
            "junction_mismatch": self.junction_mismatch,
            "ball_exits": self.ball_exits,
            "wall_time_s": self.wall_time_s,
            "success": self.success,
        }


def _shift_block(block: np.ndarray, e: int, d: int, r: int) -> np.ndarray:
    """Reinterpret a (e*d, d**r) map into L(V;U) as a (e, d**(r+1)) map into U."""
    return block.reshape(e, d, d**r).transpose(0, 2, 1).reshape(e, d ** (r + 1))


def canonical_initial_path(y0, F: LipFunction, X: GeometricRoughPath,
                           alpha: float) -> ControlledPath:
    """Zero-remainder start path: initial blocks from the field's derivative
    recursion at y0, propagated along the driver's running signature."""
    y0 = np.asarray(y0, dtype=float).ravel()
    d, N = X.d, X.N
    e = y0.size
    if F.dim_in != e or F.dim_out != e * d:
        raise ValueError("field must map U to L(V;U) for this state dimension")
    if F.n_levels < N - 1:
        raise ValueError(f"field has levels 0..{F.n_levels}, need at least 0..{N - 1}")
    w0 = [y0[:, None]]
    for r in range(N - 1):
        z = compose_at_point(F, y0, w0, r, d)
        w0.append(_shift_block(z, e, d, r))
    return zero_remainder_path(w0, X, alpha)


def picard_step(Y: ControlledPath, F: LipFunction, X: GeometricRoughPath, y0) -> ControlledPath:
    """One application of the solution map: integrate the composed field."""
    return integral_controlled(compose(F, Y, X), X, offset=np.asarray(y0, dtype=float))


@dataclass
class LocalSolve:
    path: ControlledPath
    iterations: int
    residuals: list


def solve_local(F: LipFunction, X_local: GeometricRoughPath, y0, config: SolverConfig,
                initial_guess: ControlledPath | None = None,
                enforce_ball: bool = True) -> LocalSolve:
    """Iterate the solution map on one interval until the successive-iterate
    norm drops below the contraction tolerance.

    Raises :class:`ContractionFailure` when iterates diverge or stall past
    the iteration budget, and :class:`BallExit` (carrying the converged
    result) when the final iterate leaves the unit ball around the start
    path while ``enforce_ball`` is set.
    """
    y0 = np.asarray(y0, dtype=float).ravel()
    W = canonical_initial_path(y0, F, X_local, config.alpha)
    Y = W if initial_guess is None else initial_guess
    residuals: list = []
    for it in range(config.max_picard_iters):
        Y_new = picard_step(Y, F, X_local, y0)
        peak = float(np.max(np.abs(Y_new.path_values())))
        if not np.isfinite(peak) or peak > config.explosion_bound:
            raise SolveFailure(f"state norm {peak:.3e} breached the explosion guard "
                               f"{config.explosion_bound:.3e}")
        res = triple_norm(path_sub(Y_new, Y), X_local, config.alpha)
        residuals.append(res)
        Y = Y_new
        if res <= config.contraction_tol:
            local = LocalSolve(Y, it + 1, residuals)
            if enforce_ball and distance(Y, W, X_local, X_local, config.alpha) > 1.0 + 1e-9:
                raise BallExit("converged outside the unit ball; shrink tau", local=local)
            return local
        if len(residuals) >= 3 and residuals[-1] > residuals[-2] > residuals[-3] \
                and residuals[-1] > 10.0 * residuals[0]:
            raise ContractionFailure("residuals diverge; shrink tau")
    raise ContractionFailure(f"no contraction within {config.max_picard_iters} iterations")


def grid_index(times, t: float, tol: float = 1e-9) -> int:
    idx = int(np.argmin(np.abs(np.asarray(times) - t)))
    if abs(times[idx] - t) > tol:
        raise ValueError(f"time {t} is not grid-representable (nearest {times[idx]})")
    return idx


def solve(F: LipFunction, X: GeometricRoughPath, y0, horizon: float,
          config: SolverConfig) -> tuple[ControlledPath, SolveReport]:
    """Global solve on [t0, horizon] by patching local fixed points.

    A working interval length is reused across patches and shrunk on
    non-contraction; patches join at shared grid points, the junction
    keeping the left end values.
    """
    config.validate(X.N)
    start = time.perf_counter()
    idx_T = grid_index(X.times, horizon)
    if idx_T <= 0:
        raise ValueError("horizon must exceed the grid start")
    report = SolveReport(patches=[])
    junction_tol = max(1e-9, 1e3 * config.contraction_tol)

    y_current = np.asarray(y0, dtype=float).ravel()
    tau = config.tau_init
    idx0 = 0
    solution: ControlledPath | None = None
    enforce_ball = True
    while idx0 < idx_T:
        if len(report.patches) >= config.max_patches:
            raise SolveFailure("patch budget exhausted", partial=solution, report=report)
        idx1 = min(idx_T, int(np.searchsorted(X.times, X.times[idx0] + tau + 1e-12, side="right")) - 1)
        idx1 = max(idx1, idx0 + 1)
        X_loc = restrict(X, idx0, idx1)
        try:
            local = solve_local(F, X_loc, y_current, config, enforce_ball=enforce_ball)
        except BallExit as err:
            if idx1 > idx0 + 1:
                tau *= config.tau_shrink
                continue
            # Converged residuals but the ball is unattainable even on one
            # grid step: fall back to residual-only mode and restart at the
            # configured interval length; the exits are reported.
            report.ball_exits += 1
            enforce_ball = False
            tau = config.tau_init
            continue
        except ContractionFailure as err:
            if idx1 == idx0 + 1:
                raise SolveFailure(f"non-contraction at minimum interval: {err}",
                                   partial=solution, report=report) from err
            tau *= config.tau_shrink
            continue
        report.patches.append(PatchReport(
            t_start=float(X.times[idx0]), t_end=float(X.times[idx1]),
            tau=float(X.times[idx1] - X.times[idx0]),
            iterations=local.iterations,
            final_residual=local.residuals[-1],
            residuals=list(local.residuals)))
        if solution is None:
            solution = local.path
        else:
            mismatch = max(float(np.max(np.abs(solution.levels[i][-1] - local.path.levels[i][0])))
                           for i in range(solution.N))
            report.junction_mismatch = max(report.junction_mismatch, mismatch)
            solution = concatenate(solution, local.path, X, tol=junction_tol)
        y_current = solution.path_values()[-1]
        idx0 = idx1

    X_T = restrict(X, 0, idx_T) if idx_T < X.n_points - 1 else X
    report.n_patches = len(report.patches)
    report.solution_seminorm = seminorm(solution, X_T, config.alpha)
    report.solution_norm = triple_norm(solution, X_T, config.alpha)
    report.global_residual = distance(solution, picard_step(solution, F, X_T, y0),
                                      X_T, X_T, config.alpha)
    report.wall_time_s = time.perf_counter() - start
    report.success = True
    return solution, report


def levels_from_field(Y: ControlledPath, F: LipFunction, X: GeometricRoughPath) -> float:
    """Max deviation between Y's levels i >= 1 and the shifted composed levels.

    At a solution these agree: the higher levels are determined by the
    level-0 path through the field.
    """
    Z = compose(F, Y, X)
    e, d = Y.dim_u, Y.d
    worst = 0.0
    for i in range(1, Y.N):
        shifted = np.stack([_shift_block(Z.levels[i - 1][m], e, d, i - 1)
                            for m in range(Y.n_points)])
        worst = max(worst, float(np.max(np.abs(Y.levels[i] - shifted))))
    return worst


@dataclass(frozen=True)
class ContinuityProbe:
    d_out: float
    d_in: float
    ratio: float


def continuity_probe(F: LipFunction, Xa: GeometricRoughPath, Xb: GeometricRoughPath,
                     y0a, y0b, horizon: float, config: SolverConfig) -> ContinuityProbe:
    """Solve under both drivers/initial values and compare output to input distance."""
    Ya, _ = solve(F, Xa, y0a, horizon, config)
    Yb, _ = solve(F, Xb, y0b, horizon, config)
    idx_T = grid_index(Xa.times, horizon)
    Xa_T = restrict(Xa, 0, idx_T) if idx_T < Xa.n_points - 1 else Xa
    Xb_T = restrict(Xb, 0, idx_T) if idx_T < Xb.n_points - 1 else Xb
    d_out = distance(Ya, Yb, Xa_T, Xb_T, config.alpha)
    d_in = holder_distance(Xa_T, Xb_T, config.beta) + float(
        np.abs(np.asarray(y0a, dtype=float) - np.asarray(y0b, dtype=float)).sum())
    ratio = d_out / d_in if d_in > 0 else 0.0
    return ContinuityProbe(d_out=d_out, d_in=d_in, ratio=ratio)
