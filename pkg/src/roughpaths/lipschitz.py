"""Lipschitz collections and their action on controlled paths.

A Lipschitz function carries its value and all derivative levels as
symmetric multilinear blocks with exact, hand-coded derivatives (constant,
linear, polynomial, and smooth ridge combinations of sin/cos/exp).  The
composition of such a function with a controlled path produces the
derivative paths of the image via the coproduct expansion; the module also
exposes the truncation-correction term and a numerical verifier for the
symmetrized expansion identity that makes the composition work, plus probes
for Taylor-remainder consistency and composed-remainder regularity.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .controlled_path import ControlledPath, remainder_rows
from .rough_path import GeometricRoughPath, increment, increments_from
from .tensor_algebra import (
    TensorSeries,
    coproduct,
    ordered_partitions,
    symmetrize,
    tensor_mul,
    word_index,
)


class LipFunction:
    """A function together with its derivative levels 0..n_levels.

    ``eval(j, ys)`` evaluates the level-j symmetric multilinear block at a
    batch of points: ys has shape (P, dim_in), the result has shape
    (P, dim_out, dim_in**j).  Evaluators must be pure.
    """

    def __init__(self, dim_in: int, dim_out: int, n_levels: int, evaluator,
                 gamma: float | None = None, lip_norm: float | None = None,
                 label: str = "custom"):
        if n_levels < 0:
            raise ValueError("n_levels must be >= 0")
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.n_levels = int(n_levels)
        self.gamma = float(gamma) if gamma is not None else float(n_levels + 1)
        self.lip_norm = float(lip_norm) if lip_norm is not None else None
        self.label = label
        self._evaluator = evaluator

    def eval(self, j: int, ys) -> np.ndarray:
        if not (0 <= j <= self.n_levels):
            raise ValueError(f"derivative level {j} outside 0..{self.n_levels}")
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        out = self._evaluator(j, ys)
        expected = (ys.shape[0], self.dim_out, self.dim_in**j)
        if out.shape != expected:
            raise ValueError(f"evaluator returned {out.shape}, expected {expected}")
        return out

    def eval_at(self, j: int, y) -> np.ndarray:
        """Level-j block at a single point, shape (dim_out, dim_in**j)."""
        return self.eval(j, np.asarray(y, dtype=float)[None, :])[0]

    def __repr__(self) -> str:
        return (f"LipFunction({self.label}, W=R^{self.dim_in}, U=R^{self.dim_out}, "
                f"levels=0..{self.n_levels}, gamma={self.gamma})")


def constant(value, dim_in: int, n_levels: int, **kw) -> LipFunction:
    value = np.asarray(value, dtype=float).ravel()

    def ev(j, ys):
        p = ys.shape[0]
        if j == 0:
            return np.broadcast_to(value[None, :, None], (p, value.size, 1)).copy()
        return np.zeros((p, value.size, dim_in**j))

    return LipFunction(dim_in, value.size, n_levels, ev, label="constant", **kw)


def linear(matrix, offset=None, n_levels: int = 1, **kw) -> LipFunction:
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    dim_out, dim_in = A.shape
    b = np.zeros(dim_out) if offset is None else np.asarray(offset, dtype=float).ravel()

    def ev(j, ys):
        p = ys.shape[0]
        if j == 0:
            return (ys @ A.T + b)[:, :, None]
        if j == 1:
            return np.broadcast_to(A[None], (p, dim_out, dim_in)).copy()
        return np.zeros((p, dim_out, dim_in**j))

    return LipFunction(dim_in, dim_out, n_levels, ev, label="linear", **kw)


def identity(dim: int, n_levels: int = 1, **kw) -> LipFunction:
    return linear(np.eye(dim), n_levels=n_levels, **kw)


def polynomial(dim_in: int, dim_out: int, coeffs: dict, n_levels: int, **kw) -> LipFunction:
    """Multivariate polynomial with exact derivative levels.

    ``coeffs`` maps exponent tuples (length dim_in) to output vectors.
    """
    monos = []
    for expo, vec in coeffs.items():
        expo = tuple(int(m) for m in expo)
        if len(expo) != dim_in or any(m < 0 for m in expo):
            raise ValueError(f"bad exponent tuple {expo!r}")
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size != dim_out:
            raise ValueError("monomial value has wrong output dimension")
        monos.append((np.array(expo), vec))

    def ev(j, ys):
        p = ys.shape[0]
        out = np.zeros((p, dim_out, dim_in**j))
        for flat, idx_tuple in enumerate(itertools.product(range(dim_in), repeat=j)):
            counts = np.bincount(np.array(idx_tuple, dtype=int), minlength=dim_in) if j else \
                np.zeros(dim_in, dtype=int)
            for expo, vec in monos:
                if np.any(counts > expo):
                    continue
                fall = 1.0
                for m, q in zip(expo, counts):
                    for step in range(q):
                        fall *= m - step
                powers = np.prod(ys ** (expo - counts), axis=1)
                out[:, :, flat] += np.outer(fall * powers, vec)
        return out

    return LipFunction(dim_in, dim_out, n_levels, ev, label="polynomial", **kw)


_RIDGE_KINDS = ("sin", "cos", "exp")


def ridge(dim_in: int, dim_out: int, terms, n_levels: int, **kw) -> LipFunction:
    """Sum of smooth ridge terms coef * g(weight . y + phase), g in sin/cos/exp.

    Every derivative level is exact: level j contributes
    coef * g^(j)(weight . y + phase) * weight^(x)j.
    """
    parsed = []
    for term in terms:
        coef = np.asarray(term["coef"], dtype=float).ravel()
        weight = np.asarray(term["weight"], dtype=float).ravel()
        kind = term["kind"]
        phase = float(term.get("phase", 0.0))
        if kind not in _RIDGE_KINDS:
            raise ValueError(f"unknown ridge kind {kind!r}")
        if coef.size != dim_out or weight.size != dim_in:
            raise ValueError("ridge term dimensions do not match")
        parsed.append((coef, kind, weight, phase))

    def g_deriv(kind, j, x):
        if kind == "exp":
            return np.exp(x)
        shift = j * np.pi / 2.0
        return np.sin(x + shift) if kind == "sin" else np.cos(x + shift)

    def ev(j, ys):
        p = ys.shape[0]
        out = np.zeros((p, dim_out, dim_in**j))
        for coef, kind, weight, phase in parsed:
            wj = reduce(lambda a, b: np.multiply.outer(a, b).ravel(), [weight] * j, np.ones(1))
            vals = g_deriv(kind, j, ys @ weight + phase)
            out += vals[:, None, None] * np.multiply.outer(coef, wj)[None]
        return out

    return LipFunction(dim_in, dim_out, n_levels, ev, label="ridge", **kw)


def from_config(spec: dict, n_levels: int) -> LipFunction:
    """Build a field from its config description (see the CLI schema)."""
    kind = spec.get("kind")
    kw = {}
    if "gamma" in spec:
        kw["gamma"] = spec["gamma"]
    if "lip_norm" in spec:
        kw["lip_norm"] = spec["lip_norm"]
    if kind == "constant":
        return constant(spec["value"], int(spec["dim_in"]), n_levels, **kw)
    if kind == "linear":
        return linear(spec["matrix"], spec.get("offset"), n_levels, **kw)
    if kind == "polynomial":
        coeffs = {tuple(entry["exponents"]): entry["value"] for entry in spec["coeffs"]}
        return polynomial(int(spec["dim_in"]), int(spec["dim_out"]), coeffs, n_levels, **kw)
    if kind == "builtin":
        return ridge(int(spec["dim_in"]), int(spec["dim_out"]), spec["terms"], n_levels, **kw)
    raise ValueError(f"unknown field kind {kind!r}")


def taylor_remainder(F: LipFunction, j: int, x, y) -> np.ndarray:
    """Defect of the level-j expansion of F around x evaluated at y.

    Returns F^j(y) minus the expansion through the available levels, as a
    (dim_out, dim_in**j) block.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    out = F.eval_at(j, y).copy()
    step = y - x
    powers = np.ones(1)
    for l in range(0, F.n_levels - j + 1):
        block = F.eval_at(j + l, x).reshape(F.dim_out, F.dim_in**l, F.dim_in**j)
        out -= np.einsum("elk,l->ek", block, powers) / math.factorial(l)
        powers = np.multiply.outer(step, powers).ravel()
    return out


@dataclass(frozen=True)
class LipReport:
    level_norms: list
    remainder_ratios: list
    declared: float | None
    violated: bool


def lip_norm_check(F: LipFunction, lo, hi, sample_count: int = 64, rng=None) -> LipReport:
    """Empirical level norms and remainder ratios on a box; report-only.

    Sampling can falsify the declared bound, never prove it.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (F.dim_in,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (F.dim_in,))
    xs = rng.uniform(lo, hi, (sample_count, F.dim_in))
    ys = rng.uniform(lo, hi, (sample_count, F.dim_in))
    level_norms = []
    for j in range(F.n_levels + 1):
        blocks = F.eval(j, xs)
        level_norms.append(float(np.max(np.abs(blocks).reshape(sample_count, -1).sum(axis=1))))
    ratios = []
    for j in range(F.n_levels + 1):
        worst = 0.0
        for x, y in zip(xs, ys):
            gap = float(np.abs(y - x).sum())
            if gap < 1e-9:
                continue
            rj = np.abs(taylor_remainder(F, j, x, y)).sum()
            worst = max(worst, rj / gap ** (F.gamma - j))
        ratios.append(worst)
    empirical = max(level_norms + ratios)
    violated = F.lip_norm is not None and empirical > F.lip_norm * (1 + 1e-9)
    return LipReport(level_norms, ratios, F.lip_norm, violated)


@lru_cache(maxsize=None)
def _composition_plan(d: int, r: int, n_levels: int):
    """Per word of length r: for each arity j, the (size, column) factor lists
    of all ordered nonempty position partitions."""
    plans = []
    for word in itertools.product(range(1, d + 1), repeat=r):
        by_j = {}
        for j in range(1, min(r, n_levels) + 1):
            entries = []
            for blocks in ordered_partitions(r, j, allow_empty=False):
                entries.append(tuple(
                    (len(blk), word_index(tuple(word[p] for p in blk), d)) for blk in blocks))
            by_j[j] = tuple(entries)
        plans.append(by_j)
    return tuple(plans)


def compose_at_point(F: LipFunction, y_value, y_blocks, r: int, d: int) -> np.ndarray:
    """Level-r block of the composed path at one point, shape (dim_out, d**r).

    ``y_blocks[i]`` is the (dim_in, d**i) level-i map at the point; only
    levels 1..r are read.
    """
    if r == 0:
        return F.eval_at(0, y_value)
    plan = _composition_plan(d, r, r)
    f_at = {j: F.eval_at(j, y_value) for j in range(1, r + 1)}
    out = np.zeros((F.dim_out, d**r))
    for col, by_j in enumerate(plan):
        acc = np.zeros(F.dim_out)
        for j, entries in by_j.items():
            fj = f_at[j]
            inv_jfact = 1.0 / math.factorial(j)
            for factors in entries:
                vec = _outer_flat([np.asarray(y_blocks[size])[:, sub] for size, sub in factors])
                acc += inv_jfact * (fj @ vec)
        out[:, col] = acc
    return out


def compose(F: LipFunction, Y: ControlledPath, X: GeometricRoughPath) -> ControlledPath:
    """Image of a controlled path under a Lipschitz function, as a controlled path.

    Level 0 is the pointwise image; level r collects, over arities j and
    ordered nonempty partitions of the r word positions, the level-j blocks
    of F applied to the box products of Y's levels, weighted by 1/j!.
    """
    if F.dim_in != Y.dim_u:
        raise ValueError(f"field expects W=R^{F.dim_in}, path has target R^{Y.dim_u}")
    if F.n_levels < Y.N:
        raise ValueError(f"field has levels 0..{F.n_levels}, need at least 0..{Y.N}")
    if Y.d != X.d or Y.N != X.N or not np.array_equal(Y.times, X.times):
        raise ValueError("controlled path and driver are incompatible")
    P, d, N = Y.n_points, Y.d, Y.N
    ys = Y.path_values()
    f_blocks = {j: F.eval(j, ys) for j in range(1, N)}
    z_levels = [F.eval(0, ys)]
    for r in range(1, N):
        plan = _composition_plan(d, r, N - 1)
        block = np.zeros((P, F.dim_out, d**r))
        for col, by_j in enumerate(plan):
            acc = np.zeros((P, F.dim_out))
            for j, entries in by_j.items():
                fj = f_blocks[j]
                inv_jfact = 1.0 / math.factorial(j)
                for factors in entries:
                    tensor = np.ones((P, 1))
                    for size, sub_col in factors:
                        vec = Y.levels[size][:, :, sub_col]
                        tensor = np.einsum("pa,pb->pab", tensor, vec).reshape(P, -1)
                    acc += inv_jfact * np.einsum("pux,px->pu", fj, tensor)
            block[:, :, col] = acc
        z_levels.append(block)
    return ControlledPath(Y.times, d, N, F.dim_out, Y.alpha, z_levels)


def _slot_profile(y_blocks, x_inc: TensorSeries, word, d: int, N: int) -> dict:
    """For one subword, the level-indexed values Y^i(X^{i-|word|} (x) e_word)."""
    m = len(word)
    col = word_index(word, d)
    out = {}
    for i in range(max(1, m), N):
        block = np.asarray(y_blocks[i])
        e = block.shape[0]
        cube = block.reshape(e, d ** (i - m), d**m)
        out[i] = cube[:, :, col] @ x_inc.levels[i - m]
    return out


def _outer_flat(vectors) -> np.ndarray:
    return reduce(lambda a, b: np.multiply.outer(a, b).ravel(), vectors, np.ones(1))


def truncation_correction(y_blocks, x_inc: TensorSeries, xi, k: int) -> np.ndarray:
    """Correction compensating that the driver's coproduct splits only up to
    the truncation level: the level-profile sum restricted to total >= N.

    ``y_blocks[i]`` is the (e, d**i) level-i map of the controlled path at
    the base point; returns a flat e**k block.
    """
    xi = tuple(xi)
    d, N = x_inc.d, x_inc.N
    if not (1 <= k <= N - 1):
        raise ValueError(f"arity {k} outside 1..{N - 1}")
    e = np.asarray(y_blocks[1]).shape[0] if N > 1 else 1
    total = np.zeros(e**k)
    for blocks in ordered_partitions(len(xi), k):
        subwords = [tuple(xi[p] for p in blk) for blk in blocks]
        profiles = [_slot_profile(y_blocks, x_inc, w, d, N) for w in subwords]
        for combo in itertools.product(range(1, N), repeat=k):
            if sum(combo) < N:
                continue
            vecs = []
            for prof, i in zip(profiles, combo):
                v = prof.get(i)
                if v is None:
                    break
                vecs.append(v)
            else:
                total += _outer_flat(vecs)
    return total / math.factorial(k)


def expansion_identity_check(y_blocks, x_inc: TensorSeries, xi, k: int) -> float:
    """Max symmetrized deviation between the two expansions of a composed level.

    The left side assembles approximate increments and slot values from the
    base-point data; the right side pushes the coproduct through the product
    of the driver increment with the word, plus the truncation correction.
    Exact (to roundoff) whenever the driver increment is group-like.
    """
    xi = tuple(xi)
    d, N = x_inc.d, x_inc.N
    r = len(xi)
    if not (1 <= k <= N - 1) or not (1 <= r <= N - 1):
        raise ValueError("need 1 <= k, |xi| <= N-1")
    e = np.asarray(y_blocks[1]).shape[0]

    yhat = np.zeros(e)
    for m in range(1, N):
        yhat += np.asarray(y_blocks[m]) @ x_inc.levels[m]

    etas = {}
    for j in range(1, k + 1):
        acc = np.zeros(e**j)
        for blocks in ordered_partitions(r, j, allow_empty=False):
            vecs = []
            for blk in blocks:
                prof = _slot_profile(y_blocks, x_inc, tuple(xi[p] for p in blk), d, N)
                vecs.append(sum(prof.values(), np.zeros(e)))
            acc += _outer_flat(vecs)
        etas[j] = acc

    lhs = np.zeros(e**k)
    for j in range(1, k + 1):
        weight = 1.0 / (math.factorial(j) * math.factorial(k - j))
        lhs += weight * _outer_flat([yhat] * (k - j) + [etas[j]])

    zeta = tensor_mul(x_inc, TensorSeries.from_word(xi, d, N))
    box = coproduct(zeta, k)
    main = np.zeros(e**k)
    for key, c in box.coeffs.items():
        lengths = [len(w) for w in key]
        if 0 in lengths or not (r <= sum(lengths) <= N - 1):
            continue
        vecs = [np.asarray(y_blocks[m])[:, word_index(w, d)] for m, w in zip(lengths, key)]
        main += c * _outer_flat(vecs)
    rhs = main / math.factorial(k) + truncation_correction(y_blocks, x_inc, xi, k)

    dev = symmetrize(lhs, e, k) - symmetrize(rhs, e, k)
    return float(np.max(np.abs(dev)))


def expansion_identity_check_path(Y: ControlledPath, X: GeometricRoughPath,
                                  s_idx: int, t_idx: int, k: int, xi) -> float:
    """Path-level wrapper: pulls base-point blocks and the driver increment."""
    blocks = [Y.levels[i][s_idx] for i in range(Y.N)]
    return expansion_identity_check(blocks, increment(X, s_idx, t_idx), xi, k)


@dataclass(frozen=True)
class RemainderProbe:
    level: int
    max_remainder: float
    max_ratio: float


def remainder_regularity_probe(F: LipFunction, Y: ControlledPath, X: GeometricRoughPath,
                               r: int, alpha: float | None = None) -> RemainderProbe:
    """Composed-path remainder scan: max |RZ^r_{s,t}| and its Holder ratio.

    A finite ratio across the grid is the observable form of the stability
    of controlled paths under Lipschitz composition.
    """
    Z = compose(F, Y, X)
    a = Y.alpha if alpha is None else alpha
    exp = (Y.N - r) * a
    worst_abs = 0.0
    worst_ratio = 0.0
    for s in range(Y.n_points - 1):
        xr = increments_from(X, s)
        rows = remainder_rows(Z, X, r, s, x_rows=xr)[1:]
        norms = np.abs(rows).reshape(rows.shape[0], -1).sum(axis=1)
        gaps = Y.times[s + 1:] - Y.times[s]
        worst_abs = max(worst_abs, float(norms.max()))
        worst_ratio = max(worst_ratio, float(np.max(norms / gaps**exp)))
    return RemainderProbe(level=r, max_remainder=worst_abs, max_ratio=worst_ratio)
