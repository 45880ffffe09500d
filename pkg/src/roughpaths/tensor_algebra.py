"""Truncated tensor algebra over R^d.

Provides the level-graded series type, the truncated tensor product, the
box-tensor algebra with its slotwise product, the coproduct that splits a
word over ordered subset partitions, shuffle products, symmetrization and
the group-likeness check used to recognize signature-type elements.

Coefficient blocks are dense float64 arrays, one per level; a word
(a_1, ..., a_r) with letters in 1..d addresses the level-r coefficient at
flat index sum((a_j - 1) * d**(r - j)), i.e. C-order flattening.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache, reduce

import numpy as np

# Construction caps: d**N * k-tuple combinatorics stays at desk scale.
MAX_DIM = 4
MAX_LEVEL = 5

#: A basis word: tuple of letters in 1..d.  Empty tuple is the unit word.
Word = tuple


def word_index(word: Word, d: int) -> int:
    """Flat index of a word inside its level block."""
    idx = 0
    for a in word:
        idx = idx * d + (a - 1)
    return idx


def index_word(idx: int, r: int, d: int) -> Word:
    """Inverse of :func:`word_index` at level ``r``."""
    letters = []
    for _ in range(r):
        letters.append(idx % d + 1)
        idx //= d
    return tuple(reversed(letters))


def level_words(d: int, r: int):
    """All words of length ``r``, in flat-index order."""
    return itertools.product(range(1, d + 1), repeat=r)


def _check_word(word: Word, d: int, n_max: int) -> None:
    if len(word) > n_max:
        raise ValueError(f"word length {len(word)} exceeds level cap {n_max}")
    if any(not (1 <= a <= d) for a in word):
        raise ValueError(f"word {word!r} has letters outside 1..{d}")


class TensorSeries:
    """Element of the level-N truncated tensor algebra over R^d.

    ``levels[i]`` is the dense level-i coefficient block of size ``d**i``.
    Instances are immutable; all operations return new series.
    """

    __slots__ = ("d", "N", "levels")

    def __init__(self, d: int, N: int, levels):
        if not (1 <= d <= MAX_DIM):
            raise ValueError(f"dimension {d} outside 1..{MAX_DIM}")
        if not (1 <= N <= MAX_LEVEL):
            raise ValueError(f"level {N} outside 1..{MAX_LEVEL}")
        if len(levels) != N + 1:
            raise ValueError(f"expected {N + 1} level blocks, got {len(levels)}")
        blocks = []
        for i, block in enumerate(levels):
            arr = np.array(block, dtype=float).ravel()
            if arr.size != d**i:
                raise ValueError(f"level {i} block has {arr.size} entries, expected {d**i}")
            arr.setflags(write=False)
            blocks.append(arr)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "levels", tuple(blocks))

    def __setattr__(self, name, value):
        raise AttributeError("TensorSeries is immutable")

    @classmethod
    def _wrap(cls, d: int, N: int, blocks) -> "TensorSeries":
        # Internal fast path: trusts shapes, freezes without re-copying.
        self = object.__new__(cls)
        frozen = []
        for arr in blocks:
            arr = np.ascontiguousarray(arr, dtype=float)
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "levels", tuple(frozen))
        return self

    @classmethod
    def unit(cls, d: int, N: int) -> "TensorSeries":
        return cls._wrap(d, N, [np.ones(1)] + [np.zeros(d**i) for i in range(1, N + 1)])

    @classmethod
    def from_word(cls, word: Word, d: int, N: int, coeff: float = 1.0) -> "TensorSeries":
        _check_word(word, d, N)
        blocks = [np.zeros(d**i) for i in range(N + 1)]
        blocks[len(word)][word_index(word, d)] = coeff
        return cls._wrap(d, N, blocks)

    def level(self, i: int) -> np.ndarray:
        return self.levels[i]

    def coeff(self, word: Word) -> float:
        _check_word(word, self.d, self.N)
        return float(self.levels[len(word)][word_index(word, self.d)])

    def with_level(self, i: int, block) -> "TensorSeries":
        """Copy of the series with level ``i`` replaced (diagnostics only)."""
        arr = np.array(block, dtype=float).ravel()
        if arr.size != self.d**i:
            raise ValueError("replacement block has wrong size")
        blocks = list(self.levels)
        blocks[i] = arr
        return TensorSeries._wrap(self.d, self.N, blocks)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(b))) if b.size else 0.0 for b in self.levels)

    def __add__(self, other: "TensorSeries") -> "TensorSeries":
        _check_compatible(self, other)
        return TensorSeries._wrap(self.d, self.N, [a + b for a, b in zip(self.levels, other.levels)])

    def __sub__(self, other: "TensorSeries") -> "TensorSeries":
        _check_compatible(self, other)
        return TensorSeries._wrap(self.d, self.N, [a - b for a, b in zip(self.levels, other.levels)])

    def __neg__(self) -> "TensorSeries":
        return TensorSeries._wrap(self.d, self.N, [-a for a in self.levels])

    def scale(self, c: float) -> "TensorSeries":
        return TensorSeries._wrap(self.d, self.N, [c * a for a in self.levels])

    def to_json_dict(self) -> dict:
        return {"d": self.d, "N": self.N, "levels": [b.tolist() for b in self.levels]}

    def __repr__(self) -> str:
        return f"TensorSeries(d={self.d}, N={self.N}, |levels|={[round(admissible_norm(self, i), 6) for i in range(self.N + 1)]})"


def _check_compatible(a: TensorSeries, b: TensorSeries) -> None:
    if a.d != b.d or a.N != b.N:
        raise ValueError(f"incompatible series: (d={a.d},N={a.N}) vs (d={b.d},N={b.N})")


def tensor_mul(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    """Truncated tensor product: level r of the result is sum_{i+j=r} a^i (x) b^j."""
    _check_compatible(a, b)
    d, N = a.d, a.N
    out = [np.zeros(d**r) for r in range(N + 1)]
    for r in range(N + 1):
        acc = out[r]
        for i in range(r + 1):
            acc += np.multiply.outer(a.levels[i], b.levels[r - i]).ravel()
    return TensorSeries._wrap(d, N, out)


def group_inverse(g: TensorSeries) -> TensorSeries:
    """Inverse of a series with unit scalar part.

    Computed from the finite Neumann series of (unit - g), which is exact in
    the truncated algebra because (unit - g) has zero scalar part and is
    therefore nilpotent.
    """
    if abs(float(g.levels[0][0]) - 1.0) > 1e-9:
        raise ValueError("group_inverse requires level-0 coefficient 1")
    unit = TensorSeries.unit(g.d, g.N)
    u = unit - g
    inv = unit
    for _ in range(g.N):
        inv = unit + tensor_mul(u, inv)
    return inv


def exp_segment(v, N: int) -> TensorSeries:
    """Signature of a single linear segment with increment ``v``: level k is v^(x)k / k!."""
    v = np.asarray(v, dtype=float).ravel()
    d = v.size
    blocks = [np.ones(1)]
    for k in range(1, N + 1):
        blocks.append(np.multiply.outer(blocks[-1], v).ravel() / k)
    return TensorSeries._wrap(d, N, blocks)


class BoxTensor:
    """Sparse element of the arity-k box algebra over the truncated tensor algebra.

    Coefficients are keyed by k-tuples of words; each slot word has length
    at most N.  Used for coproduct images and slotwise products.
    """

    __slots__ = ("d", "N", "k", "coeffs")

    def __init__(self, d: int, N: int, k: int, coeffs: dict | None = None):
        if k < 1:
            raise ValueError("arity must be >= 1")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "k", k)
        clean: dict = {}
        for key, c in (coeffs or {}).items():
            if len(key) != k:
                raise ValueError(f"key arity {len(key)} != {k}")
            for w in key:
                _check_word(w, d, N)
            if c != 0.0:
                clean[key] = clean.get(key, 0.0) + float(c)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):
        raise AttributeError("BoxTensor is immutable")

    def coeff(self, key) -> float:
        return float(self.coeffs.get(tuple(key), 0.0))

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def __repr__(self) -> str:
        return f"BoxTensor(d={self.d}, N={self.N}, k={self.k}, nnz={len(self.coeffs)})"


def box_deviation(a: BoxTensor, b: BoxTensor) -> float:
    """Max absolute coefficient difference between two box tensors."""
    if (a.d, a.N, a.k) != (b.d, b.N, b.k):
        raise ValueError("box tensors are incompatible")
    dev = 0.0
    for key in a.coeffs.keys() | b.coeffs.keys():
        dev = max(dev, abs(a.coeffs.get(key, 0.0) - b.coeffs.get(key, 0.0)))
    return dev


def box_mul(a: BoxTensor, b: BoxTensor) -> BoxTensor:
    """Slotwise concatenation product; slots that overflow level N are dropped."""
    if (a.d, a.N, a.k) != (b.d, b.N, b.k):
        raise ValueError("box tensors are incompatible")
    out: dict = {}
    for ka, ca in a.coeffs.items():
        for kb, cb in b.coeffs.items():
            key = tuple(wa + wb for wa, wb in zip(ka, kb))
            if any(len(w) > a.N for w in key):
                continue
            out[key] = out.get(key, 0.0) + ca * cb
    return BoxTensor(a.d, a.N, a.k, out)


def ordered_partitions(r: int, k: int, allow_empty: bool = True):
    """Ordered k-tuples of disjoint position subsets covering range(r).

    Enumerated by assigning each position to one of k blocks (base-k
    counting), so blocks keep ascending position order.
    """
    for assign in itertools.product(range(k), repeat=r):
        blocks = tuple(tuple(p for p in range(r) if assign[p] == b) for b in range(k))
        if not allow_empty and any(len(blk) == 0 for blk in blocks):
            continue
        yield blocks


def coproduct(xi: TensorSeries, k: int) -> BoxTensor:
    """Arity-k coproduct: splits each word over all ordered subset partitions.

    A word w of length r contributes its coefficient to every key
    (w|I_1, ..., w|I_k) where (I_1, ..., I_k) runs over ordered partitions of
    the positions into k possibly-empty subsets; extended linearly over levels.
    """
    if k < 1:
        raise ValueError("arity must be >= 1")
    out: dict = {}
    for r in range(xi.N + 1):
        block = xi.levels[r]
        nz = np.nonzero(block)[0]
        if nz.size == 0:
            continue
        words = [index_word(int(i), r, xi.d) for i in nz]
        for w, c in zip(words, block[nz]):
            for blocks in ordered_partitions(r, k):
                key = tuple(tuple(w[p] for p in blk) for blk in blocks)
                out[key] = out.get(key, 0.0) + float(c)
    return BoxTensor(xi.d, xi.N, k, out)


def shuffle_product(u: Word, w: Word, n_max: int) -> dict:
    """Shuffle product of two words as a word -> multiplicity map.

    Sums over all interleavings preserving the internal order of each word;
    coinciding interleavings accumulate multiplicity.
    """
    u, w = tuple(u), tuple(w)
    n = len(u) + len(w)
    if n > n_max:
        raise ValueError(f"combined length {n} exceeds level cap {n_max}")
    out: dict = {}
    for slots in itertools.combinations(range(n), len(u)):
        word = [0] * n
        iu = iter(u)
        iw = iter(w)
        slot_set = set(slots)
        for p in range(n):
            word[p] = next(iu) if p in slot_set else next(iw)
        key = tuple(word)
        out[key] = out.get(key, 0.0) + 1.0
    return out


@lru_cache(maxsize=None)
def _assignment_axes(r: int, k: int):
    """Group position assignments by block-size profile.

    Returns {sizes: [axis orders]} where each axis order lists the positions
    of block 1 ascending, then block 2, etc.  Transposing a level-r cube by
    such an order and flattening yields the concatenated-subwords relabeling.
    """
    grouped: dict = {}
    for assign in itertools.product(range(k), repeat=r):
        order = tuple(p for b in range(k) for p in range(r) if assign[p] == b)
        sizes = tuple(assign.count(b) for b in range(k))
        grouped.setdefault(sizes, []).append(order)
    return grouped


def is_group_like(xi: TensorSeries, tol: float) -> tuple[bool, float]:
    """Whether the coproduct of ``xi`` splits as the sum of level box-products.

    For every arity k in 2..N, compares the coproduct image against
    sum over level profiles (l_1, ..., l_k), total <= N, of
    xi^{l_1} box ... box xi^{l_k}, sector by sector.  Returns
    (within tolerance, max coefficient deviation).
    """
    if abs(float(xi.levels[0][0]) - 1.0) > 1e-9:
        raise ValueError("is_group_like requires level-0 coefficient 1")
    d, N = xi.d, xi.N
    worst = 0.0
    for k in range(2, N + 1):
        lhs: dict = {}
        for r in range(N + 1):
            cube = xi.levels[r].reshape((d,) * r)
            for sizes, orders in _assignment_axes(r, k).items():
                acc = lhs.get(sizes)
                if acc is None:
                    acc = np.zeros(d**r)
                    lhs[sizes] = acc
                for axes in orders:
                    acc += cube.transpose(axes).ravel()
        for sizes, acc in lhs.items():
            rhs = reduce(lambda x, y: np.multiply.outer(x, y).ravel(),
                         (xi.levels[l] for l in sizes))
            dev = float(np.max(np.abs(acc - rhs)))
            worst = max(worst, dev)
    return worst <= tol, worst


def symmetrize(block, dim: int, k: int) -> np.ndarray:
    """Average a homogeneous k-tensor block over all slot permutations.

    ``block`` may carry leading batch axes; the last axis must have size
    ``dim**k`` and is treated as the flattened k-tensor.
    """
    a = np.asarray(block, dtype=float)
    if a.shape[-1] != dim**k:
        raise ValueError(f"last axis has {a.shape[-1]} entries, expected {dim**k}")
    if k <= 1:
        return a.copy()
    lead = a.shape[:-1]
    cube = a.reshape(lead + (dim,) * k)
    nlead = len(lead)
    acc = np.zeros_like(cube)
    for perm in itertools.permutations(range(k)):
        axes = tuple(range(nlead)) + tuple(nlead + p for p in perm)
        acc += cube.transpose(axes)
    return (acc / math.factorial(k)).reshape(a.shape)


def admissible_norm(xi: TensorSeries, i: int) -> float:
    """Level-i norm: l1 over the coordinate basis (a cross norm, permutation invariant)."""
    if not (0 <= i <= xi.N):
        raise ValueError(f"level {i} outside 0..{xi.N}")
    return float(np.sum(np.abs(xi.levels[i])))
