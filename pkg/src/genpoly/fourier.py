"""Exact multilinear polynomials over {-1, 1}^n and the Fourier expansion.

Coefficients are `fractions.Fraction`; monomials are keyed by coordinate
bitmasks. Boolean expansions go through an integer butterfly transform
scaled by 2^n and only become fractions at the end.
"""
from __future__ import annotations

import re
from fractions import Fraction
from math import gcd
from typing import Mapping, Optional, Sequence

import numpy as np

from .boolean_fn import BooleanFunction, iter_bits
from .errors import DomainError

_NUMPY_THRESHOLD = 6


def walsh_hadamard(f: BooleanFunction) -> list:
    """Integer coefficients 2^n * f^(S), indexed by the mask S."""
    n = f.arity
    if n >= _NUMPY_THRESHOLD:
        bits = np.unpackbits(
            np.frombuffer(f.table.to_bytes((1 << n) // 8, "little"), dtype=np.uint8),
            bitorder="little",
        )
        return _butterfly_np(1 - 2 * bits.astype(np.int64)).tolist()
    t = f.table
    return _butterfly([-1 if (t >> u) & 1 else 1 for u in range(1 << n)])


def _butterfly_np(v: np.ndarray) -> np.ndarray:
    h = 1
    while h < v.size:
        v = v.reshape(-1, 2, h)
        a, b = v[:, 0, :].copy(), v[:, 1, :]
        v = np.stack((a + b, a - b), axis=1).reshape(-1)
        h *= 2
    return v


def _butterfly(v: list) -> list:
    """Unnormalized Walsh-Hadamard transform on Python ints, in place."""
    h = 1
    size = len(v)
    while h < size:
        for start in range(0, size, 2 * h):
            for u in range(start, start + h):
                a, b = v[u], v[u + h]
                v[u], v[u + h] = a + b, a - b
        h *= 2
    return v


class MultilinearPoly:
    """Sparse multilinear polynomial with exact rational coefficients."""

    __slots__ = ("arity", "coeffs", "_hash")

    def __init__(self, arity: int, coeffs: Optional[Mapping[int, object]] = None):
        if arity < 0:
            raise DomainError("negative arity")
        clean = {}
        bound = 1 << arity
        for mask, c in (coeffs or {}).items():
            if not 0 <= mask < bound:
                raise DomainError(f"monomial mask {mask:#x} exceeds arity {arity}")
            c = Fraction(c)
            if c:
                clean[mask] = c
        self.arity = arity
        self.coeffs = dict(sorted(clean.items()))
        self._hash = None

    @classmethod
    def constant(cls, arity: int, value) -> "MultilinearPoly":
        return cls(arity, {0: value})

    @classmethod
    def variable(cls, arity: int, i: int) -> "MultilinearPoly":
        return cls(arity, {1 << i: 1})

    def __eq__(self, other):
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        return self.arity == other.arity and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.arity, tuple(self.coeffs.items())))
        return self._hash

    def __repr__(self):
        terms = ", ".join(f"{m:#x}: {c}" for m, c in self.coeffs.items())
        return f"MultilinearPoly({self.arity}, {{{terms}}})"

    def __getitem__(self, mask: int) -> Fraction:
        return self.coeffs.get(mask, Fraction(0))

    def __add__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        _same_arity(self, other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return MultilinearPoly(self.arity, out)

    def __neg__(self):
        return MultilinearPoly(self.arity, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "MultilinearPoly":
        factor = Fraction(factor)
        return MultilinearPoly(self.arity, {m: c * factor for m, c in self.coeffs.items()})

    def __mul__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        """Product of polynomials on disjoint variable sets."""
        _same_arity(self, other)
        if self.variables() & other.variables():
            raise DomainError("product of polynomials sharing a variable is not multilinear")
        return MultilinearPoly(self.arity, _disjoint_product(self.coeffs, other.coeffs))

    def is_zero(self) -> bool:
        return not self.coeffs

    def variables(self) -> int:
        mask = 0
        for m in self.coeffs:
            mask |= m
        return mask

    def degree(self) -> int:
        return max((bin(m).count("1") for m in self.coeffs), default=0)

    def to_text(self) -> str:
        return "\n".join(
            f"S={m:#x} c={c.numerator}/{c.denominator}" for m, c in self.coeffs.items()
        )

    @classmethod
    def from_text(cls, arity: int, text: str) -> "MultilinearPoly":
        coeffs = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            match = _POLY_LINE.fullmatch(line)
            if not match:
                raise DomainError(f"cannot parse polynomial line {line!r}")
            coeffs[int(match.group(1), 16)] = Fraction(int(match.group(2)), int(match.group(3)))
        return cls(arity, coeffs)


_POLY_LINE = re.compile(r"S=0x([0-9a-fA-F]+)\s+c=(-?\d+)/(\d+)")


def _same_arity(p, q):
    if p.arity != q.arity:
        raise DomainError(f"arity mismatch {p.arity} vs {q.arity}")


def _disjoint_product(a: Mapping[int, Fraction], b: Mapping[int, Fraction]) -> dict:
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            key = ma | mb
            out[key] = out.get(key, 0) + ca * cb
    return out


def expand(f: BooleanFunction) -> MultilinearPoly:
    scale = 1 << f.arity
    coeffs = walsh_hadamard(f)
    return MultilinearPoly(
        f.arity, {s: Fraction(c, scale) for s, c in enumerate(coeffs) if c}
    )


def evaluate(p: MultilinearPoly, point: Sequence) -> Fraction:
    if len(point) != p.arity:
        raise DomainError(f"point has length {len(point)}, polynomial arity is {p.arity}")
    vals = [Fraction(v) for v in point]
    total = Fraction(0)
    for mask, c in p.coeffs.items():
        term = c
        for i in iter_bits(mask):
            term *= vals[i]
            if not term:
                break
        total += term
    return total


def evaluate_cube(p: MultilinearPoly) -> list:
    """Values of p at every point of {-1, 1}^n, indexed like truth tables.

    Same numbers as calling evaluate on each point, via one integer transform
    over a common denominator.
    """
    size = 1 << p.arity
    den = 1
    for c in p.coeffs.values():
        den = den * c.denominator // gcd(den, c.denominator)
    nums = [0] * size
    for mask, c in p.coeffs.items():
        nums[mask] = c.numerator * (den // c.denominator)
    bound = max((abs(x) for x in nums), default=0) * size
    if size >= 1 << _NUMPY_THRESHOLD and bound < 1 << 62:
        nums = _butterfly_np(np.array(nums, dtype=np.int64)).tolist()
    else:
        nums = _butterfly(nums)
    return [Fraction(x, den) for x in nums]


def parseval_norm_sq(p: MultilinearPoly) -> Fraction:
    return sum((c * c for c in p.coeffs.values()), Fraction(0))


def shift(p: MultilinearPoly, offsets: Sequence) -> MultilinearPoly:
    """p(x_1 + k_1, ..., x_n + k_n), expanded."""
    if len(offsets) != p.arity:
        raise DomainError("offset vector length does not match arity")
    coeffs = dict(p.coeffs)
    for i, k in enumerate(offsets):
        k = Fraction(k)
        if not k:
            continue
        bit = 1 << i
        for mask, c in list(coeffs.items()):
            if mask & bit:
                low = mask ^ bit
                coeffs[low] = coeffs.get(low, 0) + k * c
    return MultilinearPoly(p.arity, coeffs)


def affine_shift(p: MultilinearPoly, scales: Sequence, offsets: Sequence) -> MultilinearPoly:
    """p(a_1 x_1 + k_1, ..., a_n x_n + k_n) with every a_i nonzero."""
    if len(scales) != p.arity:
        raise DomainError("scale vector length does not match arity")
    if any(Fraction(a) == 0 for a in scales):
        raise DomainError("affine shift needs nonzero scales")
    # p(a x + k) = p'(x + k / a) where p' = p(a x)
    scaled = {}
    for mask, c in p.coeffs.items():
        for i in iter_bits(mask):
            c *= Fraction(scales[i])
        scaled[mask] = c
    return shift(
        MultilinearPoly(p.arity, scaled),
        [Fraction(k) / Fraction(a) for k, a in zip(offsets, scales)],
    )


def balance(p: MultilinearPoly):
    mean = p[0]
    coeffs = {m: c for m, c in p.coeffs.items() if m}
    return MultilinearPoly(p.arity, coeffs), mean


def relabel(p: MultilinearPoly, mapping: Sequence[int], arity: int) -> MultilinearPoly:
    """Rename variable i to mapping[i] in a polynomial of the given arity."""
    out = {}
    for mask, c in p.coeffs.items():
        new = 0
        for i in iter_bits(mask):
            new |= 1 << mapping[i]
        out[new] = c
    return MultilinearPoly(arity, out)


def compose(outer: MultilinearPoly, inners: Sequence[MultilinearPoly]) -> MultilinearPoly:
    """outer(inner_0(row 0), ..., inner_{n-1}(row n-1)) on an n x m grid.

    Every inner has the same arity m; grid cell (i, j) is variable i * m + j.
    """
    n = outer.arity
    if len(inners) != n:
        raise DomainError(f"outer has arity {n} but {len(inners)} inners were given")
    m = inners[0].arity if inners else 0
    if any(q.arity != m for q in inners):
        raise DomainError("inner polynomials must share one arity")
    rows = [{mask << (i * m): c for mask, c in q.coeffs.items()} for i, q in enumerate(inners)]
    out: dict = {}
    cache = {0: {0: Fraction(1)}}
    # products over subsets, built by extending the subset without its top row
    for mask in sorted(outer.coeffs):
        prod = _row_product(mask, rows, cache)
        c = outer.coeffs[mask]
        for key, v in prod.items():
            out[key] = out.get(key, 0) + c * v
    return MultilinearPoly(n * m, out)


def compose_dense(outer: Sequence[int], inners: Sequence[Sequence[int]], m: int) -> np.ndarray:
    """compose on dense integer coefficient vectors, exact in int64.

    outer has 2^n entries indexed by mask, each inner 2^m. The result has
    2^(n*m) entries indexed like compose's output; scales multiply, so with
    walsh_hadamard inputs it equals 2^(n + n*m) times the composed expansion.
    The caller must keep the magnitudes below 2^63.
    """
    n = len(inners)
    if len(outer) != 1 << n:
        raise DomainError("outer vector length does not match the number of inners")
    t = np.asarray(outer, dtype=np.int64).reshape((2,) * n) if n else np.asarray(outer, dtype=np.int64)
    for i, inner in enumerate(inners):
        if len(inner) != 1 << m:
            raise DomainError("inner vector length must be 2^m")
        # axis n-1-i holds row i; replace its {absent, present} index by the row's masks
        lift = np.zeros((2, 1 << m), dtype=np.int64)
        lift[0, 0] = 1 << m  # an absent row still carries the inner scale
        lift[1] = np.asarray(inner, dtype=np.int64)
        axis = n - 1 - i
        t = np.moveaxis(np.tensordot(t, lift, axes=([axis], [0])), -1, axis)
    return t.reshape(-1)


def transpose_dense(vec: np.ndarray, n: int, m: int) -> np.ndarray:
    """Re-index a dense vector from cell (i, j) -> j * n + i to cell (i, j) -> i * m + j."""
    size = n * m
    if size == 0:
        return vec
    # in C order, axis k of a (2,) * size array holds bit size - 1 - k
    order = []
    for k in range(size):
        i, j = divmod(size - 1 - k, m)
        order.append(size - 1 - (j * n + i))
    return np.ascontiguousarray(vec.reshape((2,) * size).transpose(order)).reshape(-1)


def _row_product(mask: int, rows, cache) -> dict:
    if mask in cache:
        return cache[mask]
    top = mask.bit_length() - 1
    rest = _row_product(mask ^ (1 << top), rows, cache)
    prod = _disjoint_product(rest, rows[top])
    cache[mask] = prod
    return prod


def substitute(outer: MultilinearPoly, inners: Sequence[MultilinearPoly]) -> MultilinearPoly:
    """outer(inner_0, ..., inner_{k-1}) for inners on pairwise disjoint variables."""
    if len(inners) != outer.arity:
        raise DomainError("need one inner polynomial per outer variable")
    arity = inners[0].arity if inners else 0
    seen = 0
    for q in inners:
        if q.arity != arity:
            raise DomainError("inner polynomials must share one arity")
        if q.variables() & seen:
            raise DomainError("inner polynomials overlap; the result would not be multilinear")
        seen |= q.variables()
    out: dict = {}
    for mask, c in outer.coeffs.items():
        prod = {0: Fraction(1)}
        for i in iter_bits(mask):
            prod = _disjoint_product(prod, inners[i].coeffs)
        for key, v in prod.items():
            out[key] = out.get(key, 0) + c * v
    return MultilinearPoly(arity, out)


def support(p: MultilinearPoly) -> set:
    return set(p.coeffs)


def inclusion_maximal_sets(p: MultilinearPoly) -> set:
    masks = sorted(p.coeffs, key=lambda m: -bin(m).count("1"))
    maximal = []
    for m in masks:
        if not any(m & big == m for big in maximal):
            maximal.append(m)
    return set(maximal)


def dependent_mask(p: MultilinearPoly) -> int:
    """Union of the support, i.e. the relevant coordinates."""
    return p.variables()


def is_dictator(p: MultilinearPoly) -> bool:
    """Non-constant and depends on exactly one coordinate."""
    v = p.variables()
    return v != 0 and v & (v - 1) == 0


def is_two_valued_like(p: MultilinearPoly) -> bool:
    return _two_valued_like(p, is_dictator(p))


def is_boolean_like(p: MultilinearPoly) -> bool:
    """Two-valued-like where the only degree-1 functions allowed are +-x_i."""
    signed_dictator = (
        len(p.coeffs) == 1
        and is_dictator(p)
        and abs(next(iter(p.coeffs.values()))) == 1
    )
    return _two_valued_like(p, signed_dictator)


def _two_valued_like(p: MultilinearPoly, dictator: bool) -> bool:
    if (p.degree() == 1) != dictator:
        return False
    if dictator:
        return True
    wide = 0
    for m in p.coeffs:
        if m & (m - 1):
            wide |= m
    return p.variables() & ~wide == 0


def grid_transpose_map(n: int, m: int) -> list:
    """Index map from the f-side grid (j * n + i) to the g-side grid (i * m + j)."""
    mapping = [0] * (n * m)
    for j in range(m):
        for i in range(n):
            mapping[j * n + i] = i * m + j
    return mapping
