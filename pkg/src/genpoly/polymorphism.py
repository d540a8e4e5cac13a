"""Generalized polymorphism instances, the two checkers, Z0 and block decomposition.

An instance is f0, f_0..f_{m-1} of arity n and g0, g_0..g_{n-1} of arity m
satisfying f0(g_0(row 0), ..., g_{n-1}(row n-1)) = g0(f_0(col 0), ..., f_{m-1}(col m-1))
for every n x m sign grid z. Grid cell (i, j) is bit i * m + j of a grid point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .boolean_fn import BooleanFunction, iter_bits, mask_of
from .errors import ConsistencyError, DomainError, ResourceError, ValidationError
from .fourier import MultilinearPoly, compose, compose_dense, expand, grid_transpose_map, relabel, shift
from .fourier import transpose_dense, walsh_hadamard
from .fourier import inclusion_maximal_sets

POINTWISE_BIT_LIMIT = 25
_CHUNK = 1 << 16


@dataclass(frozen=True)
class PolymorphismInstance:
    n: int
    m: int
    f0: BooleanFunction
    fs: tuple  # f_0..f_{m-1}, arity n
    g0: BooleanFunction
    gs: tuple  # g_0..g_{n-1}, arity m

    def __post_init__(self):
        object.__setattr__(self, "fs", tuple(self.fs))
        object.__setattr__(self, "gs", tuple(self.gs))
        if len(self.fs) != self.m or len(self.gs) != self.n:
            raise ValidationError(
                f"expected {self.m} column functions and {self.n} row functions, "
                f"got {len(self.fs)} and {len(self.gs)}"
            )
        for name, fn, arity in [("f0", self.f0, self.n), ("g0", self.g0, self.m)]:
            if fn.arity != arity:
                raise ValidationError(f"{name} has arity {fn.arity}, expected {arity}")
        for j, fn in enumerate(self.fs):
            if fn.arity != self.n:
                raise ValidationError(f"f{j + 1} has arity {fn.arity}, expected {self.n}")
        for i, fn in enumerate(self.gs):
            if fn.arity != self.m:
                raise ValidationError(f"g{i + 1} has arity {fn.arity}, expected {self.m}")

    def key(self) -> str:
        """Fixed-width serialization; its string order is the catalogue order."""
        f_part = ",".join(_hex_fixed(f) for f in (self.f0,) + self.fs)
        g_part = ",".join(_hex_fixed(g) for g in (self.g0,) + self.gs)
        return f"{self.n}x{self.m};f={f_part};g={g_part}"

    def to_text(self) -> str:
        lines = [f"n={self.n} m={self.m}", f"f0 {self.f0.to_text()}"]
        lines += [f"f{j + 1} {f.to_text()}" for j, f in enumerate(self.fs)]
        lines.append(f"g0 {self.g0.to_text()}")
        lines += [f"g{i + 1} {g.to_text()}" for i, g in enumerate(self.gs)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PolymorphismInstance":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValidationError("empty instance file")
        header = dict(_kv(tok) for tok in lines[0].split())
        try:
            n, m = int(header["n"]), int(header["m"])
        except (KeyError, ValueError):
            raise ValidationError(f"bad header {lines[0]!r}; expected 'n=<n> m=<m>'") from None
        funcs = {}
        for ln in lines[1:]:
            name, _, rest = ln.partition(" ")
            if name in funcs:
                raise ValidationError(f"duplicate line for {name}")
            try:
                funcs[name] = BooleanFunction.from_text(rest)
            except DomainError as exc:
                raise ValidationError(f"{name}: {exc}") from None
        expected = ["f0"] + [f"f{j + 1}" for j in range(m)] + ["g0"] + [f"g{i + 1}" for i in range(n)]
        if sorted(funcs) != sorted(expected):
            missing = sorted(set(expected) - set(funcs))
            extra = sorted(set(funcs) - set(expected))
            raise ValidationError(f"function lines mismatch: missing {missing}, unexpected {extra}")
        return cls(
            n, m,
            funcs["f0"], tuple(funcs[f"f{j + 1}"] for j in range(m)),
            funcs["g0"], tuple(funcs[f"g{i + 1}"] for i in range(n)),
        )


def _kv(token: str):
    k, _, v = token.partition("=")
    return k, v


def _hex_fixed(f: BooleanFunction) -> str:
    width = max(1, (1 << f.arity) // 4)
    return f"{f.table:0{width}x}"


def table_bits(f: BooleanFunction) -> np.ndarray:
    size = 1 << f.arity
    nbytes = max(1, size // 8)
    raw = np.frombuffer(f.table.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size]


# checkers


def left_values(f0: BooleanFunction, gs: Sequence[BooleanFunction], m: int, z: np.ndarray) -> np.ndarray:
    """Table bits of f0(g_1(row 1), ..., g_n(row n)) at the grid points z."""
    row_mask = (1 << m) - 1
    x = np.zeros_like(z)
    for i, g in enumerate(gs):
        x |= table_bits(g)[(z >> (i * m)) & row_mask].astype(np.int64) << i
    return table_bits(f0)[x]


def right_values(g0: BooleanFunction, fs: Sequence[BooleanFunction], n: int, z: np.ndarray) -> np.ndarray:
    """Table bits of g0(f_1(column 1), ..., f_m(column m)) at the grid points z."""
    m = len(fs)
    y = np.zeros_like(z)
    for j, f in enumerate(fs):
        col = np.zeros_like(z)
        for i in range(n):
            col |= ((z >> (i * m + j)) & 1) << i
        y |= table_bits(f)[col].astype(np.int64) << j
    return table_bits(g0)[y]


def first_mismatch(P: PolymorphismInstance, bit_limit: int = POINTWISE_BIT_LIMIT) -> Optional[int]:
    """Smallest grid point where the two sides differ, or None."""
    nbits = P.n * P.m
    if nbits > bit_limit:
        raise ResourceError(
            f"pointwise check needs 2^{nbits} grid points; limit is 2^{bit_limit}"
        )
    total = 1 << nbits
    for start in range(0, total, _CHUNK):
        z = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        lhs, rhs = left_values(P.f0, P.gs, P.m, z), right_values(P.g0, P.fs, P.n, z)
        bad = np.flatnonzero(lhs != rhs)
        if bad.size:
            return start + int(bad[0])
    return None


def check_pointwise(P: PolymorphismInstance, bit_limit: int = POINTWISE_BIT_LIMIT) -> bool:
    return first_mismatch(P, bit_limit) is None


def left_expansion(f0: BooleanFunction, gs: Sequence[BooleanFunction]) -> MultilinearPoly:
    """Expansion of f0(g_1, ..., g_n), cell (i, j) -> variable i * m + j."""
    return compose(expand(f0), [expand(g) for g in gs])


def right_expansion(g0: BooleanFunction, fs: Sequence[BooleanFunction], n: int) -> MultilinearPoly:
    """Expansion of g0(f_1, ..., f_m) on the same variable indexing as left_expansion."""
    m = len(fs)
    raw = compose(expand(g0), [expand(f) for f in fs])
    return relabel(raw, grid_transpose_map(n, m), n * m)


def composed_sides(P: PolymorphismInstance):
    """Both composed expansions on the g-side grid indexing (cell (i, j) -> i * m + j)."""
    return left_expansion(P.f0, P.gs), right_expansion(P.g0, P.fs, P.n)


DENSE_FOURIER_CELLS = 22


def left_coefficients(f0: BooleanFunction, gs: Sequence[BooleanFunction], m: int) -> np.ndarray:
    """Dense expansion of f0(g_1, ..., g_n), scaled by 2^(n + m + nm) to stay integral."""
    return compose_dense(walsh_hadamard(f0), [walsh_hadamard(g) for g in gs], m) << m


def right_coefficients(g0: BooleanFunction, fs: Sequence[BooleanFunction], n: int) -> np.ndarray:
    """Dense expansion of g0(f_1, ..., f_m) on the left side's indexing and scale."""
    m = len(fs)
    raw = compose_dense(walsh_hadamard(g0), [walsh_hadamard(f) for f in fs], n) << n
    return transpose_dense(raw, n, m)


def check_fourier(P: PolymorphismInstance) -> bool:
    n, m = P.n, P.m
    if n * m > DENSE_FOURIER_CELLS or n + m + n * m > 60:
        left, right = composed_sides(P)
        return left == right
    left = left_coefficients(P.f0, P.gs, m)
    return bool(np.array_equal(left, right_coefficients(P.g0, P.fs, n)))


def check_naive(P: PolymorphismInstance) -> bool:
    """Direct evaluation on sign tuples; deliberately shares nothing with the fast checker."""
    n, m = P.n, P.m
    for z in range(1 << (n * m)):
        grid = [[-1 if (z >> (i * m + j)) & 1 else 1 for j in range(m)] for i in range(n)]
        x = [P.gs[i].eval_signs(grid[i]) for i in range(n)]
        y = [P.fs[j].eval_signs([grid[i][j] for i in range(n)]) for j in range(m)]
        if P.f0.eval_signs(x) != P.g0.eval_signs(y):
            return False
    return True


# degenerate reduction


@dataclass(frozen=True)
class Reduction:
    """Constant inputs fixed, leaving the slice on which the outer functions are read.

    const_f / const_g map an index to the constant value of f_j / g_i.
    f0_slice reads the coordinates in `live_rows` (in order); g0_slice reads `live_cols`.
    """
    const_f: dict
    const_g: dict
    live_rows: tuple  # I: rows with non-constant g_i
    live_cols: tuple  # J
    f0_slice: BooleanFunction
    g0_slice: BooleanFunction
    rows: frozenset  # I~: rows the sliced f0 depends on
    cols: frozenset  # J~


def reduce_degenerate(P: PolymorphismInstance) -> Reduction:
    const_g = {}
    for i, g in enumerate(P.gs):
        c = g.constant_value()
        if c is not None:
            const_g[i] = c
    const_f = {}
    for j, f in enumerate(P.fs):
        c = f.constant_value()
        if c is not None:
            const_f[j] = c
    live_rows = tuple(i for i in range(P.n) if i not in const_g)
    live_cols = tuple(j for j in range(P.m) if j not in const_f)
    f0_slice = P.f0.restrict_many(const_g)
    g0_slice = P.g0.restrict_many(const_f)
    rows = frozenset(live_rows[k] for k in iter_bits(f0_slice.dep_mask()))
    cols = frozenset(live_cols[k] for k in iter_bits(g0_slice.dep_mask()))
    return Reduction(const_f, const_g, live_rows, live_cols, f0_slice, g0_slice, rows, cols)


def compute_z0(P: PolymorphismInstance, reduction: Optional[Reduction] = None) -> frozenset:
    """Grid cells the composed identity depends on, from both sides; they must agree.

    Rows are the coordinates the outer function reads after constant inner
    functions are fixed; without constant inner functions this is dep(f0).
    """
    red = reduction or reduce_degenerate(P)
    deps_g = [g.dep() for g in P.gs]
    deps_f = [f.dep() for f in P.fs]
    by_rows = frozenset((i, j) for i in red.rows for j in deps_g[i])
    by_cols = frozenset((i, j) for j in red.cols for i in deps_f[j])
    if by_rows != by_cols:
        raise ConsistencyError(
            f"row formula gives {sorted(by_rows)} but column formula gives {sorted(by_cols)}"
        )
    return by_rows


@dataclass(frozen=True)
class Block:
    cells: tuple  # sorted (i, j) pairs
    rows1: tuple
    rows2: tuple
    cols1: tuple
    cols2: tuple

    @property
    def rows(self) -> tuple:
        return tuple(sorted(self.rows1 + self.rows2))

    @property
    def cols(self) -> tuple:
        return tuple(sorted(self.cols1 + self.cols2))

    @property
    def z2(self) -> tuple:
        r2, c2 = set(self.rows2), set(self.cols2)
        return tuple(c for c in self.cells if c[0] in r2 and c[1] in c2)


@dataclass(frozen=True)
class BlockPartition:
    z0: frozenset
    blocks: tuple = field(default_factory=tuple)


def connected_blocks(cells) -> list:
    """Components under the same-row-or-same-column relation, ordered by minimal cell."""
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in cells:
        r, c = ("r", i), ("c", j)
        parent.setdefault(r, r)
        parent.setdefault(c, c)
        ra, rb = find(r), find(c)
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for cell in cells:
        groups.setdefault(find(("r", cell[0])), []).append(cell)
    comps = [tuple(sorted(g)) for g in groups.values()]
    comps.sort()
    return comps


def refine_block(cells: Sequence, row_degree_one, col_degree_one) -> Block:
    rows = sorted({i for i, _ in cells})
    cols = sorted({j for _, j in cells})
    return Block(
        tuple(cells),
        tuple(i for i in rows if row_degree_one(i)),
        tuple(i for i in rows if not row_degree_one(i)),
        tuple(j for j in cols if col_degree_one(j)),
        tuple(j for j in cols if not col_degree_one(j)),
    )


def partition_blocks(P: PolymorphismInstance, reduction: Optional[Reduction] = None) -> BlockPartition:
    z0 = compute_z0(P, reduction)
    row_dict = {i: P.gs[i].dictator_form() is not None for i in {c[0] for c in z0}}
    col_dict = {j: P.fs[j].dictator_form() is not None for j in {c[1] for c in z0}}
    blocks = tuple(
        refine_block(comp, row_dict.__getitem__, col_dict.__getitem__)
        for comp in connected_blocks(z0)
    )
    return BlockPartition(z0, blocks)


# balancing and support propagation


@dataclass(frozen=True)
class BalancedPolys:
    f0: MultilinearPoly  # f0 shifted by the means of the g_i
    fs: tuple  # f_j minus its mean
    g0: MultilinearPoly
    gs: tuple


def balanced_polys(P: PolymorphismInstance) -> BalancedPolys:
    f_exp = [expand(f) for f in P.fs]
    g_exp = [expand(g) for g in P.gs]
    f_means = [p[0] for p in f_exp]
    g_means = [p[0] for p in g_exp]
    return BalancedPolys(
        shift(expand(P.f0), g_means),
        tuple(p - MultilinearPoly.constant(P.n, p[0]) for p in f_exp),
        shift(expand(P.g0), f_means),
        tuple(p - MultilinearPoly.constant(P.m, p[0]) for p in g_exp),
    )


def verify_support_propagation(bal: BalancedPolys, rows_set: int, row_sets: dict):
    """Push a monomial S of f0 and monomials U_i of the g_i through the identity.

    Returns (T, {j: V_j}) with T the union of the U_i and V_j = {i in S : j in U_i},
    and raises ConsistencyError if T is not in supp(g0) or some V_j not in supp(f_j).
    When S and all U_i are inclusion-maximal the outputs must be too.
    """
    if rows_set not in bal.f0.coeffs:
        raise DomainError("S is not in the support of f0")
    rows = list(iter_bits(rows_set))
    if sorted(row_sets) != rows:
        raise DomainError("need exactly one set U_i for every i in S")
    for i in rows:
        if row_sets[i] not in bal.gs[i].coeffs:
            raise DomainError(f"U_{i} is not in the support of g_{i}")
    cols_set = 0
    for i in rows:
        cols_set |= row_sets[i]
    col_sets = {}
    for j in iter_bits(cols_set):
        col_sets[j] = mask_of(i for i in rows if (row_sets[i] >> j) & 1)
    if cols_set not in bal.g0.coeffs:
        raise ConsistencyError(f"T={cols_set:#x} missing from the support of g0")
    for j, v in col_sets.items():
        if v not in bal.fs[j].coeffs:
            raise ConsistencyError(f"V_{j}={v:#x} missing from the support of f_{j}")
    maximal_in = rows_set in inclusion_maximal_sets(bal.f0) and all(
        row_sets[i] in inclusion_maximal_sets(bal.gs[i]) for i in rows
    )
    if maximal_in:
        if cols_set not in inclusion_maximal_sets(bal.g0):
            raise ConsistencyError("T is not inclusion-maximal although the inputs were")
        for j, v in col_sets.items():
            if v not in inclusion_maximal_sets(bal.fs[j]):
                raise ConsistencyError(f"V_{j} is not inclusion-maximal although the inputs were")
    return cols_set, col_sets


def kappa_selection(P: PolymorphismInstance) -> dict:
    """Shift constants k_ij = f_j^(V - i) / f_j^(V) with V = dep(f_j), for every
    cell (i, j) of Z0 whose f_j has degree at least 2.

    The same ratio read from g_i (with U = dep(g_i)) must agree whenever g_i
    also has degree at least 2; a disagreement raises ConsistencyError.
    """
    z0 = compute_z0(P)
    f_exp = {j: expand(P.fs[j]) for j in {c[1] for c in z0}}
    g_exp = {i: expand(P.gs[i]) for i in {c[0] for c in z0}}
    out = {}
    for i, j in sorted(z0):
        fj, gi = f_exp[j], g_exp[i]
        if fj.degree() < 2:
            continue
        top = fj.variables()
        k = fj[top & ~(1 << i)] / fj[top]
        if gi.degree() >= 2:
            top_g = gi.variables()
            k_g = gi[top_g & ~(1 << j)] / gi[top_g]
            if k_g != k:
                raise ConsistencyError(f"shift constant for cell {(i, j)}: {k} from f_{j}, {k_g} from g_{i}")
        out[(i, j)] = k
    return out
