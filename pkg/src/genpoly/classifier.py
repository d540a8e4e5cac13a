"""Canonical forms of Boolean generalized polymorphisms: extraction and reconstruction.

A canonical form lists row- and column-disjoint blocks of grid cells, each
with a block class (Singleton, XorLike, AndOrLike), an outer function h with
one input per block, and a ledger for constant and unconstrained inner
functions. `reconstruct` inverts `classify` bit for bit.

Embedded functions (phi, gamma and their 0/1 variants) are value tuples
indexed by sub-point: bit k of the index is set iff the k-th coordinate of
the function's input set (ascending) is -1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Sequence, Union

from .boolean_fn import BooleanFunction, dictator_table, full_mask, iter_bits, positive_half
from .errors import ClassificationFailure, ConsistencyError, DomainError, PreconditionError
from .errors import ValidationError
from .polymorphism import PolymorphismInstance, check_pointwise, connected_blocks
from .polymorphism import partition_blocks, reduce_degenerate

# table helpers


@lru_cache(maxsize=None)
def subpoint_index(n: int, coords: tuple) -> tuple:
    """For every point u of arity n, the index of its restriction to `coords`."""
    out = []
    for u in range(1 << n):
        v = 0
        for k, c in enumerate(coords):
            if (u >> c) & 1:
                v |= 1 << k
        out.append(v)
    return tuple(out)


def embed_bits(n: int, coords: tuple, bits: Sequence[int]) -> int:
    """Table of arity n whose bit at u is bits[restriction of u to coords]."""
    idx = subpoint_index(n, coords)
    table = 0
    for u, v in enumerate(idx):
        if bits[v]:
            table |= 1 << u
    return table


@lru_cache(maxsize=None)
def parity_table(n: int, mask: int) -> int:
    t = 0
    for u in range(1 << n):
        if bin(u & mask).count("1") & 1:
            t |= 1 << u
    return t


@lru_cache(maxsize=None)
def cube_table(n: int, coords: tuple, signs: tuple) -> int:
    """Indicator of the subcube x_c = s for every (c, s)."""
    t = full_mask(n)
    for c, s in zip(coords, signs):
        half = positive_half(n, c)
        t &= half if s == 1 else half ^ full_mask(n)
    return t


def sign_bits(values: Sequence[int]) -> list:
    return [1 if v == -1 else 0 for v in values]


def _values_on(f: BooleanFunction, coords: tuple, base: int) -> list:
    """f read on the sub-points of `coords`, every other coordinate taken from `base`."""
    t = f.table
    out = []
    for v in range(1 << len(coords)):
        u = base
        for k, c in enumerate(coords):
            if (v >> k) & 1:
                u |= 1 << c
        out.append(-1 if (t >> u) & 1 else 1)
    return out


# single-function pattern matching


@dataclass(frozen=True)
class XorForm:
    """f(x) = phi(x|dep1) * prod over dep2 of x_i."""
    phi: tuple


@dataclass(frozen=True)
class AndOrForm:
    """f = B where phi01(x|dep1) = 1 and x|dep2 = kappa; f = -B elsewhere."""
    B: int
    kappa: tuple
    phi01: tuple


def match_generalized_monomial(
    f: BooleanFunction, dep2: Sequence[int], dep1: Sequence[int]
) -> Optional[Union[XorForm, AndOrForm]]:
    dep2, dep1 = tuple(sorted(dep2)), tuple(sorted(dep1))
    n = f.arity
    if set(dep2) & set(dep1):
        raise DomainError("dep2 and dep1 overlap")
    if f.dep_mask() != sum(1 << c for c in dep2 + dep1):
        raise DomainError("dep2 and dep1 must split dep(f)")
    # XOR case: read phi with dep2 at +1 and check the parity factorization
    phi = _values_on(f, dep1, 0)
    mask2 = sum(1 << c for c in dep2)
    if embed_bits(n, dep1, sign_bits(phi)) ^ parity_table(n, mask2) == f.table:
        return XorForm(tuple(phi))
    if not dep2:
        return None
    # AND/OR case: the minority value sits on a subcube of the dep2 coordinates
    ones = bin(f.table).count("1")
    half = 1 << (n - 1)
    if ones == half:
        return None
    B = -1 if ones < half else 1
    minority = f.table if B == -1 else f.table ^ full_mask(n)
    kappa = []
    for c in dep2:
        pos = positive_half(n, c)
        if minority & pos == minority:
            kappa.append(1)
        elif minority & pos == 0:
            kappa.append(-1)
        else:
            return None
    base = sum(1 << c for c, s in zip(dep2, kappa) if s == -1)
    phi01 = [1 if v == B else 0 for v in _values_on(f, dep1, base)]
    indicator = embed_bits(n, dep1, phi01) & cube_table(n, dep2, tuple(kappa))
    if indicator != minority:
        return None
    return AndOrForm(B, tuple(kappa), tuple(phi01))


def match_affine_monomial(f: BooleanFunction) -> Optional[Union[XorForm, AndOrForm]]:
    """XorForm with phi = (A,) for A * prod x_i, or AndOrForm for 2B prod((k_i x_i + 1)/2) - B."""
    if f.is_constant():
        raise PreconditionError("affine monomial match needs a non-constant function")
    return match_generalized_monomial(f, tuple(f.dep()), ())


# block classes


class _Layout:
    """Row/column structure implied by a block's cells."""

    def __init__(self, cells: tuple):
        self.cells = cells
        row_cells, col_cells = {}, {}
        for i, j in cells:
            row_cells.setdefault(i, []).append(j)
            col_cells.setdefault(j, []).append(i)
        self.rows = tuple(sorted(row_cells))
        self.cols = tuple(sorted(col_cells))
        self.rows1 = tuple(i for i in self.rows if len(row_cells[i]) == 1)
        self.rows2 = tuple(i for i in self.rows if len(row_cells[i]) > 1)
        self.cols1 = tuple(j for j in self.cols if len(col_cells[j]) == 1)
        self.cols2 = tuple(j for j in self.cols if len(col_cells[j]) > 1)
        c1, c2 = set(self.cols1), set(self.cols2)
        r1, r2 = set(self.rows1), set(self.rows2)
        self.row_dep1 = {i: tuple(sorted(j for j in row_cells[i] if j in c1)) for i in self.rows}
        self.row_dep2 = {i: tuple(sorted(j for j in row_cells[i] if j in c2)) for i in self.rows}
        self.col_dep1 = {j: tuple(sorted(i for i in col_cells[j] if i in r1)) for j in self.cols}
        self.col_dep2 = {j: tuple(sorted(i for i in col_cells[j] if i in r2)) for j in self.cols}


def _check_cells(cells, n: int, m: int):
    if not cells:
        raise ValidationError("block has no cells")
    if len(set(cells)) != len(cells):
        raise ValidationError("block lists a cell twice")
    for i, j in cells:
        if not (0 <= i < n and 0 <= j < m):
            raise ValidationError(f"cell {(i, j)} outside the {n}x{m} grid")
    if len(connected_blocks(cells)) != 1:
        raise ValidationError(f"cells {list(cells)} are not connected")


def _check_sign(value, what: str):
    if value not in (1, -1):
        raise ValidationError(f"{what} must be +1 or -1, got {value!r}")


def _check_embedded(values, arity: int, what: str, allowed: tuple):
    if len(values) != 1 << arity:
        raise ValidationError(f"{what} needs {1 << arity} values, got {len(values)}")
    if any(v not in allowed for v in values):
        raise ValidationError(f"{what} takes values outside {allowed}")
    # the inner function must read all of its inputs
    for k in range(arity):
        if all(values[v] == values[v | (1 << k)] for v in range(1 << arity) if not (v >> k) & 1):
            raise ValidationError(f"{what} ignores its input {k}")


def _point_index(u: int, coords: tuple, signs: dict) -> int:
    """Index into an embedded function reading s_c * x_c for c in coords."""
    v = 0
    for k, c in enumerate(coords):
        neg = (u >> c) & 1
        if signs.get(c, 1) == -1:
            neg ^= 1
        if neg:
            v |= 1 << k
    return v


@dataclass(frozen=True)
class Singleton:
    """f_j = sgn_f * x_i, g_i = sgn_g * y_j, block outputs f0_sign * x_i and g0_sign * y_j."""
    row: int
    col: int
    sgn_f: int
    sgn_g: int
    f0_sign: int = 1
    g0_sign: int = 1

    kind = "singleton"

    @property
    def cells(self) -> tuple:
        return ((self.row, self.col),)

    def validate(self, n: int, m: int):
        _check_cells(self.cells, n, m)
        for name in ("sgn_f", "sgn_g", "f0_sign", "g0_sign"):
            _check_sign(getattr(self, name), name)
        if self.f0_sign * self.sgn_g != self.g0_sign * self.sgn_f:
            raise ValidationError(
                "singleton signs disagree: f0_sign * sgn_g must equal g0_sign * sgn_f"
            )

    def row_functions(self, m: int) -> dict:
        return {self.row: _dictator(m, self.col, self.sgn_g)}

    def col_functions(self, n: int) -> dict:
        return {self.col: _dictator(n, self.row, self.sgn_f)}

    def outer_row_values(self) -> tuple:
        return (self.row,), [self.f0_sign, -self.f0_sign]

    def outer_col_values(self) -> tuple:
        return (self.col,), [self.g0_sign, -self.g0_sign]

    def flipped(self) -> "Singleton":
        return Singleton(self.row, self.col, self.sgn_f, self.sgn_g, -self.f0_sign, -self.g0_sign)

    @property
    def orientation(self) -> int:
        return self.f0_sign

    def to_json(self) -> dict:
        return {
            "type": self.kind, "cells": [list(c) for c in self.cells],
            "sgn_f": self.sgn_f, "sgn_g": self.sgn_g,
            "f0_sign": self.f0_sign, "g0_sign": self.g0_sign,
        }


def _dictator(n: int, i: int, sign: int) -> BooleanFunction:
    t = dictator_table(n, i)
    return BooleanFunction(n, t if sign == 1 else t ^ full_mask(n))


@dataclass(frozen=True)
class XorLike:
    """g_i = gamma_i(y|dep1) * prod_{dep2} y_j and f_j = phi_j(x|dep1) * prod_{dep2} x_i.

    row_fns has an entry for every row of the block; for a dictator row the
    input set is empty and gamma_i is its sign. Same for col_fns.
    """
    cells: tuple
    row_fns: tuple  # ((i, values), ...)
    col_fns: tuple
    orientation: int = 1

    kind = "xor"

    @cached_property
    def layout(self) -> _Layout:
        return _Layout(self.cells)

    def validate(self, n: int, m: int):
        _check_cells(self.cells, n, m)
        if len(self.cells) < 2:
            raise ValidationError("a one-cell block must be a Singleton")
        _check_sign(self.orientation, "orientation")
        lay = self.layout
        rows = dict(self.row_fns)
        cols = dict(self.col_fns)
        if tuple(sorted(rows)) != lay.rows or len(rows) != len(self.row_fns):
            raise ValidationError("XorLike needs one gamma per block row")
        if tuple(sorted(cols)) != lay.cols or len(cols) != len(self.col_fns):
            raise ValidationError("XorLike needs one phi per block column")
        for i in lay.rows:
            _check_embedded(rows[i], len(lay.row_dep1[i]), f"gamma_{i}", (1, -1))
        for j in lay.cols:
            _check_embedded(cols[j], len(lay.col_dep1[j]), f"phi_{j}", (1, -1))

    def row_functions(self, m: int) -> dict:
        lay = self.layout
        out = {}
        for i, vals in self.row_fns:
            table = embed_bits(m, lay.row_dep1[i], sign_bits(vals))
            out[i] = BooleanFunction(m, table ^ parity_table(m, _mask(lay.row_dep2[i])))
        return out

    def col_functions(self, n: int) -> dict:
        lay = self.layout
        out = {}
        for j, vals in self.col_fns:
            table = embed_bits(n, lay.col_dep1[j], sign_bits(vals))
            out[j] = BooleanFunction(n, table ^ parity_table(n, _mask(lay.col_dep2[j])))
        return out

    def outer_row_values(self) -> tuple:
        lay = self.layout
        rows = lay.rows
        local = {i: k for k, i in enumerate(rows)}
        gammas = dict(self.row_fns)
        dict_signs = {local[i]: gammas[i][0] for i in lay.rows1}
        phis = dict(self.col_fns)
        wide = [(tuple(local[i] for i in lay.col_dep1[j]), phis[j]) for j in lay.cols2]
        wide_mask = _mask(local[i] for i in lay.rows2)
        vals = []
        for u in range(1 << len(rows)):
            v = -self.orientation if bin(u & wide_mask).count("1") & 1 else self.orientation
            for coords, phi in wide:
                v *= phi[_point_index(u, coords, dict_signs)]
            vals.append(v)
        return rows, vals

    def outer_col_values(self) -> tuple:
        lay = self.layout
        cols = lay.cols
        local = {j: k for k, j in enumerate(cols)}
        phis = dict(self.col_fns)
        dict_signs = {local[j]: phis[j][0] for j in lay.cols1}
        gammas = dict(self.row_fns)
        wide = [(tuple(local[j] for j in lay.row_dep1[i]), gammas[i]) for i in lay.rows2]
        wide_mask = _mask(local[j] for j in lay.cols2)
        vals = []
        for u in range(1 << len(cols)):
            v = -self.orientation if bin(u & wide_mask).count("1") & 1 else self.orientation
            for coords, gamma in wide:
                v *= gamma[_point_index(u, coords, dict_signs)]
            vals.append(v)
        return cols, vals

    def flipped(self) -> "XorLike":
        return XorLike(self.cells, self.row_fns, self.col_fns, -self.orientation)

    def to_json(self) -> dict:
        return {
            "type": self.kind, "cells": [list(c) for c in self.cells],
            "orientation": self.orientation,
            "row_fns": [[i, _signs_text(v)] for i, v in self.row_fns],
            "col_fns": [[j, _signs_text(v)] for j, v in self.col_fns],
        }


@dataclass(frozen=True)
class AndOrLike:
    """AND/OR-of-literals block.

    For a row i with two or more cells, g_i = D_i exactly where gamma01_i(y|dep1) = 1
    and y_j = kappa_ij on dep2, and -D_i elsewhere. Dictator rows are
    g_i = s_i * y_c. Columns are symmetric with B_j, phi01_j and t_j.
    """
    cells: tuple
    row_consts: tuple  # ((i, D_i), ...) for rows2
    col_consts: tuple  # ((j, B_j), ...) for cols2
    kappa: tuple  # ((i, j, k_ij), ...) for the cells in rows2 x cols2
    row_fns: tuple  # ((i, 0/1 values), ...) for rows2
    col_fns: tuple
    row_signs: tuple  # ((i, s_i), ...) for rows1
    col_signs: tuple
    orientation: int = 1

    kind = "andor"

    @cached_property
    def layout(self) -> _Layout:
        return _Layout(self.cells)

    def validate(self, n: int, m: int):
        _check_cells(self.cells, n, m)
        if len(self.cells) < 2:
            raise ValidationError("a one-cell block must be a Singleton")
        _check_sign(self.orientation, "orientation")
        lay = self.layout
        for name, entries, keys in [
            ("row_consts", self.row_consts, lay.rows2),
            ("col_consts", self.col_consts, lay.cols2),
            ("row_fns", self.row_fns, lay.rows2),
            ("col_fns", self.col_fns, lay.cols2),
            ("row_signs", self.row_signs, lay.rows1),
            ("col_signs", self.col_signs, lay.cols1),
        ]:
            got = [e[0] for e in entries]
            if sorted(got) != list(keys) or len(set(got)) != len(got):
                raise ValidationError(f"{name} must have one entry per index in {list(keys)}")
        r2, c2 = set(lay.rows2), set(lay.cols2)
        z2 = sorted(c for c in self.cells if c[0] in r2 and c[1] in c2)
        if sorted((i, j) for i, j, _ in self.kappa) != z2:
            raise ValidationError(f"kappa must cover exactly the cells {z2}")
        for i, j, k in self.kappa:
            _check_sign(k, f"kappa_{i}{j}")
        for what, entries in [("D", self.row_consts), ("B", self.col_consts),
                              ("s", self.row_signs), ("t", self.col_signs)]:
            for idx, s in entries:
                _check_sign(s, f"{what}_{idx}")
        for i, vals in self.row_fns:
            _check_embedded(vals, len(lay.row_dep1[i]), f"gamma01_{i}", (0, 1))
            if not any(vals):
                raise ValidationError(f"gamma01_{i} is identically zero")
        for j, vals in self.col_fns:
            _check_embedded(vals, len(lay.col_dep1[j]), f"phi01_{j}", (0, 1))
            if not any(vals):
                raise ValidationError(f"phi01_{j} is identically zero")

    @cached_property
    def _kappa(self) -> dict:
        return {(i, j): k for i, j, k in self.kappa}

    def row_functions(self, m: int) -> dict:
        lay = self.layout
        out = {}
        consts = dict(self.row_consts)
        for i, vals in self.row_fns:
            dep2 = lay.row_dep2[i]
            kap = tuple(self._kappa[(i, j)] for j in dep2)
            ind = embed_bits(m, lay.row_dep1[i], vals) & cube_table(m, dep2, kap)
            out[i] = BooleanFunction(m, ind if consts[i] == -1 else ind ^ full_mask(m))
        for i, s in self.row_signs:
            out[i] = _dictator(m, lay.row_dep2[i][0], s)
        return out

    def col_functions(self, n: int) -> dict:
        lay = self.layout
        out = {}
        consts = dict(self.col_consts)
        for j, vals in self.col_fns:
            dep2 = lay.col_dep2[j]
            kap = tuple(self._kappa[(i, j)] for i in dep2)
            ind = embed_bits(n, lay.col_dep1[j], vals) & cube_table(n, dep2, kap)
            out[j] = BooleanFunction(n, ind if consts[j] == -1 else ind ^ full_mask(n))
        for j, t in self.col_signs:
            out[j] = _dictator(n, lay.col_dep2[j][0], t)
        return out

    def outer_row_values(self) -> tuple:
        lay = self.layout
        rows = lay.rows
        local = {i: k for k, i in enumerate(rows)}
        signs = {local[i]: s for i, s in self.row_signs}
        fns = dict(self.col_fns)
        wide = [(tuple(local[i] for i in lay.col_dep1[j]), fns[j]) for j in lay.cols2]
        # point where x_i = D_i on every wide row
        target = _mask(local[i] for i, d in self.row_consts if d == -1)
        wide_mask = _mask(local[i] for i in lay.rows2)
        vals = []
        for u in range(1 << len(rows)):
            hit = (u & wide_mask) == target and all(
                phi[_point_index(u, coords, signs)] for coords, phi in wide
            )
            vals.append(self.orientation if hit else -self.orientation)
        return rows, vals

    def outer_col_values(self) -> tuple:
        lay = self.layout
        cols = lay.cols
        local = {j: k for k, j in enumerate(cols)}
        signs = {local[j]: t for j, t in self.col_signs}
        fns = dict(self.row_fns)
        wide = [(tuple(local[j] for j in lay.row_dep1[i]), fns[i]) for i in lay.rows2]
        target = _mask(local[j] for j, b in self.col_consts if b == -1)
        wide_mask = _mask(local[j] for j in lay.cols2)
        vals = []
        for u in range(1 << len(cols)):
            hit = (u & wide_mask) == target and all(
                gam[_point_index(u, coords, signs)] for coords, gam in wide
            )
            vals.append(self.orientation if hit else -self.orientation)
        return cols, vals

    def flipped(self) -> "AndOrLike":
        return AndOrLike(
            self.cells, self.row_consts, self.col_consts, self.kappa, self.row_fns,
            self.col_fns, self.row_signs, self.col_signs, -self.orientation,
        )

    def as_xor(self) -> Optional[XorLike]:
        """The equivalent XorLike block when the block is a single row or column."""
        lay = self.layout
        if len(lay.rows) == 1:
            (i, d), = self.row_consts
            (_, vals), = self.row_fns
            row_fns = ((i, tuple(d if v else -d for v in vals)),)
            col_fns = tuple((j, (t,)) for j, t in self.col_signs)
            return XorLike(self.cells, row_fns, col_fns, self.orientation * d)
        if len(lay.cols) == 1:
            (j, b), = self.col_consts
            (_, vals), = self.col_fns
            col_fns = ((j, tuple(b if v else -b for v in vals)),)
            row_fns = tuple((i, (s,)) for i, s in self.row_signs)
            return XorLike(self.cells, row_fns, col_fns, self.orientation * b)
        return None

    def to_json(self) -> dict:
        return {
            "type": self.kind, "cells": [list(c) for c in self.cells],
            "orientation": self.orientation,
            "row_consts": [list(e) for e in self.row_consts],
            "col_consts": [list(e) for e in self.col_consts],
            "kappa": [list(e) for e in self.kappa],
            "row_fns": [[i, _bits_text(v)] for i, v in self.row_fns],
            "col_fns": [[j, _bits_text(v)] for j, v in self.col_fns],
            "row_signs": [list(e) for e in self.row_signs],
            "col_signs": [list(e) for e in self.col_signs],
        }


BlockClass = Union[Singleton, XorLike, AndOrLike]


def _mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def _arity_of(count: int) -> int:
    return count.bit_length() - 1


def _signs_text(values) -> str:
    return BooleanFunction.from_values(_arity_of(len(values)), values).to_text()


def _bits_text(values) -> str:
    return BooleanFunction.from_values(
        _arity_of(len(values)), [-1 if v else 1 for v in values]
    ).to_text()


def _signs_from_text(text: str) -> tuple:
    return tuple(BooleanFunction.from_text(text).values())


def _bits_from_text(text: str) -> tuple:
    return tuple(1 if v == -1 else 0 for v in BooleanFunction.from_text(text).values())


def block_from_json(d: dict) -> BlockClass:
    kind = d.get("type")
    cells = tuple(sorted(tuple(c) for c in d["cells"]))
    if kind == "singleton":
        (i, j), = cells
        return Singleton(i, j, d["sgn_f"], d["sgn_g"], d.get("f0_sign", 1), d.get("g0_sign", 1))
    if kind == "xor":
        return XorLike(
            cells,
            tuple((i, _signs_from_text(t)) for i, t in d["row_fns"]),
            tuple((j, _signs_from_text(t)) for j, t in d["col_fns"]),
            d.get("orientation", 1),
        )
    if kind == "andor":
        return AndOrLike(
            cells,
            tuple(tuple(e) for e in d["row_consts"]),
            tuple(tuple(e) for e in d["col_consts"]),
            tuple(tuple(e) for e in d["kappa"]),
            tuple((i, _bits_from_text(t)) for i, t in d["row_fns"]),
            tuple((j, _bits_from_text(t)) for j, t in d["col_fns"]),
            tuple(tuple(e) for e in d["row_signs"]),
            tuple(tuple(e) for e in d["col_signs"]),
            d.get("orientation", 1),
        )
    raise ValidationError(f"unknown block type {kind!r}")


# canonical form


@dataclass(frozen=True)
class CanonicalForm:
    """Blocks, outer function h and the ledger of degenerate inner functions.

    const_f / const_g: ((index, sign), ...) for constant f_j / g_i.
    free_f / free_g: ((index, function), ...) for non-constant inner functions the
    outer function ignores on the constant slice.
    f0_off_slice / g0_off_slice: the outer tables restricted to points off the
    slice where every constant input takes its value (bits on the slice are 0).
    """
    n: int
    m: int
    blocks: tuple
    h: BooleanFunction
    const_f: tuple = ()
    const_g: tuple = ()
    free_f: tuple = ()
    free_g: tuple = ()
    f0_off_slice: int = 0
    g0_off_slice: int = 0

    @property
    def live_rows(self) -> tuple:
        """Rows whose g_i is non-constant."""
        const = {i for i, _ in self.const_g}
        return tuple(i for i in range(self.n) if i not in const)

    @property
    def live_cols(self) -> tuple:
        const = {j for j, _ in self.const_f}
        return tuple(j for j in range(self.m) if j not in const)

    @property
    def block_rows(self) -> tuple:
        return tuple(sorted(i for b in self.blocks for i in {c[0] for c in b.cells}))

    @property
    def block_cols(self) -> tuple:
        return tuple(sorted(j for b in self.blocks for j in {c[1] for c in b.cells}))

    def validate(self):
        n, m = self.n, self.m
        if n < 0 or m < 0:
            raise ValidationError("negative grid size")
        for b in self.blocks:
            b.validate(n, m)
        rows = [i for b in self.blocks for i in {c[0] for c in b.cells}]
        cols = [j for b in self.blocks for j in {c[1] for c in b.cells}]
        if len(rows) != len(set(rows)) or len(cols) != len(set(cols)):
            raise ValidationError("blocks must be pairwise row- and column-disjoint")
        if self.h.arity != len(self.blocks):
            raise ValidationError(f"h has arity {self.h.arity} for {len(self.blocks)} blocks")
        if self.h.dep_mask() != full_mask_bits(len(self.blocks)):
            raise ValidationError("h must depend on every block")
        _check_cover("row", n, rows, self.const_g, self.free_g, m)
        _check_cover("column", m, cols, self.const_f, self.free_f, n)
        if self.f0_off_slice & slice_mask(n, self.const_g):
            raise ValidationError("f0_off_slice has bits on the constant slice")
        if self.g0_off_slice & slice_mask(m, self.const_f):
            raise ValidationError("g0_off_slice has bits on the constant slice")
        if not 0 <= self.f0_off_slice <= full_mask(n) or not 0 <= self.g0_off_slice <= full_mask(m):
            raise ValidationError("off-slice table does not fit the arity")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "blocks": [b.to_json() for b in self.blocks],
            "h": self.h.to_text(),
            "degenerate": {
                "const_f": [list(e) for e in self.const_f],
                "const_g": [list(e) for e in self.const_g],
                "I": list(self.live_rows),
                "J": list(self.live_cols),
                "I_reduced": list(self.block_rows),
                "J_reduced": list(self.block_cols),
                "free_f": [[j, f.to_text()] for j, f in self.free_f],
                "free_g": [[i, g.to_text()] for i, g in self.free_g],
                "f0_off_slice": hex(self.f0_off_slice),
                "g0_off_slice": hex(self.g0_off_slice),
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> "CanonicalForm":
        try:
            deg = d.get("degenerate", {})
            form = cls(
                int(d["n"]), int(d["m"]),
                tuple(block_from_json(b) for b in d["blocks"]),
                BooleanFunction.from_text(d["h"]),
                tuple(tuple(e) for e in deg.get("const_f", [])),
                tuple(tuple(e) for e in deg.get("const_g", [])),
                tuple((j, BooleanFunction.from_text(t)) for j, t in deg.get("free_f", [])),
                tuple((i, BooleanFunction.from_text(t)) for i, t in deg.get("free_g", [])),
                int(deg.get("f0_off_slice", "0x0"), 16),
                int(deg.get("g0_off_slice", "0x0"), 16),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed canonical form: {exc}") from None
        for key, value in [("I", form.live_rows), ("J", form.live_cols),
                           ("I_reduced", form.block_rows), ("J_reduced", form.block_cols)]:
            if key in deg and tuple(deg[key]) != value:
                raise ValidationError(f"degenerate.{key} disagrees with the rest of the form")
        return form

    @classmethod
    def loads(cls, text: str) -> "CanonicalForm":
        return cls.from_json(json.loads(text))


def full_mask_bits(k: int) -> int:
    return (1 << k) - 1


def slice_mask(n: int, consts: tuple) -> int:
    """Table mask of the points where every listed coordinate takes its constant."""
    if not consts:
        return full_mask(n)
    coords, signs = zip(*sorted(consts))
    return cube_table(n, tuple(coords), tuple(signs))


def _check_cover(what, size, used, consts, free, arity):
    const_idx = [i for i, _ in consts]
    free_idx = [i for i, _ in free]
    everything = list(used) + const_idx + free_idx
    if sorted(everything) != list(range(size)):
        raise ValidationError(
            f"every {what} must be in exactly one block, constant or free entry"
        )
    for i, s in consts:
        _check_sign(s, f"constant {what} {i}")
    for i, f in free:
        if f.arity != arity:
            raise ValidationError(f"free {what} function {i} has arity {f.arity}, expected {arity}")
        if f.is_constant():
            raise ValidationError(f"free {what} function {i} is constant")


# reconstruction


def _outer_table(n: int, blocks_vals: list, h: BooleanFunction, consts: tuple, off: int) -> int:
    """Outer function: h of the block outputs on the slice, the ledger elsewhere."""
    on_slice = slice_mask(n, consts)
    idx = [(subpoint_index(n, coords), vals) for coords, vals in blocks_vals]
    ht = h.table
    table = off
    for u in iter_bits(on_slice):
        w = 0
        for ell, (sub, vals) in enumerate(idx):
            if vals[sub[u]] == -1:
                w |= 1 << ell
        if (ht >> w) & 1:
            table |= 1 << u
    return table


def reconstruct(c: CanonicalForm, validate: bool = True) -> PolymorphismInstance:
    if validate:
        c.validate()
    n, m = c.n, c.m
    gs = [None] * n
    fs = [None] * m
    for b in c.blocks:
        gs_b = b.row_functions(m)
        fs_b = b.col_functions(n)
        for i, g in gs_b.items():
            gs[i] = g
        for j, f in fs_b.items():
            fs[j] = f
    for i, s in c.const_g:
        gs[i] = BooleanFunction(m, 0 if s == 1 else full_mask(m))
    for j, s in c.const_f:
        fs[j] = BooleanFunction(n, 0 if s == 1 else full_mask(n))
    for i, g in c.free_g:
        gs[i] = g
    for j, f in c.free_f:
        fs[j] = f
    f0 = _outer_table(n, [b.outer_row_values() for b in c.blocks], c.h, c.const_g, c.f0_off_slice)
    g0 = _outer_table(m, [b.outer_col_values() for b in c.blocks], c.h, c.const_f, c.g0_off_slice)
    return PolymorphismInstance(n, m, BooleanFunction(n, f0), tuple(fs), BooleanFunction(m, g0), tuple(gs))


# canonicalization


def _negate_input(h: BooleanFunction, ell: int) -> BooleanFunction:
    t, bit = h.table, 1 << ell
    out = 0
    for w in range(1 << h.arity):
        if (t >> (w ^ bit)) & 1:
            out |= 1 << w
    return BooleanFunction(h.arity, out)


def _permute_inputs(h: BooleanFunction, order: list) -> BooleanFunction:
    """New h whose input k is old input order[k]."""
    out = 0
    for w in range(1 << h.arity):
        old = 0
        for k, src in enumerate(order):
            if (w >> k) & 1:
                old |= 1 << src
        if (h.table >> old) & 1:
            out |= 1 << w
    return BooleanFunction(h.arity, out)


def canonicalize(c: CanonicalForm) -> CanonicalForm:
    """Single-line AND/OR blocks become XorLike, orientations become +1, blocks sort by minimal cell."""
    h = c.h
    blocks = []
    for ell, b in enumerate(c.blocks):
        if isinstance(b, AndOrLike):
            b = b.as_xor() or b
        if b.orientation == -1:
            b = b.flipped()
            h = _negate_input(h, ell)
        blocks.append(b)
    order = sorted(range(len(blocks)), key=lambda ell: min(blocks[ell].cells))
    blocks = [blocks[ell] for ell in order]
    h = _permute_inputs(h, order)
    return CanonicalForm(
        c.n, c.m, tuple(blocks), h,
        tuple(sorted(c.const_f)), tuple(sorted(c.const_g)),
        tuple(sorted(c.free_f, key=lambda e: e[0])), tuple(sorted(c.free_g, key=lambda e: e[0])),
        c.f0_off_slice, c.g0_off_slice,
    )


# classification


def _classify_block(P: PolymorphismInstance, block) -> BlockClass:
    cells = block.cells
    if len(cells) == 1:
        (i, j), = cells
        gd = P.gs[i].dictator_form()
        fd = P.fs[j].dictator_form()
        if gd is None or fd is None or gd[0] != j or fd[0] != i:
            raise ClassificationFailure("one-cell block whose functions are not dictators", block)
        return Singleton(i, j, fd[1], gd[1], 1, fd[1] * gd[1])
    lay = _Layout(cells)
    if lay.rows1 != block.rows1 or lay.cols1 != block.cols1:
        raise ClassificationFailure("dictator rows do not match single-cell rows", block)
    xor = _try_xor(P, lay)
    if xor is not None:
        return xor
    andor = _try_andor(P, lay)
    if andor is not None:
        return andor
    raise ClassificationFailure("block matches neither the XOR nor the AND/OR case", block)


def _try_xor(P, lay: _Layout) -> Optional[XorLike]:
    row_fns = []
    for i in lay.rows:
        form = match_generalized_monomial(P.gs[i], lay.row_dep2[i], lay.row_dep1[i])
        if not isinstance(form, XorForm):
            return None
        row_fns.append((i, form.phi))
    col_fns = []
    for j in lay.cols:
        form = match_generalized_monomial(P.fs[j], lay.col_dep2[j], lay.col_dep1[j])
        if not isinstance(form, XorForm):
            return None
        col_fns.append((j, form.phi))
    return XorLike(lay.cells, tuple(row_fns), tuple(col_fns), 1)


def _try_andor(P, lay: _Layout) -> Optional[AndOrLike]:
    row_consts, row_fns, kappa = [], [], {}
    for i in lay.rows2:
        form = match_generalized_monomial(P.gs[i], lay.row_dep2[i], lay.row_dep1[i])
        if not isinstance(form, AndOrForm):
            return None
        row_consts.append((i, form.B))
        row_fns.append((i, form.phi01))
        for j, k in zip(lay.row_dep2[i], form.kappa):
            kappa[(i, j)] = k
    col_consts, col_fns = [], []
    for j in lay.cols2:
        form = match_generalized_monomial(P.fs[j], lay.col_dep2[j], lay.col_dep1[j])
        if not isinstance(form, AndOrForm):
            return None
        col_consts.append((j, form.B))
        col_fns.append((j, form.phi01))
        for i, k in zip(lay.col_dep2[j], form.kappa):
            if kappa.get((i, j)) != k:
                return None
    row_signs = tuple((i, P.gs[i].dictator_form()[1]) for i in lay.rows1)
    col_signs = tuple((j, P.fs[j].dictator_form()[1]) for j in lay.cols1)
    return AndOrLike(
        lay.cells, tuple(row_consts), tuple(col_consts),
        tuple((i, j, k) for (i, j), k in sorted(kappa.items())),
        tuple(row_fns), tuple(col_fns), row_signs, col_signs, 1,
    )


def _extract_h(P: PolymorphismInstance, blocks: list, const_g: dict) -> BooleanFunction:
    base = 0
    for i, s in const_g.items():
        if s == -1:
            base |= 1 << i
    reps = []
    for b in blocks:
        rows, vals = b.outer_row_values()
        choice = {}
        for v, val in enumerate(vals):
            choice.setdefault(val, v)
        if len(choice) != 2:
            raise ClassificationFailure("block output is constant", b)
        spread = {val: sum(1 << rows[k] for k in iter_bits(v)) for val, v in choice.items()}
        reps.append(spread)
    k = len(blocks)
    table = 0
    for w in range(1 << k):
        u = base
        for ell in range(k):
            u |= reps[ell][-1 if (w >> ell) & 1 else 1]
        if (P.f0.table >> u) & 1:
            table |= 1 << w
    return BooleanFunction(k, table)


def classify(P: PolymorphismInstance, verify_input: bool = True) -> CanonicalForm:
    if verify_input and not check_pointwise(P):
        raise PreconditionError("instance is not a generalized polymorphism")
    red = reduce_degenerate(P)
    part = partition_blocks(P, red)
    blocks = [_classify_block(P, b) for b in part.blocks]
    h = _extract_h(P, blocks, red.const_g)
    free_g = tuple((i, P.gs[i]) for i in red.live_rows if i not in red.rows)
    free_f = tuple((j, P.fs[j]) for j in red.live_cols if j not in red.cols)
    const_g = tuple(sorted(red.const_g.items()))
    const_f = tuple(sorted(red.const_f.items()))
    form = CanonicalForm(
        P.n, P.m, tuple(blocks), h, const_f, const_g, free_f, free_g,
        P.f0.table & ~slice_mask(P.n, const_g) & full_mask(P.n),
        P.g0.table & ~slice_mask(P.m, const_f) & full_mask(P.m),
    )
    form = canonicalize(form)
    if reconstruct(form) != P:
        raise ConsistencyError("reconstructed instance differs from the input")
    return form


def forms_equivalent(a: CanonicalForm, b: CanonicalForm) -> bool:
    """Equality of canonical forms is equality of the instances they rebuild."""
    return reconstruct(a) == reconstruct(b)
