"""Build generalized polymorphisms from parameters, and sample parameters at random.

`generate` turns a canonical form into an instance and checks it.
`generate_deg2_multilinear` builds the real-valued family with shifted
monomials inside each block and an arbitrary multilinear outer function.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .boolean_fn import BooleanFunction, full_mask
from .classifier import AndOrLike, CanonicalForm, Singleton, XorLike, _Layout, canonicalize
from .classifier import reconstruct, slice_mask
from .errors import ConsistencyError, DomainError, ValidationError
from .fourier import MultilinearPoly, compose, grid_transpose_map, relabel, substitute
from .polymorphism import POINTWISE_BIT_LIMIT, PolymorphismInstance, check_fourier
from .polymorphism import check_pointwise, connected_blocks

PROFILES = ("xor-only", "andor-only", "mixed", "with-dictators", "with-degenerates")
_NO_DICTATOR_PROFILES = ("xor-only", "andor-only", "mixed")


@dataclass(frozen=True)
class GenParams:
    form: CanonicalForm
    seed: Optional[int] = None
    profile: Optional[str] = None

    def to_json(self) -> dict:
        d = self.form.to_json()
        d["seed"] = self.seed
        d["profile"] = self.profile
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> "GenParams":
        return cls(CanonicalForm.from_json(d), d.get("seed"), d.get("profile"))


def generate(params: GenParams, check_both: bool = False) -> PolymorphismInstance:
    form = params.form
    try:
        form.validate()
    except ValidationError as exc:
        raise ValidationError(f"invalid generator parameters: {exc}") from None
    P = reconstruct(form, validate=False)
    if P.n * P.m <= POINTWISE_BIT_LIMIT and not check_pointwise(P):
        raise ConsistencyError("generated instance fails the pointwise check")
    if check_both and not check_fourier(P):
        raise ConsistencyError("generated instance fails the Fourier check")
    return P


def generated_kappas(form: CanonicalForm) -> dict:
    """Shift k_ij the parameters assign to each cell whose row and column both have degree >= 2.

    XOR-type blocks use k = 0; AND/OR-type blocks carry their own sign per cell.
    """
    out = {}
    for b in form.blocks:
        if isinstance(b, XorLike):
            lay = b.layout
            r2, c2 = set(lay.rows2), set(lay.cols2)
            out.update({c: Fraction(0) for c in b.cells if c[0] in r2 and c[1] in c2})
        elif isinstance(b, AndOrLike):
            out.update({(i, j): Fraction(k) for i, j, k in b.kappa})
    return out


# random sampling


def _random_values_reading_all(rng: random.Random, arity: int, values: tuple, nonzero=False) -> tuple:
    """Random value tuple over 2^arity points that depends on every input."""
    while True:
        vals = tuple(rng.choice(values) for _ in range(1 << arity))
        if nonzero and not any(vals):
            continue
        if all(
            any(vals[v] != vals[v | (1 << k)] for v in range(1 << arity) if not (v >> k) & 1)
            for k in range(arity)
        ):
            return vals


def random_function(rng: random.Random, arity: int, depend_on_all: bool = True) -> BooleanFunction:
    if not depend_on_all:
        return BooleanFunction(arity, rng.getrandbits(1 << arity))
    vals = _random_values_reading_all(rng, arity, (1, -1))
    return BooleanFunction.from_values(arity, vals)


def _random_nonconstant(rng: random.Random, arity: int) -> BooleanFunction:
    while True:
        f = BooleanFunction(arity, rng.getrandbits(1 << arity))
        if not f.is_constant():
            return f


def _split(rng: random.Random, items: list, parts: int, min_size: int) -> list:
    """Random partition of items into `parts` groups of at least min_size."""
    items = list(items)
    rng.shuffle(items)
    groups = [items[k * min_size:(k + 1) * min_size] for k in range(parts)]
    for x in items[parts * min_size:]:
        rng.choice(groups).append(x)
    return [sorted(g) for g in groups]


def sample_cells(rng: random.Random, rows: list, cols: list, no_dictators: bool) -> tuple:
    """Connected cell set covering every row and column, by rejection."""
    if len(rows) == 1 and len(cols) == 1:
        return ((rows[0], cols[0]),)
    grid = [(i, j) for i in rows for j in cols]
    while True:
        cells = [c for c in grid if rng.random() < 0.65]
        if {i for i, _ in cells} != set(rows) or {j for _, j in cells} != set(cols):
            continue
        if len(connected_blocks(cells)) != 1:
            continue
        if no_dictators:
            if any(sum(1 for c in cells if c[0] == i) < 2 for i in rows):
                continue
            if any(sum(1 for c in cells if c[1] == j) < 2 for j in cols):
                continue
        return tuple(sorted(cells))


def _xor_block(rng: random.Random, cells: tuple) -> XorLike:
    lay = _Layout(cells)
    row_fns = tuple((i, _random_values_reading_all(rng, len(lay.row_dep1[i]), (1, -1))) for i in lay.rows)
    col_fns = tuple((j, _random_values_reading_all(rng, len(lay.col_dep1[j]), (1, -1))) for j in lay.cols)
    return XorLike(cells, row_fns, col_fns, 1)


def _andor_block(rng: random.Random, cells: tuple):
    lay = _Layout(cells)
    if len(lay.rows) == 1 or len(lay.cols) == 1:
        # single-line blocks are stored as XorLike
        return _xor_block(rng, cells)
    r2, c2 = set(lay.rows2), set(lay.cols2)
    return AndOrLike(
        cells,
        tuple((i, rng.choice((1, -1))) for i in lay.rows2),
        tuple((j, rng.choice((1, -1))) for j in lay.cols2),
        tuple((i, j, rng.choice((1, -1))) for i, j in cells if i in r2 and j in c2),
        tuple((i, _random_values_reading_all(rng, len(lay.row_dep1[i]), (0, 1), True)) for i in lay.rows2),
        tuple((j, _random_values_reading_all(rng, len(lay.col_dep1[j]), (0, 1), True)) for j in lay.cols2),
        tuple((i, rng.choice((1, -1))) for i in lay.rows1),
        tuple((j, rng.choice((1, -1))) for j in lay.cols1),
        1,
    )


def _singleton(rng: random.Random, cell: tuple) -> Singleton:
    sf, sg = rng.choice((1, -1)), rng.choice((1, -1))
    return Singleton(cell[0], cell[1], sf, sg, 1, sf * sg)


def _random_layout(rng, rows: list, cols: list, no_dictators: bool) -> list:
    if not rows or not cols:
        return []
    min_size = 2 if no_dictators else 1
    kmax = min(len(rows) // min_size, len(cols) // min_size)
    if kmax == 0:
        raise DomainError("grid too small for a block without dictators")
    k = rng.randint(1, kmax)
    row_groups = _split(rng, rows, k, min_size)
    col_groups = _split(rng, cols, k, min_size)
    return [sample_cells(rng, r, c, no_dictators) for r, c in zip(row_groups, col_groups)]


def sample_params(seed: int, n: int, m: int, profile: str) -> GenParams:
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}; choose from {', '.join(PROFILES)}")
    if n < 0 or m < 0:
        raise DomainError("grid sizes must be non-negative")
    rng = random.Random(f"{seed}:{n}:{m}:{profile}")
    rows, cols = list(range(n)), list(range(m))
    const_f, const_g, free_f, free_g = [], [], [], []
    if profile == "with-degenerates":
        if m == 0:
            raise DomainError("with-degenerates needs m >= 1 for a constant f_j")
        rng.shuffle(cols)
        rng.shuffle(rows)
        n_dc = rng.randint(1, m)
        n_dr = rng.randint(0, n)
        dcols, cols = sorted(cols[:n_dc]), sorted(cols[n_dc:])
        drows, rows = sorted(rows[:n_dr]), sorted(rows[n_dr:])
        if not rows or not cols:
            dcols, drows = sorted(dcols + cols), sorted(drows + rows)
            rows, cols = [], []
        for k, j in enumerate(dcols):
            if k == 0 or rng.random() < 0.5:
                const_f.append((j, rng.choice((1, -1))))
            else:
                free_f.append((j, _random_nonconstant(rng, n)))
        for i in drows:
            if rng.random() < 0.5:
                const_g.append((i, rng.choice((1, -1))))
            else:
                free_g.append((i, _random_nonconstant(rng, m)))
    no_dict = profile in _NO_DICTATOR_PROFILES
    layout = _random_layout(rng, rows, cols, no_dict)
    blocks = []
    for cells in layout:
        if len(cells) == 1:
            blocks.append(_singleton(rng, cells[0]))
        elif profile == "xor-only":
            blocks.append(_xor_block(rng, cells))
        elif profile == "andor-only":
            blocks.append(_andor_block(rng, cells))
        else:
            maker = rng.choice((_xor_block, _andor_block))
            blocks.append(maker(rng, cells))
    k = len(blocks)
    h = random_function(rng, k)
    const_g, const_f = tuple(sorted(const_g)), tuple(sorted(const_f))
    f0_off = rng.getrandbits(1 << n) & ~slice_mask(n, const_g) & full_mask(n)
    g0_off = rng.getrandbits(1 << m) & ~slice_mask(m, const_f) & full_mask(m)
    form = CanonicalForm(
        n, m, tuple(blocks), h, const_f, const_g, tuple(free_f), tuple(free_g), f0_off, g0_off
    )
    return GenParams(canonicalize(form), seed, profile)


# real-valued family with shifted monomials


@dataclass(frozen=True)
class Deg2Params:
    """Blocks of cells with rational constants.

    f_j = A_j prod_{i: (i,j) in Z} (x_i + k_ij) - B_j
    g_i = C_i prod_{j: (i,j) in Z} (y_j + k_ij) - D_i
    f0 = h(..., K_l prod_{i in rows(Z_l)} (x_i + D_i) / C_i + L_l, ...)
    g0 = h(..., K_l prod_{j in cols(Z_l)} (y_j + B_j) / A_j + L_l, ...)
    """
    n: int
    m: int
    blocks: tuple  # tuple of cell tuples
    A: tuple
    B: tuple
    C: tuple
    D: tuple
    K: tuple
    L: tuple
    kappa: dict = field(default_factory=dict)  # (i, j) -> shift
    h: Optional[MultilinearPoly] = None  # arity len(blocks); identity product when None


@dataclass(frozen=True)
class Deg2Family:
    f0: MultilinearPoly
    fs: tuple
    g0: MultilinearPoly
    gs: tuple
    left: MultilinearPoly
    right: MultilinearPoly
    expected: MultilinearPoly  # h(K_l prod_{Z_l} (z + k) + L_l) over the grid


def _linear_product(arity: int, factors: list, scale) -> MultilinearPoly:
    """scale * prod (a x_c + b) over (c, a, b) factors on distinct coordinates."""
    poly = MultilinearPoly.constant(arity, scale)
    for c, a, b in factors:
        poly = poly * MultilinearPoly(arity, {1 << c: a, 0: b})
    return poly


def generate_deg2_multilinear(params: Deg2Params) -> Deg2Family:
    n, m = params.n, params.m
    for name, seq, size in [("A", params.A, m), ("B", params.B, m), ("C", params.C, n), ("D", params.D, n)]:
        if len(seq) != size:
            raise ValidationError(f"{name} needs {size} entries")
    if any(Fraction(a) == 0 for a in params.A) or any(Fraction(c) == 0 for c in params.C):
        raise ValidationError("A_j and C_i are denominators and must be nonzero")
    cells = [c for b in params.blocks for c in b]
    if len(set(cells)) != len(cells):
        raise ValidationError("blocks overlap")
    rows_of = [sorted({i for i, _ in b}) for b in params.blocks]
    cols_of = [sorted({j for _, j in b}) for b in params.blocks]
    flat_rows = [i for r in rows_of for i in r]
    flat_cols = [j for c in cols_of for j in c]
    if len(set(flat_rows)) != len(flat_rows) or len(set(flat_cols)) != len(flat_cols):
        raise ValidationError("blocks must be row- and column-disjoint")
    k = len(params.blocks)
    if len(params.K) != k or len(params.L) != k:
        raise ValidationError("need one K and one L per block")
    kappa = {c: Fraction(params.kappa.get(c, 0)) for c in cells}
    h = params.h if params.h is not None else MultilinearPoly(k, {(1 << k) - 1: 1})
    if h.arity != k:
        raise ValidationError("h must have one input per block")

    A = [Fraction(a) for a in params.A]
    B = [Fraction(b) for b in params.B]
    C = [Fraction(c) for c in params.C]
    D = [Fraction(d) for d in params.D]
    fs = tuple(
        _linear_product(n, [(i, 1, kappa[(i, j)]) for i, jj in cells if jj == j], A[j])
        - MultilinearPoly.constant(n, B[j])
        for j in range(m)
    )
    gs = tuple(
        _linear_product(m, [(j, 1, kappa[(i, j)]) for ii, j in cells if ii == i], C[i])
        - MultilinearPoly.constant(m, D[i])
        for i in range(n)
    )
    f_inputs = [
        _linear_product(n, [(i, 1 / C[i], D[i] / C[i]) for i in rows_of[ell]], params.K[ell])
        + MultilinearPoly.constant(n, params.L[ell])
        for ell in range(k)
    ]
    g_inputs = [
        _linear_product(m, [(j, 1 / A[j], B[j] / A[j]) for j in cols_of[ell]], params.K[ell])
        + MultilinearPoly.constant(m, params.L[ell])
        for ell in range(k)
    ]
    f0 = substitute(h, f_inputs) if k else MultilinearPoly(n, {0: h[0]})
    g0 = substitute(h, g_inputs) if k else MultilinearPoly(m, {0: h[0]})
    left = compose(f0, list(gs))
    right = relabel(compose(g0, list(fs)), grid_transpose_map(n, m), n * m)
    z_inputs = [
        _linear_product(n * m, [(i * m + j, 1, kappa[(i, j)]) for i, j in b], params.K[ell])
        + MultilinearPoly.constant(n * m, params.L[ell])
        for ell, b in enumerate(params.blocks)
    ]
    expected = substitute(h, z_inputs) if k else MultilinearPoly(n * m, {0: h[0]})
    if left != right:
        raise ConsistencyError("the two composed sides differ")
    if left != expected:
        raise ConsistencyError("composed sides differ from the block-product form")
    return Deg2Family(f0, fs, g0, gs, left, right, expected)


def _rational(rng: random.Random, nonzero: bool = False) -> Fraction:
    while True:
        q = Fraction(rng.randint(-6, 6), rng.randint(1, 5))
        if q or not nonzero:
            return q


def sample_deg2_params(seed: int, n: int, m: int) -> Deg2Params:
    rng = random.Random(f"deg2:{seed}:{n}:{m}")
    layout = _random_layout(rng, list(range(n)), list(range(m)), False)
    k = len(layout)
    coeffs = {mask: _rational(rng) for mask in range(1 << k) if rng.random() < 0.7}
    return Deg2Params(
        n, m, tuple(layout),
        tuple(_rational(rng, True) for _ in range(m)),
        tuple(_rational(rng) for _ in range(m)),
        tuple(_rational(rng, True) for _ in range(n)),
        tuple(_rational(rng) for _ in range(n)),
        tuple(_rational(rng, True) for _ in range(k)),
        tuple(_rational(rng) for _ in range(k)),
        {c: _rational(rng) for b in layout for c in b},
        MultilinearPoly(k, coeffs),
    )
