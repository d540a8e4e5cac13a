"""Boolean functions on the cube {-1, 1}^n stored as truth tables.

Encoding: a point x is the integer u whose bit i is set iff x_i = -1.
Bit u of the table is set iff f(x) = -1. Logical True is -1.
Coordinates are 0-based throughout the API.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import DomainError

MAX_ARITY = 24


@lru_cache(maxsize=None)
def full_mask(n: int) -> int:
    return (1 << (1 << n)) - 1


@lru_cache(maxsize=None)
def positive_half(n: int, i: int) -> int:
    """Table mask of the points with x_i = +1."""
    block = (1 << (1 << i)) - 1
    period = 1 << (i + 1)
    mask = 0
    for start in range(0, 1 << n, period):
        mask |= block << start
    return mask


@lru_cache(maxsize=None)
def dictator_table(n: int, i: int) -> int:
    return full_mask(n) ^ positive_half(n, i)


def point_signs(u: int, n: int) -> tuple:
    return tuple(-1 if (u >> i) & 1 else 1 for i in range(n))


def signs_to_point(signs: Sequence[int]) -> int:
    u = 0
    for i, s in enumerate(signs):
        if s == -1:
            u |= 1 << i
        elif s != 1:
            raise DomainError(f"coordinate {i} is {s!r}, expected +1 or -1")
    return u


def points(n: int) -> Iterator[tuple]:
    for u in range(1 << n):
        yield point_signs(u, n)


def iter_bits(mask: int) -> Iterator[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def mask_of(coords: Iterable[int]) -> int:
    mask = 0
    for c in coords:
        mask |= 1 << c
    return mask


@dataclass(frozen=True)
class BooleanFunction:
    arity: int
    table: int

    def __post_init__(self):
        if not 0 <= self.arity <= MAX_ARITY:
            raise DomainError(f"arity {self.arity} outside [0, {MAX_ARITY}]")
        if not 0 <= self.table <= full_mask(self.arity):
            raise DomainError(f"table does not fit arity {self.arity}")

    # construction

    @classmethod
    def from_values(cls, n: int, values: Sequence[int]) -> "BooleanFunction":
        """Build from a sequence of +1/-1 outputs indexed by point."""
        if len(values) != 1 << n:
            raise DomainError(f"need {1 << n} values, got {len(values)}")
        table = 0
        for u, v in enumerate(values):
            if v == -1:
                table |= 1 << u
            elif v != 1:
                raise DomainError(f"value {v!r} at point {u} is not a sign")
        return cls(n, table)

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[tuple], int]) -> "BooleanFunction":
        return cls.from_values(n, [fn(x) for x in points(n)])

    # evaluation

    def eval(self, point: int) -> int:
        if not 0 <= point < (1 << self.arity):
            raise DomainError(f"point {point} outside [0, 2^{self.arity})")
        return -1 if (self.table >> point) & 1 else 1

    __call__ = eval

    def eval_signs(self, signs: Sequence[int]) -> int:
        if len(signs) != self.arity:
            raise DomainError("point length does not match arity")
        return self.eval(signs_to_point(signs))

    def values(self) -> list:
        t = self.table
        return [-1 if (t >> u) & 1 else 1 for u in range(1 << self.arity)]

    # structure

    def dep_mask(self) -> int:
        n, t = self.arity, self.table
        mask = 0
        for i in range(n):
            half = positive_half(n, i)
            if (t & half) != ((t >> (1 << i)) & half):
                mask |= 1 << i
        return mask

    def dep(self) -> frozenset:
        return frozenset(iter_bits(self.dep_mask()))

    def depends_on(self, i: int) -> bool:
        half = positive_half(self.arity, i)
        return (self.table & half) != ((self.table >> (1 << i)) & half)

    def is_constant(self) -> bool:
        return self.table == 0 or self.table == full_mask(self.arity)

    def constant_value(self) -> Optional[int]:
        if self.table == 0:
            return 1
        if self.table == full_mask(self.arity):
            return -1
        return None

    def degree(self) -> int:
        from .fourier import walsh_hadamard

        coeffs = walsh_hadamard(self)
        return max((bin(s).count("1") for s, c in enumerate(coeffs) if c), default=0)

    def dictator_form(self) -> Optional[tuple]:
        """(i, sign) if f equals sign * x_i, else None."""
        n, t = self.arity, self.table
        for i in range(n):
            d = dictator_table(n, i)
            if t == d:
                return (i, 1)
            if t == d ^ full_mask(n):
                return (i, -1)
        return None

    def restrict(self, coord: int, value: int) -> "BooleanFunction":
        """Fix x_coord = value; remaining coordinates keep their order."""
        n = self.arity
        if not 0 <= coord < n:
            raise DomainError(f"coordinate {coord} outside [0, {n})")
        if value not in (1, -1):
            raise DomainError(f"value {value!r} is not a sign")
        fixed = (1 << coord) if value == -1 else 0
        low = (1 << coord) - 1
        t = self.table
        out = 0
        for v in range(1 << (n - 1)):
            u = (v & low) | ((v >> coord) << (coord + 1)) | fixed
            if (t >> u) & 1:
                out |= 1 << v
        return BooleanFunction(n - 1, out)

    def restrict_many(self, assignment: dict) -> "BooleanFunction":
        """Fix several coordinates at once; survivors keep their relative order."""
        f = self
        for coord in sorted(assignment, reverse=True):
            f = f.restrict(coord, assignment[coord])
        return f

    def negate(self) -> "BooleanFunction":
        return BooleanFunction(self.arity, self.table ^ full_mask(self.arity))

    # text form

    def to_text(self) -> str:
        return f"n={self.arity} tt={format_table(self.table, self.arity)}"

    @classmethod
    def from_text(cls, text: str) -> "BooleanFunction":
        match = _TEXT_RE.fullmatch(text.strip())
        if not match:
            raise DomainError(f"cannot parse function line {text!r}")
        n = int(match.group(1))
        if n > MAX_ARITY:
            raise DomainError(f"arity {n} exceeds {MAX_ARITY}")
        return cls(n, int(match.group(2), 16))

    def __str__(self):
        return self.to_text()


_TEXT_RE = re.compile(r"n=(\d+)\s+tt=0x([0-9a-fA-F]+)")


def format_table(table: int, n: int) -> str:
    width = max(1, (1 << n) // 4)
    return f"0x{table:0{width}x}"


# named families


def make_const(n: int, sign: int) -> BooleanFunction:
    if sign not in (1, -1):
        raise DomainError(f"sign {sign!r}")
    return BooleanFunction(n, 0 if sign == 1 else full_mask(n))


def make_dictator(n: int, i: int, sign: int = 1) -> BooleanFunction:
    if not 0 <= i < n:
        raise DomainError(f"coordinate {i} outside [0, {n})")
    t = dictator_table(n, i)
    return BooleanFunction(n, t if sign == 1 else t ^ full_mask(n))


def make_xor(n: int, sign: int = 1) -> BooleanFunction:
    """sign * x_0 * ... * x_{n-1}."""
    table = 0
    for u in range(1 << n):
        if (bin(u).count("1") & 1) == (sign == 1):
            table |= 1 << u
    return BooleanFunction(n, table)


def make_and(n: int, input_signs: Optional[Sequence[int]] = None, output_sign: int = -1) -> BooleanFunction:
    """2B * prod((k_i x_i + 1) / 2) - B with B = output_sign, k = input_signs.

    The defaults give logical AND under True = -1: the output is -1 exactly
    when every input is -1.
    """
    kappa = tuple(input_signs) if input_signs is not None else (-1,) * n
    if len(kappa) != n:
        raise DomainError("input_signs length does not match n")
    target = signs_to_point(kappa)
    table = 0 if output_sign == -1 else full_mask(n)
    # the product of indicators is 1 only at x = kappa
    return BooleanFunction(n, table ^ (1 << target))


def make_or(n: int, input_signs: Optional[Sequence[int]] = None, output_sign: int = 1) -> BooleanFunction:
    """Same parameterization as make_and; defaults give logical OR under True = -1.

    Logical OR is +1 only when every input is +1, i.e. kappa = (+1, ...) and B = +1.
    """
    kappa = tuple(input_signs) if input_signs is not None else (1,) * n
    return make_and(n, kappa, output_sign)


def embed(n: int, coords: Sequence[int], values: Sequence[int]) -> BooleanFunction:
    """Function of arity n reading only `coords`, with `values` indexed by the sub-point.

    Sub-point bit k corresponds to coordinate coords[k].
    """
    k = len(coords)
    if len(values) != 1 << k:
        raise DomainError("value count does not match the coordinate count")
    table = 0
    for u in range(1 << n):
        v = 0
        for b, c in enumerate(coords):
            if (u >> c) & 1:
                v |= 1 << b
        if values[v] == -1:
            table |= 1 << u
    return BooleanFunction(n, table)
