"""Two-layer multiplexer functions: the adversarial generator family.

These functions are fixed everywhere except on the two hypercube layers
3n/4 and 3n/4+1 (n divisible by 4): 0 strictly below, 1 strictly above.
On the two middle layers the value is steered by a multiplexer over a
tuple of random conjunctive terms; a point satisfying no term reads 0,
a point satisfying several reads 1, and a point satisfying exactly one
term reads that term's cell function.  Yes-draws use monotone cells
(dictators or the all-0 function); no-draws mix dictators and
anti-dictators, which plants edge violations of both orientations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .functions import BooleanFunction
from .hypercube import popcount_array

ZERO_STAR = "0*"
ONE_STAR = "1*"

# cell function tags
DICTATOR = "dict"
ANTI_DICTATOR = "anti"
ALL_ZERO = "zero"


def term_count(n: int) -> int:
    """Number of multiplexer terms: (4/3)^n rounded to the nearest integer."""
    return round(Fraction(4**n, 3**n))


def _check_dimension(n: int):
    if n % 4 != 0 or n < 4:
        raise ValueError("two-layer constructions need n divisible by 4")
    if n > 16:
        raise ValueError("two-layer generators are desk-scale only (n <= 16)")


@dataclass(frozen=True)
class TermTuple:
    """L terms, each a map [n] -> [n]; term i reads as the conjunction of
    the variables in its range."""

    n: int
    maps: tuple  # L tuples of n coordinate indices

    def __post_init__(self):
        for t in self.maps:
            if any(not 0 <= k < self.n for k in t):
                raise ValueError("term variable out of range")

    @property
    def L(self) -> int:
        return len(self.maps)

    def masks(self) -> np.ndarray:
        cached = getattr(self, "_masks", None)
        if cached is None:
            cached = np.array([_mask_of_term(t) for t in self.maps],
                              dtype=np.int64)
            object.__setattr__(self, "_masks", cached)
        return cached


def _mask_of_term(t) -> int:
    m = 0
    for k in t:
        m |= 1 << int(k)
    return m


def draw_term_tuple(n: int, rng: np.random.Generator) -> TermTuple:
    """Uniform tuple of L = round((4/3)^n) terms, each variable uniform."""
    L = term_count(n)
    maps = rng.integers(0, n, size=(L, n))
    return TermTuple(n, tuple(tuple(int(v) for v in row) for row in maps))


def gamma(T: TermTuple, x_bits: int) -> Union[str, int]:
    """Multiplexer map: "0*" (no term satisfied), "1*" (two or more), or
    the unique satisfied term's index."""
    hit = -1
    for i, t in enumerate(T.maps):
        m = _mask_of_term(t)
        if x_bits & m == m:
            if hit >= 0:
                return ONE_STAR
            hit = i
    return ZERO_STAR if hit < 0 else hit


class MultiplexedFunction(BooleanFunction):
    """A two-layer function steered by a term tuple and cell functions."""

    kind = "two-layer"

    def __init__(self, T: TermTuple, cells):
        if len(cells) != T.L:
            raise ValueError("one cell function per term required")
        _check_dimension(T.n)
        self.n = T.n
        self.T = T
        self.cells = tuple(cells)
        self.layer_lo = 3 * T.n // 4
        self.layer_hi = self.layer_lo + 1

    def _cell_value(self, idx: int, x_bits: int) -> int:
        tag, k = self.cells[idx]
        if tag == DICTATOR:
            return (x_bits >> k) & 1
        if tag == ANTI_DICTATOR:
            return 1 - ((x_bits >> k) & 1)
        return 0

    def evaluate(self, bits: int) -> int:
        w = bits.bit_count()
        if w > self.layer_hi:
            return 1
        if w < self.layer_lo:
            return 0
        g = gamma(self.T, bits)
        if g == ZERO_STAR:
            return 0
        if g == ONE_STAR:
            return 1
        return self._cell_value(g, bits)

    def eval_batch(self, pts: np.ndarray) -> np.ndarray:
        w = popcount_array(pts)
        out = (w > self.layer_hi).astype(np.uint8)
        mid = (w == self.layer_lo) | (w == self.layer_hi)
        idx = np.flatnonzero(mid)
        if len(idx):
            xs = pts[idx]
            masks = self.T.masks()
            sat = (xs[:, None] & masks[None, :]) == masks[None, :]
            nsat = sat.sum(axis=1)
            vals = np.zeros(len(xs), dtype=np.uint8)
            vals[nsat >= 2] = 1
            uni = np.flatnonzero(nsat == 1)
            for j in uni:
                cell = int(np.flatnonzero(sat[j])[0])
                vals[j] = self._cell_value(cell, int(xs[j]))
            out[idx] = vals
        return out

    def ones_array(self) -> np.ndarray:
        cached = getattr(self, "_ones", None)
        if cached is None:
            pts = np.arange(1 << self.n, dtype=np.int64)
            cached = pts[self.eval_batch(pts) == 1]
            self._ones = cached
        return cached

    def metadata(self) -> dict:
        return {"n": self.n, "L": self.T.L, "kind": self.kind}


def draw_yes(n: int, rng: np.random.Generator) -> MultiplexedFunction:
    """Yes-distribution draw: cells are dictators (probability 2/3) or the
    all-0 function (probability 1/3).  Every draw is monotone."""
    _check_dimension(n)
    T = draw_term_tuple(n, rng)
    cells = []
    for _ in range(T.L):
        if rng.integers(0, 3) < 2:
            cells.append((DICTATOR, int(rng.integers(0, n))))
        else:
            cells.append((ALL_ZERO, None))
    return MultiplexedFunction(T, cells)


def draw_no(n: int, rng: np.random.Generator) -> MultiplexedFunction:
    """No-distribution draw: cells are dictators or anti-dictators, each
    with probability 1/2."""
    _check_dimension(n)
    T = draw_term_tuple(n, rng)
    cells = []
    for _ in range(T.L):
        tag = DICTATOR if rng.integers(0, 2) == 0 else ANTI_DICTATOR
        cells.append((tag, int(rng.integers(0, n))))
    return MultiplexedFunction(T, cells)


class ScaffoldHoleError(LookupError):
    """Evaluation requested on a layer the scaffold leaves undetermined."""


class TwoLayerScaffold(BooleanFunction):
    """The part of a two-layer function that every draw shares.

    Evaluates to 1 above layer 3n/4+1 and 0 below layer 3n/4; the two
    middle layers are holes and raise.
    """

    kind = "two-layer-scaffold"

    def __init__(self, n: int):
        _check_dimension(n)
        self.n = n
        self.layer_lo = 3 * n // 4
        self.layer_hi = self.layer_lo + 1

    @property
    def is_enumerable(self) -> bool:
        return False

    def evaluate(self, bits: int) -> int:
        w = bits.bit_count()
        if w > self.layer_hi:
            return 1
        if w < self.layer_lo:
            return 0
        raise ScaffoldHoleError(f"layer {w} is undetermined")

    def hole_sizes(self) -> tuple[int, int]:
        """Number of undetermined points on layers 3n/4 and 3n/4+1."""
        from math import comb
        return comb(self.n, self.layer_lo), comb(self.n, self.layer_hi)

    def matches(self, f: BooleanFunction) -> bool:
        """True iff f agrees with the scaffold off the two hole layers."""
        pts = np.arange(1 << self.n, dtype=np.int64)
        w = popcount_array(pts)
        off = (w < self.layer_lo) | (w > self.layer_hi)
        want = (w[off] > self.layer_hi).astype(np.uint8)
        return bool(np.array_equal(f.eval_batch(pts[off]), want))


def two_layer_scaffold(n: int) -> TwoLayerScaffold:
    return TwoLayerScaffold(n)
