"""Bit-string primitives for the n-dimensional Boolean hypercube.

Points of {0,1}^n are carried around in two forms:

* as ``BitPoint`` values for anything user-facing, and
* as plain Python ints (or numpy int64 arrays) inside hot loops, where
  bit ``i`` of the integer is coordinate ``i``.

Coordinates are 0-indexed throughout.  The text form of a point is the
bit string with coordinate 0 leftmost, so ``"110"`` is the point with
coordinates (1, 1, 0) and integer encoding ``0b011 = 3``.

Partial vectors live in {0,1,*}^n and are encoded as a pair of masks:
``fixed_mask`` marks the non-star coordinates and ``bits`` holds their
values (bits outside ``fixed_mask`` are zero).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_DENSE_N = 24  # dense truth tables are capped at 2^24 entries
MAX_N = 1024      # hard cap for any dimension (sparse paths)


class DimensionMismatchError(ValueError):
    """Raised when two hypercube objects of different dimension are combined."""


def mask_of(n: int) -> int:
    """All-ones mask for an n-bit point."""
    return (1 << n) - 1


def bit_reverse(bits: int, n: int) -> int:
    """Reverse the low n bits of ``bits``.

    Sorting integers by their bit-reversal orders points lexicographically
    by their text form (coordinate 0 is the most significant character).
    """
    out = 0
    for _ in range(n):
        out = (out << 1) | (bits & 1)
        bits >>= 1
    return out


def lex_key(bits: int, n: int) -> int:
    """Sort key realizing lexicographic order of the text form."""
    return bit_reverse(bits, n)


def popcount_array(a: np.ndarray) -> np.ndarray:
    """Per-element population count of a nonnegative integer array."""
    return np.bitwise_count(a)


def random_set_bit(values: np.ndarray, counts: np.ndarray, n: int,
                   rng: np.random.Generator) -> np.ndarray:
    """For each values[t] != 0, pick a uniformly random set bit index.

    ``counts`` must be the popcounts of ``values``.  Entries with
    ``values[t] == 0`` get index -1.  Vectorized as n passes over the
    batch, selecting the k-th set bit for a per-row uniform k.
    """
    values = np.asarray(values, dtype=np.int64)
    out = np.full(values.shape, -1, dtype=np.int64)
    nonzero = counts > 0
    if not np.any(nonzero):
        return out
    k = np.zeros(values.shape, dtype=np.int64)
    k[nonzero] = rng.integers(0, counts[nonzero])
    seen = np.zeros(values.shape, dtype=np.int64)
    remaining = nonzero.copy()
    for i in range(n):
        has = ((values >> np.int64(i)) & 1).astype(bool)
        hit = remaining & has & (seen == k)
        out[hit] = i
        remaining &= ~hit
        seen += has
        if not remaining.any():
            break
    return out


@dataclass(frozen=True)
class BitPoint:
    """A point of {0,1}^n, encoded with coordinate i at bit i."""

    n: int
    bits: int

    def __post_init__(self):
        if not (1 <= self.n <= MAX_N):
            raise ValueError(f"dimension {self.n} out of range")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError("bits outside the first n positions must be zero")

    def bit(self, i: int) -> int:
        return (self.bits >> i) & 1

    def flip(self, i: int) -> "BitPoint":
        if not 0 <= i < self.n:
            raise ValueError(f"coordinate {i} out of range for n={self.n}")
        return BitPoint(self.n, self.bits ^ (1 << i))

    def with_bit(self, i: int, b: int) -> "BitPoint":
        cleared = self.bits & ~(1 << i)
        return BitPoint(self.n, cleared | (int(b) << i))

    def weight(self) -> int:
        return self.bits.bit_count()

    def to01(self) -> str:
        return "".join(str(self.bit(i)) for i in range(self.n))

    @staticmethod
    def from01(s: str) -> "BitPoint":
        bits = 0
        for i, c in enumerate(s):
            if c == "1":
                bits |= 1 << i
            elif c != "0":
                raise ValueError(f"invalid bit character {c!r}")
        return BitPoint(len(s), bits)

    def __str__(self) -> str:
        return self.to01()


@dataclass(frozen=True)
class PartialVector:
    """An element of {0,1,*}^n; stars are the coordinates outside fixed_mask."""

    n: int
    fixed_mask: int
    bits: int

    def __post_init__(self):
        if not (1 <= self.n <= MAX_N):
            raise ValueError(f"dimension {self.n} out of range")
        if self.fixed_mask < 0 or self.fixed_mask >> self.n:
            raise ValueError("fixed_mask outside the first n positions")
        if self.bits & ~self.fixed_mask:
            raise ValueError("bits set on unfixed coordinates")

    @staticmethod
    def all_star(n: int) -> "PartialVector":
        return PartialVector(n, 0, 0)

    @staticmethod
    def total(point: BitPoint) -> "PartialVector":
        """The fully fixed vector that equals ``point`` everywhere."""
        return PartialVector(point.n, mask_of(point.n), point.bits)

    def value(self, i: int) -> Union[int, None]:
        """0, 1, or None for '*'."""
        if (self.fixed_mask >> i) & 1:
            return (self.bits >> i) & 1
        return None

    def fixed(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if (self.fixed_mask >> i) & 1)

    def unfixed(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if not (self.fixed_mask >> i) & 1)

    def num_fixed(self) -> int:
        return self.fixed_mask.bit_count()

    def num_unfixed(self) -> int:
        return self.n - self.num_fixed()

    def is_consistent_with(self, other: "PartialVector") -> bool:
        """True if self agrees with ``other`` on every coordinate self fixes."""
        if self.n != other.n:
            raise DimensionMismatchError(f"n={self.n} vs n={other.n}")
        common = self.fixed_mask
        return (common & ~other.fixed_mask) == 0 and \
            ((self.bits ^ other.bits) & common) == 0

    def to01star(self) -> str:
        out = []
        for i in range(self.n):
            v = self.value(i)
            out.append("*" if v is None else str(v))
        return "".join(out)

    @staticmethod
    def from01star(s: str) -> "PartialVector":
        fixed = 0
        bits = 0
        for i, c in enumerate(s):
            if c == "*":
                continue
            if c == "1":
                bits |= 1 << i
            elif c != "0":
                raise ValueError(f"invalid character {c!r}")
            fixed |= 1 << i
        return PartialVector(len(s), fixed, bits)

    def __str__(self) -> str:
        return self.to01star()


PointLike = Union[BitPoint, PartialVector]


def _as_masked(x: PointLike) -> tuple[int, int, int]:
    if isinstance(x, BitPoint):
        return x.n, mask_of(x.n), x.bits
    if isinstance(x, PartialVector):
        return x.n, x.fixed_mask, x.bits
    raise TypeError(f"expected BitPoint or PartialVector, got {type(x)!r}")


def sym_diff_mask(x: PointLike, y: PointLike) -> int:
    """Mask of coordinates fixed in both x and y where they disagree."""
    nx, mx, bx = _as_masked(x)
    ny, my, by = _as_masked(y)
    if nx != ny:
        raise DimensionMismatchError(f"n={nx} vs n={ny}")
    return (bx ^ by) & mx & my


def hamming_distance(x: PointLike, y: PointLike) -> int:
    """|x Delta y|: disagreements over the commonly fixed coordinates.

    For two full bit points this is the ordinary Hamming distance.
    """
    return sym_diff_mask(x, y).bit_count()


class EdgeClass(enum.Enum):
    MONOCHROMATIC = "monochromatic"
    STRICTLY_0_MONOTONE = "strictly-0-monotone"
    STRICTLY_1_MONOTONE = "strictly-1-monotone"


@dataclass(frozen=True)
class Edge:
    """A hypercube edge in direction i, identified by its lower endpoint.

    ``lower`` has bit i equal to 0; the other endpoint is lower with
    bit i flipped.
    """

    i: int
    lower: BitPoint

    def __post_init__(self):
        if not 0 <= self.i < self.lower.n:
            raise ValueError(f"direction {self.i} out of range")
        if self.lower.bit(self.i) != 0:
            raise ValueError("lower endpoint must have bit i = 0")

    @property
    def n(self) -> int:
        return self.lower.n

    @property
    def upper(self) -> BitPoint:
        return self.lower.flip(self.i)

    @staticmethod
    def through(point: BitPoint, i: int) -> "Edge":
        """The edge in direction i containing ``point``."""
        return Edge(i, point.with_bit(i, 0))


def classify_edge(f, e: Edge) -> EdgeClass:
    """Classify an edge of f as monochromatic or strictly b-monotone.

    Strictly 1-monotone means f agrees with bit i on both endpoints
    (f(lower)=0, f(upper)=1); strictly 0-monotone means f agrees with the
    negated bit (f(lower)=1, f(upper)=0).
    """
    if e.n != f.n:
        raise DimensionMismatchError(f"edge n={e.n} vs function n={f.n}")
    lo = f.evaluate(e.lower.bits)
    hi = f.evaluate(e.upper.bits)
    if lo == hi:
        return EdgeClass.MONOCHROMATIC
    if lo == 0:
        return EdgeClass.STRICTLY_1_MONOTONE
    return EdgeClass.STRICTLY_0_MONOTONE


