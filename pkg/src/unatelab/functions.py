"""Concrete Boolean-function representations, truncation, and bias statistics.

Functions are immutable after construction.  Every representation
answers point queries through ``evaluate`` / ``eval_batch``; the
enumerable kinds (dense, sparse, truncations of enumerable bases) also
expose their 1-set, which is what the exact distance computations and
the SAMP oracle are built on.

Distances between functions (``rel_dist``) are exact rationals, never
floats.

JSON interchange format::

    {"n": 5, "kind": "sparse", "ones": ["10010", ...]}
    {"n": 5, "kind": "dense", "truth_table_hex": "..."}

Bit strings have coordinate 0 leftmost.  The dense truth table is
little-endian by point index: bit (p mod 8) of byte (p div 8) is the
value at point p.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .hypercube import (
    MAX_DENSE_N,
    BitPoint,
    DimensionMismatchError,
    PartialVector,
    mask_of,
    popcount_array,
)


class EmptyFunctionError(ValueError):
    """Raised when an operation needs f^{-1}(1) to be nonempty."""


class NotEnumerableError(ValueError):
    """Raised when an operation needs the 1-set of an evaluation-only function."""


class BooleanFunction:
    """Base class: a function {0,1}^n -> {0,1} with optional enumerable 1-set."""

    n: int
    kind: str = "abstract"

    def evaluate(self, bits: int) -> int:
        raise NotImplementedError

    def eval_batch(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized evaluation of an int64 array of points (n <= 63)."""
        return np.fromiter((self.evaluate(int(p)) for p in pts),
                           dtype=np.uint8, count=len(pts))

    @property
    def is_enumerable(self) -> bool:
        return True

    def ones_array(self) -> np.ndarray:
        """Sorted int64 array of the 1-set (n <= 63 enumerable kinds)."""
        raise NotImplementedError

    def ones_count(self) -> int:
        return len(self.ones_array())

    def ones_set(self) -> frozenset:
        cached = getattr(self, "_ones_set", None)
        if cached is None:
            cached = frozenset(int(p) for p in self.ones_array())
            self._ones_set = cached
        return cached

    def dense_table(self) -> np.ndarray:
        """The full truth table as a uint8 array of length 2^n (n <= 24)."""
        cached = getattr(self, "_table", None)
        if cached is None:
            if self.n > MAX_DENSE_N:
                raise ValueError(f"dense table unavailable for n={self.n}")
            cached = np.zeros(1 << self.n, dtype=np.uint8)
            ones = self.ones_array()
            cached[ones] = 1
            self._table = cached
        return cached

    def __call__(self, x) -> int:
        if isinstance(x, BitPoint):
            if x.n != self.n:
                raise DimensionMismatchError(f"point n={x.n} vs function n={self.n}")
            return self.evaluate(x.bits)
        return self.evaluate(int(x))


class DenseFunction(BooleanFunction):
    kind = "dense"

    def __init__(self, n: int, table: np.ndarray):
        if n > MAX_DENSE_N:
            raise ValueError(f"dense kind capped at n={MAX_DENSE_N}, got {n}")
        table = np.asarray(table, dtype=np.uint8)
        if table.shape != (1 << n,):
            raise ValueError(f"table must have 2^{n} entries")
        self.n = n
        self._table = table

    @staticmethod
    def from_evaluate(n: int, fn: Callable[[int], int]) -> "DenseFunction":
        table = np.fromiter((1 if fn(p) else 0 for p in range(1 << n)),
                            dtype=np.uint8, count=1 << n)
        return DenseFunction(n, table)

    @staticmethod
    def from_table_int(n: int, tt: int) -> "DenseFunction":
        """Truth table packed into an int: bit p of tt is the value at p."""
        table = np.fromiter((((tt >> p) & 1) for p in range(1 << n)),
                            dtype=np.uint8, count=1 << n)
        return DenseFunction(n, table)

    def table_int(self) -> int:
        return int.from_bytes(
            np.packbits(self._table, bitorder="little").tobytes(), "little")

    def evaluate(self, bits: int) -> int:
        return int(self._table[bits])

    def eval_batch(self, pts: np.ndarray) -> np.ndarray:
        return self._table[pts]

    def ones_array(self) -> np.ndarray:
        cached = getattr(self, "_ones", None)
        if cached is None:
            cached = np.flatnonzero(self._table).astype(np.int64)
            self._ones = cached
        return cached

    def ones_count(self) -> int:
        return int(self.dense_table().sum())


class SparseFunction(BooleanFunction):
    """Canonical interchange form: a sorted set of 1-points."""

    kind = "sparse"

    def __init__(self, n: int, ones: Iterable[int]):
        self.n = n
        if n <= 63:
            arr = np.unique(np.asarray(sorted(int(p) for p in ones), dtype=np.int64))
            if len(arr) and (int(arr[-1]) >> n):
                raise ValueError("a 1-point exceeds the dimension")
            self._ones = arr
        else:
            pts = sorted(set(int(p) for p in ones))
            if pts and (pts[-1] >> n):
                raise ValueError("a 1-point exceeds the dimension")
            self._ones_big = tuple(pts)
            self._ones_set = frozenset(pts)

    def evaluate(self, bits: int) -> int:
        return 1 if bits in self.ones_set() else 0

    def eval_batch(self, pts: np.ndarray) -> np.ndarray:
        if self.n <= MAX_DENSE_N:
            return self.dense_table()[pts]
        ones = self.ones_array()
        idx = np.searchsorted(ones, pts)
        idx_clip = np.minimum(idx, len(ones) - 1) if len(ones) else idx * 0
        hit = np.zeros(len(pts), dtype=np.uint8)
        if len(ones):
            hit[ones[idx_clip] == pts] = 1
        return hit

    def ones_array(self) -> np.ndarray:
        if self.n > 63:
            raise NotEnumerableError("1-set of an n>63 function has no int64 form")
        return self._ones

    def ones_count(self) -> int:
        if self.n > 63:
            return len(self._ones_big)
        return len(self._ones)

    def ones_set(self) -> frozenset:
        cached = getattr(self, "_ones_set", None)
        if cached is None:
            cached = frozenset(int(p) for p in self._ones)
            self._ones_set = cached
        return cached


class CallableFunction(BooleanFunction):
    """Evaluation-only wrapper around a predicate; has no enumerable 1-set."""

    kind = "callable"

    def __init__(self, n: int, fn: Callable[[int], int]):
        self.n = n
        self._fn = fn

    @property
    def is_enumerable(self) -> bool:
        return False

    def evaluate(self, bits: int) -> int:
        return 1 if self._fn(bits) else 0

    def ones_array(self) -> np.ndarray:
        raise NotEnumerableError("evaluation-only function")

    def dense_table(self) -> np.ndarray:
        raise NotEnumerableError("evaluation-only function")


class TruncatedFunction(BooleanFunction):
    """f zeroed outside the radius-r ball around a partial vector.

    Membership in the ball counts disagreements on the fixed coordinates
    of the center only; the 1-set is memoized when the base is
    enumerable, otherwise the view stays evaluation-only.
    """

    kind = "truncated"

    def __init__(self, base: BooleanFunction, r: int, center: PartialVector):
        if center.n != base.n:
            raise DimensionMismatchError(
                f"center n={center.n} vs function n={base.n}")
        if r < 0:
            raise ValueError("radius must be nonnegative")
        self.n = base.n
        self.base = base
        self.r = r
        self.center = center

    def _within(self, bits: int) -> bool:
        d = ((bits ^ self.center.bits) & self.center.fixed_mask).bit_count()
        return d <= self.r

    def evaluate(self, bits: int) -> int:
        return self.base.evaluate(bits) if self._within(bits) else 0

    @property
    def is_enumerable(self) -> bool:
        return self.base.is_enumerable

    def eval_batch(self, pts: np.ndarray) -> np.ndarray:
        vals = self.base.eval_batch(pts)
        d = popcount_array((pts ^ np.int64(self.center.bits))
                           & np.int64(self.center.fixed_mask))
        return np.where(d <= self.r, vals, 0).astype(np.uint8)

    def ones_array(self) -> np.ndarray:
        cached = getattr(self, "_ones", None)
        if cached is None:
            base_ones = self.base.ones_array()
            d = popcount_array((base_ones ^ np.int64(self.center.bits))
                               & np.int64(self.center.fixed_mask))
            cached = base_ones[d <= self.r]
            self._ones = cached
        return cached


def truncate(f: BooleanFunction, r: int, center: PartialVector) -> TruncatedFunction:
    """The (r, center)-truncation of f."""
    return TruncatedFunction(f, r, center)


def truncate_at_point(f: BooleanFunction, r: int, a: BitPoint) -> TruncatedFunction:
    """Truncation around a full point (all coordinates fixed)."""
    return TruncatedFunction(f, r, PartialVector.total(a))


def rel_dist(f: BooleanFunction, g: BooleanFunction) -> Fraction:
    """|f^{-1}(1) symdiff g^{-1}(1)| / |f^{-1}(1)|, exact.

    Asymmetric: the denominator is the 1-set size of the first argument.
    """
    if f.n != g.n:
        raise DimensionMismatchError(f"n={f.n} vs n={g.n}")
    nf = f.ones_count()
    if nf == 0:
        raise EmptyFunctionError("rel_dist denominator |f^{-1}(1)| is zero")
    if f.n <= 63:
        sym = len(np.setxor1d(f.ones_array(), g.ones_array(), assume_unique=True))
    else:
        sym = len(f.ones_set() ^ g.ones_set())
    return Fraction(sym, nf)


@dataclass(frozen=True)
class BiasProfile:
    """Per-coordinate 1-probabilities over f^{-1}(1) and the induced bias vector."""

    p: tuple[Fraction, ...]
    d: PartialVector


def coordinate_one_counts(f: BooleanFunction) -> np.ndarray:
    """counts[i] = #{z in f^{-1}(1) : z_i = 1}."""
    ones = f.ones_array()
    counts = np.empty(f.n, dtype=np.int64)
    for i in range(f.n):
        counts[i] = int(((ones >> np.int64(i)) & 1).sum())
    return counts


def bias_profile(f: BooleanFunction) -> BiasProfile:
    """Exact bias probabilities and the bias vector with 0.4/0.6 dead zone.

    d_i = 1 iff p_i > 0.6 and d_i = 0 iff p_i < 0.4, both strict; exact
    ties land in the dead zone and give '*'.
    """
    total = f.ones_count()
    if total == 0:
        raise EmptyFunctionError("bias profile of the constant-0 function")
    counts = coordinate_one_counts(f)
    p = tuple(Fraction(int(c), total) for c in counts)
    fixed = 0
    bits = 0
    for i, c in enumerate(counts):
        c = int(c)
        if 5 * c > 3 * total:
            fixed |= 1 << i
            bits |= 1 << i
        elif 5 * c < 2 * total:
            fixed |= 1 << i
    return BiasProfile(p=p, d=PartialVector(f.n, fixed, bits))


def nontrivial_coordinates(f: BooleanFunction) -> set[int]:
    """Coordinates whose 1-probability over f^{-1}(1) is strictly between 0 and 1."""
    total = f.ones_count()
    if total == 0:
        raise EmptyFunctionError("nontrivial coordinates of the constant-0 function")
    counts = coordinate_one_counts(f)
    return {i for i in range(f.n) if 0 < int(counts[i]) < total}


def pointwise_equal(f: BooleanFunction, g: BooleanFunction) -> bool:
    if f.n != g.n:
        raise DimensionMismatchError(f"n={f.n} vs n={g.n}")
    if f.is_enumerable and g.is_enumerable and f.n <= 63:
        return np.array_equal(f.ones_array(), g.ones_array())
    return all(f.evaluate(p) == g.evaluate(p) for p in range(1 << f.n))


def function_to_json(f: BooleanFunction, prefer: str = "sparse") -> dict:
    """Serialize an enumerable function to the interchange dict."""
    if prefer == "dense" and f.n <= MAX_DENSE_N:
        packed = np.packbits(f.dense_table(), bitorder="little").tobytes()
        return {"n": f.n, "kind": "dense", "truth_table_hex": packed.hex()}
    ones = [BitPoint(f.n, int(p)).to01() for p in f.ones_array()]
    return {"n": f.n, "kind": "sparse", "ones": ones}


def function_from_json(obj: dict) -> BooleanFunction:
    n = int(obj["n"])
    kind = obj["kind"]
    if kind == "dense":
        raw = bytes.fromhex(obj["truth_table_hex"])
        table = np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                              bitorder="little")[: 1 << n]
        return DenseFunction(n, table)
    if kind == "sparse":
        return SparseFunction(n, (BitPoint.from01(s).bits for s in obj["ones"]))
    raise ValueError(f"unknown function kind {kind!r}")


# Small builders used across tests and corpora.

def indicator(n: int, points: Sequence[int]) -> SparseFunction:
    return SparseFunction(n, points)


def dictator(n: int, i: int) -> SparseFunction:
    """f(x) = x_i."""
    return SparseFunction(n, (p for p in range(1 << n) if (p >> i) & 1))


def anti_dictator(n: int, i: int) -> SparseFunction:
    """f(x) = 1 - x_i."""
    return SparseFunction(n, (p for p in range(1 << n) if not (p >> i) & 1))


def xor_function(n: int, coords: Optional[Sequence[int]] = None) -> SparseFunction:
    """Parity of the given coordinates (all n by default)."""
    m = mask_of(n) if coords is None else sum(1 << i for i in coords)
    return SparseFunction(n, (p for p in range(1 << n)
                              if ((p & m).bit_count() & 1)))


def conjunction(n: int, pos: Sequence[int], neg: Sequence[int] = ()) -> SparseFunction:
    """AND of positive literals ``pos`` and negated literals ``neg``."""
    pmask = sum(1 << i for i in pos)
    nmask = sum(1 << i for i in neg)
    return SparseFunction(n, (p for p in range(1 << n)
                              if (p & pmask) == pmask and (p & nmask) == 0))


def constant(n: int, value: int) -> BooleanFunction:
    if value:
        return SparseFunction(n, range(1 << n))
    return SparseFunction(n, ())
