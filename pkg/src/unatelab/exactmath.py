"""Exact integer/rational arithmetic for loop counts and thresholds.

Every ceiling and every log-threshold comparison in the algorithms is
computed here without floating point, so boundary cases (N a power of
two, epsilon a decimal like 0.1) are exact.  Floats are accepted at the
API surface and converted through their shortest decimal representation,
so ``0.1`` means exactly 1/10.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

Rational = Union[int, float, str, Fraction]


def as_fraction(x: Rational) -> Fraction:
    """Exact Fraction from an int, Fraction, decimal string, or float.

    Floats go through repr() so that 0.1 becomes 1/10, not the binary
    expansion of the double closest to 0.1.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


def ceil_frac(x: Rational) -> int:
    fr = as_fraction(x)
    return -((-fr.numerator) // fr.denominator)


def floor_frac(x: Rational) -> int:
    fr = as_fraction(x)
    return fr.numerator // fr.denominator


def ceil_mul_log2(c: int, m: int) -> int:
    """ceil(c * log2(m)) for integers c >= 0, m >= 1, exactly."""
    if m < 1:
        raise ValueError("log2 argument must be >= 1")
    return (m**c - 1).bit_length()


def floor_mul_log2(c: int, m: int) -> int:
    """floor(c * log2(m)) for integers c >= 0, m >= 1, exactly."""
    if m < 1:
        raise ValueError("log2 argument must be >= 1")
    return (m**c).bit_length() - 1


def ceil_log2_frac(x: Rational) -> int:
    """ceil(log2(x)) for a positive rational x, exactly."""
    fr = as_fraction(x)
    p, q = fr.numerator, fr.denominator
    if p <= 0:
        raise ValueError("log2 argument must be positive")
    # smallest m (possibly negative) with 2^m >= p/q
    m = p.bit_length() - q.bit_length() - 1
    while not _pow2_ge(m, p, q):
        m += 1
    while _pow2_ge(m - 1, p, q):
        m -= 1
    return m


def _pow2_ge(m: int, p: int, q: int) -> bool:
    """True iff 2^m >= p/q."""
    if m >= 0:
        return (q << m) >= p
    return q >= (p << (-m))


def exceeds_2log2(distance: int, count: int) -> bool:
    """True iff distance > 2*log2(count), exactly (count >= 1)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return (1 << distance) > count * count


def wilson_lower_bound(successes: int, trials: int, z: float = 1.959963984540054) -> float:
    """Wilson score interval lower bound for a binomial proportion."""
    if trials == 0:
        return 0.0
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = phat + z2 / (2 * trials)
    margin = z * ((phat * (1 - phat) + z2 / (4 * trials)) / trials) ** 0.5
    return max(0.0, (center - margin) / denom)
