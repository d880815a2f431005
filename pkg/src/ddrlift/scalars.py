"""Exact rational scalars and conversions.

All exact-arithmetic code in this package works over ``gmpy2.mpq``; the float
path uses plain ``float``. Helpers here convert between the two and parse the
serialized forms used in the JSON mesh schema.
"""

from __future__ import annotations

from fractions import Fraction

import gmpy2
from gmpy2 import mpq

QQ = mpq

ZERO = mpq(0)
ONE = mpq(1)


def is_rational(x) -> bool:
    return isinstance(x, (type(ZERO), int, Fraction))


def rat(x) -> mpq:
    """Coerce ints, Fractions, floats and 'p/q' strings to an exact mpq.

    Floats convert by their exact binary value, so a JSON round-trip of a
    float coordinate is lossless.
    """
    if isinstance(x, type(ZERO)):
        return x
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        f = Fraction(x)
        return mpq(f.numerator, f.denominator)
    if isinstance(x, str):
        return mpq(x)
    raise TypeError(f"cannot convert {type(x).__name__} to rational")


def rat_str(x: mpq) -> str:
    """Canonical string form, e.g. '3/4' or '2'."""
    x = rat(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def to_float(x) -> float:
    if isinstance(x, float):
        return x
    return float(gmpy2.mpfr(x, 113))


def factorial(n: int) -> int:
    return int(gmpy2.fac(n))


def binomial(n: int, k: int) -> int:
    if k < 0 or n < 0 or k > n:
        return 0
    return int(gmpy2.bincoef(n, k))


def sqrt_exact(x: mpq):
    """Return the exact rational square root of x, or None if irrational."""
    x = rat(x)
    if x < 0:
        raise ValueError("negative radicand")
    pn, rn = gmpy2.isqrt_rem(x.numerator)
    pd, rd = gmpy2.isqrt_rem(x.denominator)
    if rn == 0 and rd == 0:
        return mpq(pn, pd)
    return None
