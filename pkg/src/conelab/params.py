"""Exponent configuration shared by every module.

All label arithmetic in the package works with *dyadic* numbers of the form
2^-m.  To keep comparisons exact we carry the integer exponent m around and
only materialize the float value (which is exact, powers of two are
representable) at the edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction


def dyadic_value(exp: int) -> float:
    """The dyadic number 2^-exp (exact as a float)."""
    return 2.0 ** (-exp)


def dyadic_ceil_exp(v: float) -> int:
    """Exponent e of the smallest dyadic 2^-e with 2^-e >= v (v > 0).

    Uses frexp so that exact powers of two round to themselves.
    """
    if v <= 0 or not math.isfinite(v):
        raise ValueError(f"need a finite positive value, got {v}")
    m, e = math.frexp(v)  # v = m * 2^e with m in [0.5, 1)
    # smallest power of two >= v is 2^(e-1) when v is exactly 2^(e-1)
    return -(e - 1) if m == 0.5 else -e


def bucket_left_closed(x: Fraction | float) -> int:
    """Bucket index K with 2^-K <= x < 2^-K+1 for x > 0 (exact for Fractions)."""
    f = x if isinstance(x, Fraction) else Fraction(x)
    if f <= 0:
        raise ValueError("bucket of a nonpositive quantity")
    p, q = f.numerator, f.denominator
    # e = floor(log2(p/q)); then K = -e
    e = p.bit_length() - q.bit_length()
    if not (q << e <= p if e >= 0 else q <= p << -e):
        e -= 1
    return -e


def bucket_right_closed(x: Fraction | float) -> int:
    """Bucket index J with 2^-J-1 < x <= 2^-J for x > 0 (exact for Fractions)."""
    f = x if isinstance(x, Fraction) else Fraction(x)
    if f <= 0:
        raise ValueError("bucket of a nonpositive quantity")
    k = bucket_left_closed(f)
    # x in [2^-k, 2^-k+1); right-closed bucket differs only at exact powers
    return k if f * Fraction(2) ** k == 1 else k - 1


@dataclass(frozen=True)
class Params:
    """Exponent q and the admissible constants used throughout.

    q must lie strictly inside (3/2, 2).  A is determined by q; B and C are
    configuration (the underlying estimates only assert that suitable values
    exist).  C0 follows the fixed formula 18B + 6A + 5C + 7.
    """

    q: float = 1.75
    B: float = 8.0
    C: float = 8.0

    def __post_init__(self) -> None:
        if not (1.5 < self.q < 2.0):
            raise ValueError(f"q must be in (3/2, 2), got {self.q}")
        if self.B <= 0 or self.C <= 0:
            raise ValueError("B and C must be positive")

    @property
    def qprime(self) -> float:
        return self.q / (self.q - 1.0)

    @property
    def A(self) -> float:
        return 1.0 / (1.0 / self.q - 0.5)

    @property
    def C0(self) -> float:
        return 18.0 * self.B + 6.0 * self.A + 5.0 * self.C + 7.0

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "qprime": self.qprime,
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "C0": self.C0,
        }
