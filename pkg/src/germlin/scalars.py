"""Exact Gaussian-rational scalars and coefficient-mode helpers.

Series coefficients come in two flavours: exact mode uses :class:`QC`
(complex numbers with ``Fraction`` real/imaginary parts, so equality is
decidable) and float mode uses the builtin ``complex``.  All series and
solver code is written against the common arithmetic protocol of the two.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]

EXACT = "exact"
FLOAT = "float"

# float-mode coefficients below FLOAT_CLEAN_REL * (largest coefficient) are
# treated as accumulated noise and dropped
FLOAT_CLEAN_REL = 1e-14


class QC:
    """A complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Rational = 0, im: Rational = 0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("QC is immutable")

    @classmethod
    def parse(cls, re: str, im: str = "0") -> "QC":
        """Build from digit strings; accepts both '0.25' and '1/4'."""
        return cls(Fraction(re), Fraction(im))

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QC(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        d = other.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero QC")
        return QC((self.re * other.re + self.im * other.im) / d,
                  (self.im * other.re - self.re * other.im) / d)

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, n: int) -> "QC":
        if not isinstance(n, int):
            raise TypeError("QC powers must be integers")
        if n < 0:
            return (QC(1) / self) ** (-n)
        out = QC(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def abs2(self) -> Fraction:
        """Exact squared modulus."""
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return math.sqrt(float(self.abs2()))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    def __repr__(self):
        return f"QC({self.re!r}, {self.im!r})"


def _coerce(value):
    if isinstance(value, QC):
        return value
    if isinstance(value, (int, Fraction)):
        return QC(value)
    return NotImplemented


def zero(mode: str):
    return QC() if mode == EXACT else 0j


def one(mode: str):
    return QC(1) if mode == EXACT else 1 + 0j


def as_complex(c) -> complex:
    return c.to_complex() if isinstance(c, QC) else complex(c)


def abs2(c):
    """Squared modulus; exact Fraction for QC, float otherwise."""
    if isinstance(c, QC):
        return c.abs2()
    return c.real * c.real + c.imag * c.imag


def magnitude(c) -> float:
    return abs(c)


def coeff_to_strings(c) -> tuple[str, str]:
    """Serialize a coefficient as a (re, im) digit-string pair.

    Exact coefficients round-trip bit-exactly through ``Fraction``; float
    coefficients use ``repr`` which round-trips by construction.
    """
    if isinstance(c, QC):
        return str(c.re), str(c.im)
    z = complex(c)
    return repr(z.real), repr(z.imag)


def coeff_from_strings(re: str, im: str, mode: str):
    if mode == EXACT:
        return QC(Fraction(re), Fraction(im))
    return complex(float(re), float(im))
