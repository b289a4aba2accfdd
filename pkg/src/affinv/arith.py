"""Exact modular and rational affine-map algebra.

Rational maps use :class:`fractions.Fraction`, so coefficients are always in
lowest terms with a positive denominator and never overflow.  Fixed-width
(numpy ``int64``) kernels elsewhere in the package guard their own ranges and
raise :class:`~affinv.errors.ArithmeticOverflow`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import sympy

from .errors import (
    BadDenominator,
    NotPrime,
    ValidationError,
    ZeroDivisor,
    ZeroSlope,
)

Rational = Union[int, Fraction]

MAX_PRIME = 2**62


class Prime(int):
    """An odd prime ``3 <= p <= 2**62``, checked on construction."""

    def __new__(cls, value) -> "Prime":
        if isinstance(value, Prime):
            return value
        if isinstance(value, bool) or int(value) != value:
            raise NotPrime(f"{value!r} is not an integer")
        value = int(value)
        if value < 3 or value > MAX_PRIME:
            raise NotPrime(f"{value} is outside the supported range [3, 2**62]")
        if not sympy.isprime(value):
            raise NotPrime(f"{value} is not prime")
        return super().__new__(cls, value)


@dataclass(frozen=True)
class Residue:
    value: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p)

    @property
    def signed_rep(self) -> int:
        """Representative in ``[-(p-1)/2, (p-1)/2]``."""
        return signed_rep(self.value, self.p)

    def __int__(self) -> int:
        return self.value


def signed_rep(value: int, p: int) -> int:
    v = value % p
    return v - p if v > (p - 1) // 2 else v


def mod_inverse(a: int, p: int) -> int:
    a = int(a) % p
    if a == 0:
        raise ZeroDivisor(f"0 has no inverse mod {p}")
    return pow(a, -1, p)


@dataclass(frozen=True)
class AffineMapZp:
    """The bijection ``x -> a*x + b`` of ``F_p``."""

    a: int
    b: int
    p: int

    def __post_init__(self):
        a = self.a % self.p
        if a == 0:
            raise ZeroSlope(f"slope is 0 mod {self.p}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", self.b % self.p)

    def __call__(self, x: int) -> int:
        return (self.a * x + self.b) % self.p

    def compose(self, other: "AffineMapZp") -> "AffineMapZp":
        """``self o other``."""
        if other.p != self.p:
            raise ValidationError("maps over different fields")
        return AffineMapZp(self.a * other.a, self.a * other.b + self.b, self.p)

    def inverse(self) -> "AffineMapZp":
        u = mod_inverse(self.a, self.p)
        return AffineMapZp(u, -u * self.b, self.p)

    def negate(self) -> "AffineMapZp":
        """Pointwise negation ``x -> -(a*x + b)``."""
        return AffineMapZp(-self.a, -self.b, self.p)

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class RationalAffine:
    """``x -> slope*x + intercept`` over the rationals, slope nonzero."""

    slope: Fraction
    intercept: Fraction = Fraction(0)

    def __post_init__(self):
        slope = Fraction(self.slope)
        if slope == 0:
            raise ZeroSlope("rational affine map with zero slope")
        object.__setattr__(self, "slope", slope)
        object.__setattr__(self, "intercept", Fraction(self.intercept))

    @classmethod
    def identity(cls) -> "RationalAffine":
        return cls(Fraction(1), Fraction(0))

    def __call__(self, x: Rational) -> Fraction:
        return self.slope * x + self.intercept

    def compose(self, other: "RationalAffine") -> "RationalAffine":
        """``self o other``, i.e. ``x -> self(other(x))``."""
        return RationalAffine(self.slope * other.slope, self.slope * other.intercept + self.intercept)

    def inverse(self) -> "RationalAffine":
        return RationalAffine(1 / self.slope, -self.intercept / self.slope)

    def negate(self) -> "RationalAffine":
        return RationalAffine(-self.slope, -self.intercept)

    def __repr__(self) -> str:
        return f"RationalAffine({self.slope}*x + {self.intercept})"


def compose(h1: RationalAffine, h2: RationalAffine) -> RationalAffine:
    return h1.compose(h2)


def invert(h: RationalAffine) -> RationalAffine:
    return h.inverse()


def negate(h: RationalAffine) -> RationalAffine:
    return h.negate()


def reduce_rational(q: Fraction, p: int) -> int:
    q = Fraction(q)
    if q.denominator % p == 0:
        raise BadDenominator(f"denominator {q.denominator} is divisible by {p}")
    return q.numerator * pow(q.denominator, -1, p) % p


def reduce_affine(h: RationalAffine, p: int) -> AffineMapZp:
    """The reduction of a rational affine map modulo ``p``."""
    for c in (h.slope, h.intercept):
        if c.denominator % p == 0:
            raise BadDenominator(f"denominator of {c} is divisible by {p}")
    if h.slope.numerator % p == 0:
        raise ZeroSlope(f"slope {h.slope} vanishes mod {p}")
    return AffineMapZp(reduce_rational(h.slope, p), reduce_rational(h.intercept, p), p)


def primes_up_to(K: int) -> list[int]:
    if K < 1:
        raise ValidationError("K must be >= 1")
    return list(sympy.primerange(2, K + 1))


def valuation(n: int, q: int) -> int:
    """Exponent of ``q`` in the nonzero integer ``n``."""
    if n == 0:
        raise ValidationError("valuation of 0 is undefined")
    n = abs(n)
    v = 0
    while n % q == 0:
        n //= q
        v += 1
    return v
