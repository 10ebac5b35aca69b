"""Exact coefficient arithmetic: Gaussian rationals and sums of rational
multiples of square roots of squarefree integers.

Gaussian rationals are the coefficient field of the symbolic layer; the
radical sums appear only in Taylor coefficients, where sqrt(c) survives
truncation of sqrt(c + r) when c is not a perfect square.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

RatLike = Union[int, Fraction]


def _as_fraction(x: RatLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex number re + im*i with rational parts."""

    re: Fraction
    im: Fraction

    @staticmethod
    def of(re: RatLike = 0, im: RatLike = 0) -> "GaussianRational":
        return GaussianRational(_as_fraction(re), _as_fraction(im))

    def __add__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def __truediv__(self, other: "GaussianRational") -> "GaussianRational":
        d = other.re * other.re + other.im * other.im
        if d == 0:
            raise ZeroDivisionError("division by zero GaussianRational")
        return GaussianRational(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def scale(self, q: RatLike) -> "GaussianRational":
        f = _as_fraction(q)
        return GaussianRational(self.re * f, self.im * f)

    def conj(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self) -> bool:
        return not self.is_zero

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*i" if self.im != 1 else "i"
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        imtxt = "i" if mag == 1 else f"{mag}*i"
        return f"({self.re}{sign}{imtxt})"


ZERO = GaussianRational.of(0)
ONE = GaussianRational.of(1)
I = GaussianRational.of(0, 1)
MINUS_ONE = GaussianRational.of(-1)


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Write n > 0 as s**2 * d with d squarefree; returns (s, d)."""
    if n <= 0:
        raise ValueError("radicand must be positive")
    s, d = 1, 1
    p = 2
    m = n
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            s *= p ** (e // 2)
            if e % 2:
                d *= p
        p += 1 if p == 2 else 2
    d *= m
    return s, d


def sqrt_fraction(c: Fraction) -> tuple[Fraction, int]:
    """sqrt(c) for c > 0 rational as q * sqrt(d), d squarefree int; returns (q, d)."""
    if c <= 0:
        raise ValueError("radicand must be positive")
    # sqrt(p/q) = sqrt(p*q)/q
    num = c.numerator * c.denominator
    s, d = squarefree_decompose(num)
    return Fraction(s, c.denominator), d


class RadicalComplex:
    """Finite sum q_d * sqrt(d) over squarefree d >= 1, q_d Gaussian rational.

    Closed under ring operations; equality and zero-tests are exact.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, GaussianRational] | None = None):
        clean = {}
        if terms:
            for d, q in terms.items():
                if not q.is_zero:
                    clean[d] = q
        self.terms: tuple[tuple[int, GaussianRational], ...] = tuple(
            sorted(clean.items())
        )

    @staticmethod
    def from_gaussian(q: GaussianRational) -> "RadicalComplex":
        return RadicalComplex({1: q})

    @staticmethod
    def from_rational(q: RatLike) -> "RadicalComplex":
        return RadicalComplex({1: GaussianRational.of(q)})

    @staticmethod
    def sqrt_of(c: Fraction) -> "RadicalComplex":
        q, d = sqrt_fraction(c)
        return RadicalComplex({d: GaussianRational.of(q)})

    def __add__(self, other: "RadicalComplex") -> "RadicalComplex":
        acc = dict(self.terms)
        for d, q in other.terms:
            acc[d] = acc.get(d, ZERO) + q
        return RadicalComplex(acc)

    def __neg__(self) -> "RadicalComplex":
        return RadicalComplex({d: -q for d, q in self.terms})

    def __sub__(self, other: "RadicalComplex") -> "RadicalComplex":
        return self + (-other)

    def __mul__(self, other: "RadicalComplex") -> "RadicalComplex":
        acc: dict[int, GaussianRational] = {}
        for d1, q1 in self.terms:
            for d2, q2 in other.terms:
                s, d = squarefree_decompose(d1 * d2)
                q = (q1 * q2).scale(s)
                acc[d] = acc.get(d, ZERO) + q
        return RadicalComplex(acc)

    def scale(self, q: GaussianRational) -> "RadicalComplex":
        return RadicalComplex({d: c * q for d, c in self.terms})

    def conj(self) -> "RadicalComplex":
        return RadicalComplex({d: q.conj() for d, q in self.terms})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_real(self) -> bool:
        return all(q.im == 0 for _, q in self.terms)

    def __bool__(self) -> bool:
        return not self.is_zero

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RadicalComplex) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(self.terms)

    def __complex__(self) -> complex:
        import math

        return sum(
            (complex(q) * math.sqrt(d) for d, q in self.terms), complex(0)
        )

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for d, q in self.terms:
            parts.append(str(q) if d == 1 else f"{q}*sqrt({d})")
        return " + ".join(parts)

    __repr__ = __str__
