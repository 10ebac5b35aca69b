"""Exact symbolic algebra for complex-polynomial expressions in z_1..z_n,
conj(z_1)..conj(z_n) times a small algebra of known-smooth radial scalars.

The function class is: finite sums

    coeff * sqrt(c_1 + r_1)^(t_1) * ... * z^a conj(z)^b

with Gaussian-rational coefficients, positive rational constants c_f,
radial polynomials r_f >= 0 (nonnegative rational combinations of
|z_k|^2-monomials) and integer exponents t_f counting half-powers, i.e.
a stored exponent t means (c+r)^(t/2).  The scalars are everywhere
smooth, real, conjugation-invariant and bounded below by sqrt(c)^t > 0,
so Wirtinger derivatives, products and reciprocals stay inside the
class.  Canonical form folds even positive powers of a radicand into the
polynomial part, merges identical (scalar, monomial) keys and drops zero
coefficients, which makes equality a tuple comparison.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .rational import (
    GaussianRational,
    RadicalComplex,
    RatLike,
    ZERO,
    ONE,
)

Number = Union[int, Fraction]


# ---------------------------------------------------------------------------
# monomials


@dataclass(frozen=True)
class ConjMonomial:
    """Monomial prod_k z_k^{a_k} conj(z_k)^{b_k}; exps[k] = (a_k, b_k)."""

    exps: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if any(a < 0 or b < 0 for a, b in self.exps):
            raise ValueError("monomial exponents must be nonnegative")

    @staticmethod
    def unit(n: int) -> "ConjMonomial":
        return ConjMonomial(((0, 0),) * n)

    @staticmethod
    def of(n: int, k: int, a: int = 1, b: int = 0) -> "ConjMonomial":
        exps = [(0, 0)] * n
        exps[k] = (a, b)
        return ConjMonomial(tuple(exps))

    @property
    def n(self) -> int:
        return len(self.exps)

    @property
    def degree(self) -> int:
        return sum(a + b for a, b in self.exps)

    @property
    def is_radial(self) -> bool:
        return all(a == b for a, b in self.exps)

    @property
    def is_unit(self) -> bool:
        return all(a == 0 and b == 0 for a, b in self.exps)

    def conj(self) -> "ConjMonomial":
        return ConjMonomial(tuple((b, a) for a, b in self.exps))

    def mul(self, other: "ConjMonomial") -> "ConjMonomial":
        return ConjMonomial(
            tuple(
                (a1 + a2, b1 + b2)
                for (a1, b1), (a2, b2) in zip(self.exps, other.exps)
            )
        )

    def divide(self, other: "ConjMonomial") -> "ConjMonomial | None":
        """Componentwise quotient self/other, or None if not dominating."""
        out = []
        for (a1, b1), (a2, b2) in zip(self.exps, other.exps):
            if a1 < a2 or b1 < b2:
                return None
            out.append((a1 - a2, b1 - b2))
        return ConjMonomial(tuple(out))

    def key(self):
        return (self.degree, self.exps)

    def eval(self, zs: Sequence, zbs: Sequence):
        val = 1
        for k, (a, b) in enumerate(self.exps):
            if a:
                val = val * zs[k] ** a
            if b:
                val = val * zbs[k] ** b
        return val


# ---------------------------------------------------------------------------
# radial polynomials and smooth scalars


@dataclass(frozen=True)
class RadialPoly:
    """Nonnegative rational combination of radial monomials (all a_k = b_k)."""

    n: int
    terms: tuple[tuple[ConjMonomial, Fraction], ...]

    @staticmethod
    def make(n: int, terms: Iterable[tuple[ConjMonomial, Fraction]]) -> "RadialPoly":
        acc: dict[ConjMonomial, Fraction] = {}
        for m, q in terms:
            if not m.is_radial:
                raise ValueError("radicand terms must be radial monomials")
            if m.is_unit:
                raise ValueError("constant part belongs to the radicand constant")
            acc[m] = acc.get(m, Fraction(0)) + q
        clean = [(m, q) for m, q in acc.items() if q != 0]
        if any(q < 0 for _, q in clean):
            raise ValueError("radial polynomial must have nonnegative coefficients")
        clean.sort(key=lambda t: t[0].key())
        return RadialPoly(n, tuple(clean))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def min_degree(self) -> int:
        return min((m.degree for m, _ in self.terms), default=0)

    def substitute_chart(self, j: int) -> "RadialPoly":
        return RadialPoly.make(
            self.n, ((_subst_mono(m, j), q) for m, q in self.terms)
        )

    def eval(self, zs: Sequence, zbs: Sequence):
        val = 0
        for m, q in self.terms:
            val = val + float(q) * m.eval(zs, zbs)
        return val

    def mul(self, other: "RadialPoly") -> "RadialPoly":
        acc: dict[ConjMonomial, Fraction] = {}
        for m1, q1 in self.terms:
            for m2, q2 in other.terms:
                m = m1.mul(m2)
                acc[m] = acc.get(m, Fraction(0)) + q1 * q2
        return RadialPoly(self.n, tuple(sorted(acc.items(), key=lambda t: t[0].key())))

    def key(self):
        return tuple((m.key(), q) for m, q in self.terms)


@dataclass(frozen=True)
class SqrtArg:
    """Radicand c + r with c > 0 rational and r a radial polynomial."""

    c: Fraction
    radial: RadialPoly

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("radicand constant must be positive")

    def key(self):
        return (self.c, self.radial.key())

    def is_constant(self) -> bool:
        return self.radial.is_zero

    def eval(self, zs: Sequence, zbs: Sequence):
        return float(self.c) + self.radial.eval(zs, zbs)

    def poly_power_terms(self, q: int) -> dict[ConjMonomial, Fraction]:
        """(c + r)^q expanded as monomial -> coefficient, q >= 0."""
        n = self.radial.n
        acc = {ConjMonomial.unit(n): Fraction(1)}
        for _ in range(q):
            nxt: dict[ConjMonomial, Fraction] = {}
            for m, f in acc.items():
                nxt[m] = nxt.get(m, Fraction(0)) + f * self.c
                for m2, f2 in self.radial.terms:
                    mm = m.mul(m2)
                    nxt[mm] = nxt.get(mm, Fraction(0)) + f * f2
            acc = nxt
        return acc


def _is_square(q: Fraction) -> tuple[bool, Fraction]:
    def isq(k: int) -> tuple[bool, int]:
        r = int(k ** 0.5)
        for c in (r - 1, r, r + 1):
            if c >= 0 and c * c == k:
                return True, c
        return False, 0

    okn, sn = isq(q.numerator)
    okd, sd = isq(q.denominator)
    if okn and okd:
        return True, Fraction(sn, sd)
    return False, Fraction(0)


@dataclass(frozen=True)
class SmoothScalar:
    """Product of factors (c_f + r_f)^(t_f/2); identity is the empty product.

    Canonical exponents: constant radicands carry t = 1 only (even parts
    and perfect squares fold into the rational coefficient); nonconstant
    radicands carry t = 1 or t < 0.
    """

    factors: tuple[tuple[SqrtArg, int], ...]

    @staticmethod
    def one() -> "SmoothScalar":
        return SmoothScalar(())

    @staticmethod
    def sqrt(arg: SqrtArg) -> "SmoothScalar":
        return SmoothScalar(((arg, 1),))

    @property
    def is_one(self) -> bool:
        return not self.factors

    def mul(self, other: "SmoothScalar") -> "SmoothScalar":
        acc: dict[SqrtArg, int] = {}
        for arg, t in self.factors + other.factors:
            acc[arg] = acc.get(arg, 0) + t
        return SmoothScalar(
            tuple(sorted(((a, t) for a, t in acc.items() if t != 0),
                         key=lambda ft: ft[0].key()))
        )

    def inverse(self) -> "SmoothScalar":
        return SmoothScalar(tuple((a, -t) for a, t in self.factors))

    def key(self):
        return tuple((a.key(), t) for a, t in self.factors)

    def eval(self, zs: Sequence, zbs: Sequence):
        val = 1
        for arg, t in self.factors:
            rad = arg.eval(zs, zbs)
            s = rad.sqrt() if hasattr(rad, "sqrt") else cmath.sqrt(rad)
            val = val * _ring_int_power(s, t)
        return val


def _ring_int_power(x, t: int):
    if t >= 0:
        return x ** t
    inv = x.reciprocal() if hasattr(x, "reciprocal") else 1 / x
    return inv ** (-t)


# ---------------------------------------------------------------------------
# expressions


Term = tuple[ConjMonomial, SmoothScalar, GaussianRational]


def _normalize_term(
    coeff: GaussianRational, scalar: SmoothScalar, mono: ConjMonomial
) -> list[Term]:
    """Fold even scalar powers into polynomial terms; returns expanded terms."""
    expansion: list[tuple[GaussianRational, ConjMonomial]] = [(coeff, mono)]
    residual: list[tuple[SqrtArg, int]] = []
    for arg, t in scalar.factors:
        if arg.is_constant():
            sq_ok, root = _is_square(arg.c)
            if sq_ok:
                f = root ** t
                expansion = [(c.scale(f), m) for c, m in expansion]
                continue
            q, s = divmod(t, 2)
            if q:
                f = arg.c ** q
                expansion = [(c.scale(f), m) for c, m in expansion]
            if s:
                residual.append((arg, 1))
            continue
        if t >= 2:
            q, s = divmod(t, 2)
            poly = arg.poly_power_terms(q)
            nxt = []
            for c, m in expansion:
                for m2, f2 in poly.items():
                    nxt.append((c.scale(f2), m.mul(m2)))
            expansion = nxt
            if s:
                residual.append((arg, 1))
        else:
            residual.append((arg, t))
    scal = SmoothScalar(tuple(sorted(residual, key=lambda ft: ft[0].key())))
    return [(m, scal, c) for c, m in expansion]


class Expression:
    """Canonical finite sum of (monomial, scalar, coefficient) terms."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Iterable[Term] = ()):
        acc: dict[tuple, tuple[ConjMonomial, SmoothScalar, GaussianRational]] = {}
        for mono, scal, coeff in terms:
            if coeff.is_zero:
                continue
            for m, s, c in _normalize_term(coeff, scal, mono):
                k = (m.key(), s.key())
                if k in acc:
                    m0, s0, c0 = acc[k]
                    acc[k] = (m0, s0, c0 + c)
                else:
                    acc[k] = (m, s, c)
        self.n = n
        self.terms: tuple[Term, ...] = tuple(
            (m, s, c)
            for _, (m, s, c) in sorted(acc.items(), key=lambda kv: kv[0])
            if not c.is_zero
        )

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(n: int) -> "Expression":
        return Expression(n)

    @staticmethod
    def const(n: int, re: RatLike = 0, im: RatLike = 0) -> "Expression":
        return Expression(
            n, [(ConjMonomial.unit(n), SmoothScalar.one(), GaussianRational.of(re, im))]
        )

    @staticmethod
    def one(n: int) -> "Expression":
        return Expression.const(n, 1)

    @staticmethod
    def i(n: int) -> "Expression":
        return Expression.const(n, 0, 1)

    @staticmethod
    def z(n: int, k: int) -> "Expression":
        return Expression(
            n, [(ConjMonomial.of(n, k, 1, 0), SmoothScalar.one(), ONE)]
        )

    @staticmethod
    def zbar(n: int, k: int) -> "Expression":
        return Expression(
            n, [(ConjMonomial.of(n, k, 0, 1), SmoothScalar.one(), ONE)]
        )

    @staticmethod
    def abs2(n: int, k: int) -> "Expression":
        return Expression(
            n, [(ConjMonomial.of(n, k, 1, 1), SmoothScalar.one(), ONE)]
        )

    @staticmethod
    def monomial(n: int, mono: ConjMonomial,
                 coeff: GaussianRational = ONE) -> "Expression":
        return Expression(n, [(mono, SmoothScalar.one(), coeff)])

    # -- structure ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Expression)
            and self.n == other.n
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.n, self.terms))

    def constant_term(self) -> GaussianRational:
        for m, s, c in self.terms:
            if m.is_unit and s.is_one:
                return c
        return ZERO

    def max_degree(self) -> int:
        return max((m.degree for m, _, _ in self.terms), default=0)

    # -- ring operations ----------------------------------------------------

    def _check(self, other: "Expression"):
        if self.n != other.n:
            raise ValueError(
                f"variable-set mismatch: {self.n} vs {other.n} variables"
            )

    def __add__(self, other: "Expression") -> "Expression":
        self._check(other)
        return Expression(self.n, self.terms + other.terms)

    def __neg__(self) -> "Expression":
        return Expression(self.n, [(m, s, -c) for m, s, c in self.terms])

    def __sub__(self, other: "Expression") -> "Expression":
        return self + (-other)

    def __mul__(self, other: "Expression") -> "Expression":
        self._check(other)
        out = []
        for m1, s1, c1 in self.terms:
            for m2, s2, c2 in other.terms:
                out.append((m1.mul(m2), s1.mul(s2), c1 * c2))
        return Expression(self.n, out)

    def __pow__(self, p: int) -> "Expression":
        if p < 0:
            raise ValueError("negative expression powers are not defined")
        out = Expression.one(self.n)
        base = self
        while p:
            if p & 1:
                out = out * base
            base = base * base if p > 1 else base
            p >>= 1
        return out

    def scale(self, c: GaussianRational) -> "Expression":
        return Expression(self.n, [(m, s, c0 * c) for m, s, c0 in self.terms])

    def conj(self) -> "Expression":
        return Expression(
            self.n, [(m.conj(), s, c.conj()) for m, s, c in self.terms]
        )

    # -- calculus -----------------------------------------------------------

    def wirtinger(self, k: int, anti: bool = False) -> "Expression":
        """d/dz_k (anti=False) or d/dconj(z_k) (anti=True)."""
        out: list[Term] = []
        for mono, scal, coeff in self.terms:
            a, b = mono.exps[k]
            e = b if anti else a
            if e:
                exps = list(mono.exps)
                exps[k] = (a, b - 1) if anti else (a - 1, b)
                out.append((ConjMonomial(tuple(exps)), scal, coeff.scale(e)))
            # chain rule through each sqrt factor:
            # d (c+r)^(t/2) = (t/2) r' (c+r)^((t-2)/2)
            for idx, (arg, t) in enumerate(scal.factors):
                dr = _radial_derivative(arg.radial, k, anti)
                if not dr:
                    continue
                rest = list(scal.factors)
                rest[idx] = (arg, t - 2)
                if rest[idx][1] == 0:
                    del rest[idx]
                s2 = SmoothScalar(tuple(rest))
                for m2, q2 in dr:
                    out.append(
                        (mono.mul(m2), s2, coeff.scale(q2 * Fraction(t, 2)))
                    )
        return Expression(self.n, out)

    # -- substitution -------------------------------------------------------

    def substitute_chart(self, j: int) -> "Expression":
        """Substitute z_i <- z_j * w_i (i != j) over the blow-up chart
        variables (w_1, .., z_j, .., w_n); slot j keeps the z_j variable."""
        out = []
        for mono, scal, coeff in self.terms:
            m2 = _subst_mono(mono, j)
            s2 = SmoothScalar(
                tuple(
                    (SqrtArg(arg.c, arg.radial.substitute_chart(j)), t)
                    for arg, t in scal.factors
                )
            )
            out.append((m2, s2, coeff))
        return Expression(self.n, out)

    # -- evaluation ---------------------------------------------------------

    def eval(self, point: Sequence[complex]) -> complex:
        zs = [complex(p) for p in point]
        zbs = [p.conjugate() for p in zs]
        return self.eval_generic(zs, zbs)

    def eval_generic(self, zs: Sequence, zbs: Sequence):
        val = 0
        for mono, scal, coeff in self.terms:
            t = complex(coeff) * mono.eval(zs, zbs)
            if not scal.is_one:
                t = t * scal.eval(zs, zbs)
            val = val + t
        return val

    # -- Taylor data --------------------------------------------------------

    def taylor(self, order: int) -> dict[ConjMonomial, RadicalComplex]:
        """Truncated Taylor data at 0 up to total degree `order` (cap 6)."""
        if order > 6:
            raise ValueError("taylor order capped at 6")
        acc: dict[ConjMonomial, RadicalComplex] = {}
        for mono, scal, coeff in self.terms:
            room = order - mono.degree
            if room < 0:
                continue
            series = _scalar_series(scal, self.n, room)
            for m2, r in series.items():
                m = mono.mul(m2)
                if m.degree > order:
                    continue
                v = r.scale(coeff)
                if m in acc:
                    acc[m] = acc[m] + v
                else:
                    acc[m] = v
        return {m: r for m, r in acc.items() if not r.is_zero}

    def __str__(self) -> str:
        from .dsl import format_expression

        return format_expression(self)

    __repr__ = __str__


def _subst_mono(mono: ConjMonomial, j: int) -> ConjMonomial:
    extra_a = sum(a for k, (a, b) in enumerate(mono.exps) if k != j)
    extra_b = sum(b for k, (a, b) in enumerate(mono.exps) if k != j)
    exps = list(mono.exps)
    aj, bj = exps[j]
    exps[j] = (aj + extra_a, bj + extra_b)
    return ConjMonomial(tuple(exps))


def _radial_derivative(
    r: RadialPoly, k: int, anti: bool
) -> list[tuple[ConjMonomial, Fraction]]:
    out = []
    for m, q in r.terms:
        a, b = m.exps[k]
        e = b if anti else a
        if not e:
            continue
        exps = list(m.exps)
        exps[k] = (a, b - 1) if anti else (a - 1, b)
        out.append((ConjMonomial(tuple(exps)), q * e))
    return out


def _binom_frac(p: Fraction, k: int) -> Fraction:
    num = Fraction(1)
    for m in range(k):
        num *= p - m
    for m in range(1, k + 1):
        num /= m
    return num


def _frac_power(c: Fraction, half_exponent: int) -> RadicalComplex:
    """c^(half_exponent/2) as an exact radical number, c > 0."""
    q, s = divmod(half_exponent, 2)
    out = RadicalComplex.from_rational(c ** q)
    if s:
        out = out * RadicalComplex.sqrt_of(c)
    return out


def _scalar_series(
    scal: SmoothScalar, n: int, order: int
) -> dict[ConjMonomial, RadicalComplex]:
    series = {ConjMonomial.unit(n): RadicalComplex.from_rational(1)}
    for arg, t in scal.factors:
        p = Fraction(t, 2)
        fac: dict[ConjMonomial, RadicalComplex] = {}
        if arg.radial.is_zero:
            fac[ConjMonomial.unit(n)] = _frac_power(arg.c, t)
        else:
            # (c+r)^p = sum_k binom(p,k) c^(p-k) r^k
            step = max(arg.radial.min_degree(), 1)
            rk = RadialPoly(n, ())  # placeholder; build powers iteratively
            r_pow: dict[ConjMonomial, Fraction] = {ConjMonomial.unit(n): Fraction(1)}
            k = 0
            while k * step <= order:
                cpk = _frac_power(arg.c, t - 2 * k)  # c^(p-k)
                bn = _binom_frac(p, k)
                for m, f in r_pow.items():
                    if m.degree > order:
                        continue
                    v = cpk.scale(GaussianRational.of(bn * f))
                    if m in fac:
                        fac[m] = fac[m] + v
                    else:
                        fac[m] = v
                k += 1
                if k * step > order:
                    break
                nxt: dict[ConjMonomial, Fraction] = {}
                for m, f in r_pow.items():
                    for m2, f2 in arg.radial.terms:
                        mm = m.mul(m2)
                        if mm.degree > order:
                            continue
                        nxt[mm] = nxt.get(mm, Fraction(0)) + f * f2
                r_pow = nxt
                if not r_pow:
                    break
        out: dict[ConjMonomial, RadicalComplex] = {}
        for m1, v1 in series.items():
            for m2, v2 in fac.items():
                m = m1.mul(m2)
                if m.degree > order:
                    continue
                v = v1 * v2
                if m in out:
                    out[m] = out[m] + v
                else:
                    out[m] = v
        series = out
    return {m: v for m, v in series.items() if not v.is_zero}


# ---------------------------------------------------------------------------
# module-level operations in the shape the rest of the engine consumes


def add(e1: Expression, e2: Expression) -> Expression:
    return e1 + e2


def mul(e1: Expression, e2: Expression) -> Expression:
    return e1 * e2


def conj(e: Expression) -> Expression:
    return e.conj()


def wirtinger_d(e: Expression, k: int, anti: bool = False) -> Expression:
    return e.wirtinger(k, anti)


def quotient_parts(e: Expression) -> tuple[Expression, SmoothScalar]:
    """Rewrite e = numerator / denominator with a scalar denominator.

    The denominator collects, per radicand, the deepest reciprocal power
    appearing in any term, so the numerator has no negative scalar
    exponents.
    """
    need: dict[SqrtArg, int] = {}
    for _, scal, _ in e.terms:
        for arg, t in scal.factors:
            if t < 0:
                need[arg] = max(need.get(arg, 0), -t)
    if not need:
        return e, SmoothScalar.one()
    den = SmoothScalar(
        tuple(sorted(((a, t) for a, t in need.items()), key=lambda ft: ft[0].key()))
    )
    num = Expression(
        e.n, [(m, s.mul(den), c) for m, s, c in e.terms]
    )
    return num, den


def substitute_chart(e: Expression, j: int) -> Expression:
    return e.substitute_chart(j)


@dataclass(frozen=True)
class Divisible:
    quotient: Expression


@dataclass(frozen=True)
class NotDivisible:
    witness: Term


@dataclass(frozen=True)
class UnknownDivisibility:
    reason: str


DivVerdict = Union[Divisible, NotDivisible, UnknownDivisibility]


def smooth_div(e: Expression, j: int) -> DivVerdict:
    """Decide e = z_j * F with F in the smooth class.

    Sufficient rule: every canonical term has holomorphic exponent
    a_j >= 1.  A surviving term with a_j = 0 has a nonvanishing scalar
    factor and nonzero coefficient, hence certifies non-divisibility
    within this algebra (no cross-scalar cancellation can occur in
    canonical form).
    """
    quot: list[Term] = []
    for mono, scal, coeff in e.terms:
        a, b = mono.exps[j]
        if a < 1:
            return NotDivisible((mono, scal, coeff))
        exps = list(mono.exps)
        exps[j] = (a - 1, b)
        quot.append((ConjMonomial(tuple(exps)), scal, coeff))
    return Divisible(Expression(e.n, quot))


def divide_monomial(e: Expression, mono: ConjMonomial) -> DivVerdict:
    """Smooth division by a fixed monomial (componentwise dominance)."""
    quot: list[Term] = []
    for m, scal, coeff in e.terms:
        q = m.divide(mono)
        if q is None:
            return NotDivisible((m, scal, coeff))
        quot.append((q, scal, coeff))
    return Divisible(Expression(e.n, quot))


def taylor_coeffs(e: Expression, order: int) -> dict[ConjMonomial, RadicalComplex]:
    return e.taylor(order)
