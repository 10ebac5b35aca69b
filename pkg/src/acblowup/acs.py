"""Almost complex structures as n x n matrices of (linear, conjugate-linear)
expression pairs: involution and line-condition checks, the Nijenhuis tensor
(symbolic and jet-based) and the Taylor-relation obstruction report at the
origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import numeric
from .expr import ConjMonomial, Expression
from .rational import GaussianRational, RadicalComplex, ZERO, ONE, I


@dataclass(frozen=True)
class ACSEntry:
    """Matrix entry acting on a tangent component u as lin*u + anti*conj(u)."""

    lin: Expression
    anti: Expression

    def conj_pair(self) -> "ACSEntry":
        return ACSEntry(self.lin.conj(), self.anti.conj())

    def __add__(self, other: "ACSEntry") -> "ACSEntry":
        return ACSEntry(self.lin + other.lin, self.anti + other.anti)

    def compose(self, other: "ACSEntry") -> "ACSEntry":
        """Entry of the composition: self applied after other."""
        return ACSEntry(
            self.lin * other.lin + self.anti * other.anti.conj(),
            self.lin * other.anti + self.anti * other.lin.conj(),
        )

    @property
    def is_zero(self) -> bool:
        return self.lin.is_zero and self.anti.is_zero


@dataclass(frozen=True)
class ACStructure:
    """Almost complex structure on a chart of C^n in the pair-matrix form."""

    n: int
    entries: tuple[tuple[ACSEntry, ...], ...]

    @staticmethod
    def standard(n: int) -> "ACStructure":
        rows = []
        for i in range(n):
            row = []
            for k in range(n):
                lin = Expression.i(n) if i == k else Expression.zero(n)
                row.append(ACSEntry(lin, Expression.zero(n)))
            rows.append(tuple(row))
        return ACStructure(n, tuple(rows))

    @staticmethod
    def from_entries(entries: Sequence[Sequence[tuple[Expression, Expression]]]) -> "ACStructure":
        n = len(entries)
        rows = []
        for row in entries:
            if len(row) != n:
                raise ValueError("entry table must be square")
            rows.append(tuple(ACSEntry(lin, anti) for lin, anti in row))
        return ACStructure(n, tuple(rows))

    def entry(self, i: int, k: int) -> ACSEntry:
        return self.entries[i][k]

    # -- pointwise action ---------------------------------------------------

    def apply(self, point: Sequence[complex], u: Sequence[complex]) -> list[complex]:
        if len(u) != self.n:
            raise ValueError("tangent vector dimension mismatch")
        zs = [complex(p) for p in point]
        out = []
        for i in range(self.n):
            v = 0j
            for k in range(self.n):
                e = self.entries[i][k]
                if not e.lin.is_zero:
                    v += e.lin.eval(zs) * u[k]
                if not e.anti.is_zero:
                    v += e.anti.eval(zs) * u[k].conjugate()
            out.append(v)
        return out

    def real_matrix(self, point: Sequence[complex]) -> np.ndarray:
        """The structure at `point` as a real 2n x 2n matrix in the frame
        (d/dx_1, d/dy_1, ..., d/dx_n, d/dy_n)."""
        n = self.n
        M = np.zeros((2 * n, 2 * n))
        zs = [complex(p) for p in point]
        for i in range(n):
            for k in range(n):
                e = self.entries[i][k]
                L = e.lin.eval(zs)
                A = e.anti.eval(zs)
                s, t = L + A, L - A
                M[2 * i, 2 * k] = s.real
                M[2 * i, 2 * k + 1] = -t.imag
                M[2 * i + 1, 2 * k] = s.imag
                M[2 * i + 1, 2 * k + 1] = t.real
        return M

    def real_matrix_jets(self, point: Sequence[float], order: int) -> list[list]:
        """Real matrix entries as jets of the given order at a real point."""
        n = self.n
        zs, zbs = numeric.complex_coordinate_jets(point, order)
        M = [[None] * (2 * n) for _ in range(2 * n)]
        for i in range(n):
            for k in range(n):
                e = self.entries[i][k]
                L = e.lin.eval_generic(zs, zbs)
                A = e.anti.eval_generic(zs, zbs)
                L = numeric.as_jet(L, 2 * n, order)
                A = numeric.as_jet(A, 2 * n, order)
                s, t = L + A, L - A
                M[2 * i][2 * k] = s.real_part()
                M[2 * i][2 * k + 1] = -t.imag_part()
                M[2 * i + 1][2 * k] = s.imag_part()
                M[2 * i + 1][2 * k + 1] = t.real_part()
        return M


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class InvolutionReport:
    ok: bool
    residuals: tuple[tuple[int, int, ACSEntry], ...]  # entries of J^2 + Id


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness_point: Optional[tuple[complex, ...]] = None
    residual: float = 0.0
    detail: str = ""


def check_involution(J: ACStructure) -> InvolutionReport:
    """Exact test of J*J = -Id in the pair-entry composition algebra."""
    n = J.n
    bad = []
    for i in range(n):
        for k in range(n):
            acc_lin = Expression.zero(n)
            acc_anti = Expression.zero(n)
            for j in range(n):
                c = J.entries[i][j].compose(J.entries[j][k])
                acc_lin = acc_lin + c.lin
                acc_anti = acc_anti + c.anti
            if i == k:
                acc_lin = acc_lin + Expression.one(n)
            if not (acc_lin.is_zero and acc_anti.is_zero):
                bad.append((i, k, ACSEntry(acc_lin, acc_anti)))
    return InvolutionReport(not bad, tuple(bad))


def _position_exprs(n: int) -> list[Expression]:
    return [Expression.z(n, k) for k in range(n)]


def weak_line_check(J: ACStructure, rng_seed: int = 0) -> CheckResult:
    """Radial directions go to i times themselves: as exact identities,
    lin(p).p = i p and anti(p).conj(p) = 0."""
    n = J.n
    zs = _position_exprs(n)
    zbs = [z.conj() for z in zs]
    residuals: list[Expression] = []
    for i in range(n):
        r1 = Expression.zero(n)
        r2 = Expression.zero(n)
        for k in range(n):
            r1 = r1 + J.entries[i][k].lin * zs[k]
            r2 = r2 + J.entries[i][k].anti * zbs[k]
        r1 = r1 - Expression.i(n) * zs[i]
        residuals.extend([r1, r2])
    if all(r.is_zero for r in residuals):
        return CheckResult(True)
    return _sampled_witness(J, residuals, rng_seed, "weak line identity fails")


def line_check(J: ACStructure, rng_seed: int = 0) -> CheckResult:
    """Weak line condition plus: every column of (lin - i Id) and of anti
    lies in the complex span of the position vector, tested as vanishing
    of all 2x2 minors against the position vector."""
    weak = weak_line_check(J, rng_seed)
    if not weak.ok:
        return CheckResult(False, weak.witness_point, weak.residual,
                           "weak line condition fails")
    n = J.n
    zs = _position_exprs(n)
    residuals = []
    for k in range(n):
        cols = []
        for part in ("lin", "anti"):
            col = []
            for i in range(n):
                e = getattr(J.entries[i][k], part)
                if part == "lin" and i == k:
                    e = e - Expression.i(n)
                col.append(e)
            cols.append(col)
        for col in cols:
            for i in range(n):
                for i2 in range(i + 1, n):
                    residuals.append(col[i] * zs[i2] - col[i2] * zs[i])
    if all(r.is_zero for r in residuals):
        return CheckResult(True)
    return _sampled_witness(J, residuals, rng_seed, "span minor does not vanish")


def _sampled_witness(
    J: ACStructure, residuals: list[Expression], seed: int, detail: str
) -> CheckResult:
    rng = np.random.default_rng(seed or 7)
    worst = (0.0, None)
    for _ in range(32):
        p = tuple(complex(a, b) for a, b in rng.uniform(-1, 1, (J.n, 2)))
        r = max(abs(e.eval(p)) for e in residuals)
        if r > worst[0]:
            worst = (r, p)
    return CheckResult(False, worst[1], worst[0], detail)


# ---------------------------------------------------------------------------
# Nijenhuis tensor


@dataclass(frozen=True)
class FrameVector:
    """Constant complexified vector field sum hol_k d/dz_k + anti_k d/dzbar_k.

    A real tangent vector with complex components u corresponds to
    hol = u, anti = conj(u).
    """

    hol: tuple[GaussianRational, ...]
    anti: tuple[GaussianRational, ...]
    name: str = ""

    @staticmethod
    def real(u: Sequence[GaussianRational], name: str = "") -> "FrameVector":
        return FrameVector(tuple(u), tuple(c.conj() for c in u), name)

    @staticmethod
    def dx(n: int, k: int) -> "FrameVector":
        u = [ZERO] * n
        u[k] = ONE
        return FrameVector.real(u, f"dx{k + 1}")

    @staticmethod
    def dy(n: int, k: int) -> "FrameVector":
        u = [ZERO] * n
        u[k] = I
        return FrameVector.real(u, f"dy{k + 1}")

    @staticmethod
    def dzbar(n: int, k: int) -> "FrameVector":
        hol = [ZERO] * n
        anti = [ZERO] * n
        anti[k] = ONE
        return FrameVector(tuple(hol), tuple(anti), f"dzbar{k + 1}")

    def as_real_vector(self) -> np.ndarray:
        """Real 2n-vector; only meaningful when anti = conj(hol)."""
        out = []
        for c in self.hol:
            v = complex(c)
            out.extend([v.real, v.imag])
        return np.array(out)


@dataclass(frozen=True)
class NijenhuisValue:
    point: tuple[complex, ...]
    X: FrameVector
    Y: FrameVector
    value: tuple[complex, ...]       # d/dz-components
    anti_value: tuple[complex, ...]  # d/dzbar-components


Field = tuple[list[Expression], list[Expression]]


def _const_field(J: ACStructure, X: FrameVector) -> Field:
    n = J.n
    S = [Expression.const(n, c.re, c.im) for c in X.hol]
    T = [Expression.const(n, c.re, c.im) for c in X.anti]
    return S, T


def _j_field(J: ACStructure, f: Field) -> Field:
    S, T = f
    n = J.n
    S2, T2 = [], []
    for i in range(n):
        s = Expression.zero(n)
        t = Expression.zero(n)
        for k in range(n):
            e = J.entries[i][k]
            s = s + e.lin * S[k] + e.anti * T[k]
            t = t + e.anti.conj() * S[k] + e.lin.conj() * T[k]
        S2.append(s)
        T2.append(t)
    return S2, T2


def _apply_field(f: Field, g: Expression) -> Expression:
    S, T = f
    n = g.n
    out = Expression.zero(n)
    for k in range(n):
        if not S[k].is_zero:
            out = out + S[k] * g.wirtinger(k, False)
        if not T[k].is_zero:
            out = out + T[k] * g.wirtinger(k, True)
    return out


def _bracket(f: Field, g: Field) -> Field:
    Sf, Tf = f
    Sg, Tg = g
    S = [_apply_field(f, Sg[i]) - _apply_field(g, Sf[i]) for i in range(len(Sf))]
    T = [_apply_field(f, Tg[i]) - _apply_field(g, Tf[i]) for i in range(len(Tf))]
    return S, T


def nijenhuis_symbolic(J: ACStructure, X: FrameVector, Y: FrameVector) -> Field:
    """N(X,Y) = [JX,JY] - [X,Y] - J[JX,Y] - J[X,JY] for constant frames,
    as expression coefficients over (d/dz_i, d/dzbar_i)."""
    fX = _const_field(J, X)
    fY = _const_field(J, Y)
    JX = _j_field(J, fX)
    JY = _j_field(J, fY)
    b1 = _bracket(JX, JY)
    b2 = _bracket(fX, fY)
    b3 = _j_field(J, _bracket(JX, fY))
    b4 = _j_field(J, _bracket(fX, JY))
    n = J.n
    S = [b1[0][i] - b2[0][i] - b3[0][i] - b4[0][i] for i in range(n)]
    T = [b1[1][i] - b2[1][i] - b3[1][i] - b4[1][i] for i in range(n)]
    return S, T


def nijenhuis(
    J: ACStructure,
    point: Sequence[complex],
    X: FrameVector,
    Y: FrameVector,
    method: str = "symbolic",
) -> NijenhuisValue:
    pt = tuple(complex(p) for p in point)
    if method == "symbolic":
        S, T = nijenhuis_symbolic(J, X, Y)
        val = tuple(e.eval(pt) for e in S)
        aval = tuple(e.eval(pt) for e in T)
    elif method == "jet":
        val = nijenhuis_jet(J, pt, X, Y)
        aval = tuple(v.conjugate() for v in val)
    else:
        raise ValueError(f"unknown nijenhuis method: {method}")
    return NijenhuisValue(pt, X, Y, val, aval)


def nijenhuis_jet(
    J: ACStructure, point: Sequence[complex], X: FrameVector, Y: FrameVector
) -> tuple[complex, ...]:
    """Jet-based N(X,Y) at a point for real constant frames X, Y."""
    n = J.n
    preal = []
    for p in point:
        preal.extend([complex(p).real, complex(p).imag])
    M = J.real_matrix_jets(preal, 1)
    Xv = X.as_real_vector()
    Yv = Y.as_real_vector()
    dim = 2 * n

    def col_field(v):
        return [sum(M[i][k] * v[k] for k in range(dim)) for i in range(dim)]

    JX = col_field(Xv)
    JY = col_field(Yv)
    M0 = np.array([[M[i][k].value for k in range(dim)] for i in range(dim)])
    JX0 = np.array([j.value for j in JX])
    JY0 = np.array([j.value for j in JY])

    def d(jet, k):
        return jet.partial_index(k)

    # [JX, JY]_i = sum_k JX_k d_k JY_i - JY_k d_k JX_i
    b1 = np.array(
        [
            sum(JX0[k] * d(JY[i], k) - JY0[k] * d(JX[i], k) for k in range(dim))
            for i in range(dim)
        ]
    )
    # [JX, Y] = -(Y . grad) JX ; [X, JY] = (X . grad) JY  (constant X, Y)
    b3 = np.array(
        [-sum(Yv[k] * d(JX[i], k) for k in range(dim)) for i in range(dim)]
    )
    b4 = np.array(
        [sum(Xv[k] * d(JY[i], k) for k in range(dim)) for i in range(dim)]
    )
    Nreal = b1 - M0 @ b3 - M0 @ b4
    return tuple(
        complex(Nreal[2 * i], Nreal[2 * i + 1]) for i in range(n)
    )


# ---------------------------------------------------------------------------
# Taylor-relation obstruction at the origin (n = 2)


class NotStandardAtOrigin(ValueError):
    pass


@dataclass(frozen=True)
class ObstructionRelation:
    label: str
    degree: int
    value: RadicalComplex
    ok: bool


@dataclass(frozen=True)
class ObstructionReport:
    relations: tuple[ObstructionRelation, ...]
    implied_nijenhuis: tuple[RadicalComplex, RadicalComplex]
    ok: bool


def _taylor_coeff(e: Expression, mono: ConjMonomial) -> RadicalComplex:
    return e.taylor(mono.degree).get(mono, RadicalComplex())


def obstruction_relations(J: ACStructure) -> ObstructionReport:
    """First-order relations on the anti parts forced by a smooth extension
    across the exceptional divisor, assuming J standard at the origin;
    their failure obstructs the blow-up, and all of them together force
    N(d/dzbar_1, d/dzbar_2) = 0 at the origin."""
    if J.n != 2:
        raise ValueError("obstruction relations are formulated for n = 2")
    icoef = RadicalComplex.from_gaussian(I)
    for i in range(2):
        for k in range(2):
            e = J.entries[i][k]
            want = icoef if i == k else RadicalComplex()
            t0_lin = e.lin.taylor(0).get(ConjMonomial.unit(2), RadicalComplex())
            t0_anti = e.anti.taylor(0).get(ConjMonomial.unit(2), RadicalComplex())
            if t0_lin != want or not t0_anti.is_zero:
                raise NotStandardAtOrigin(
                    "structure is not standard at the origin; frame "
                    "normalization is out of scope"
                )
    zbar1 = ConjMonomial.of(2, 0, 0, 1)
    zbar2 = ConjMonomial.of(2, 1, 0, 1)
    names = {"a2": (0, 0), "b2": (0, 1), "c2": (1, 0), "d2": (1, 1)}
    order = [
        ("c2", "zbar1", 1),
        ("d2", "zbar1", 2),
        ("a2", "zbar1", 2),
        ("c2", "zbar2", 2),
        ("b2", "zbar1", 3),
        ("d2", "zbar2", 3),
        ("a2", "zbar2", 3),
        ("b2", "zbar2", 4),
    ]
    coeffs = {}
    rels = []
    for name, var, deg in order:
        i, k = names[name]
        mono = zbar1 if var == "zbar1" else zbar2
        val = _taylor_coeff(J.entries[i][k].anti, mono)
        coeffs[(name, var)] = val
        rels.append(
            ObstructionRelation(f"({name})_{var} = 0", deg, val, val.is_zero)
        )
    two_i = RadicalComplex.from_gaussian(GaussianRational.of(0, 2))
    implied = (
        two_i * (coeffs[("a2", "zbar2")] - coeffs[("b2", "zbar1")]),
        two_i * (coeffs[("c2", "zbar2")] - coeffs[("d2", "zbar1")]),
    )
    return ObstructionReport(tuple(rels), implied, all(r.ok for r in rels))
