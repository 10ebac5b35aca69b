"""Desk-scale verification of the almost-Kaehler correction machinery: the
radial profile g and its ODE, the cut-off profile with case-by-case bounds,
the potential f and the corrected form, the closed i d'd'' formula, the
Fubini-Study restriction, and anti-invariant Gram-Schmidt on surrogates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from . import numeric
from .acs import ACStructure
from .expr import Expression
from .numeric import FormField


# ---------------------------------------------------------------------------
# quintic smoothstep bumps

_S1_MAX = 15.0 / 8.0          # sup |s'| of the quintic smoothstep
_S2_MAX = 10.0 / math.sqrt(3) # sup |s''|
_S3_MAX = 60.0                # sup |s'''| (attained at the endpoints)


def _smoothstep(t: float, order: int = 0) -> float:
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3 on [0,1], clamped outside;
    order in {0,1,2,3} selects the derivative."""
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0 if order == 0 else 0.0
    if order == 0:
        return ((6 * t - 15) * t + 10) * t ** 3
    if order == 1:
        return ((30 * t - 60) * t + 30) * t ** 2
    if order == 2:
        return ((120 * t - 180) * t + 60) * t
    if order == 3:
        return (360 * t - 360) * t + 60
    raise ValueError("bump derivatives available up to order 3")


@dataclass(frozen=True)
class Bump:
    """Smooth cut-down: 1 for x <= lo, 0 for x >= hi."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __call__(self, x: float, order: int = 0) -> float:
        t = (x - self.lo) / self.width
        v = _smoothstep(t, order)
        if order == 0:
            return 1.0 - v
        return -v / self.width ** order

    def sup_d1(self) -> float:
        return _S1_MAX / self.width

    def sup_d2(self) -> float:
        return _S2_MAX / self.width ** 2


# ---------------------------------------------------------------------------
# the radial profile


@dataclass(frozen=True)
class KahlerProfile:
    """Radial profile data: g on [delta, eta], the cut-off combination
    gtilde = nu (g + gamma (1/x - g)), and the potential f with
    f = log on (0, delta] and f' = 0 above eta."""

    delta: float
    eps: float
    eta: float
    gamma: Bump
    nu: Bump
    slack: float

    # -- closed forms --------------------------------------------------------

    def g(self, x: float) -> float:
        return (self.eps * math.log(x) - 1.0 - self.eps * math.log(self.delta)) / x

    def g_d(self, x: float, order: int) -> float:
        """Derivatives of g; order in {0,1,2,3}."""
        e = self.eps
        L = e * math.log(x / self.delta) - 1.0  # = x g(x)
        if order == 0:
            return L / x
        if order == 1:
            return (e - L) / x ** 2
        if order == 2:
            return (2.0 * L - 3.0 * e) / x ** 3
        if order == 3:
            return (11.0 * e - 6.0 * L) / x ** 4
        raise ValueError("g derivatives available up to order 3")

    def gtilde(self, x: float, order: int = 0) -> float:
        """gtilde and its derivatives up to order 3."""
        if x <= 0:
            raise ValueError("profile argument must be positive")
        if x >= self.eta:
            return 0.0
        if x <= self.delta:
            # nu = gamma = 1 there: gtilde = 1/x
            sign = (-1) ** order
            return sign * math.factorial(order) / x ** (order + 1)

        def inv(k):  # d^k (1/x)
            return (-1) ** k * math.factorial(k) / x ** (k + 1)

        g = [self.g_d(x, k) for k in range(order + 1)]
        ga = [self.gamma(x, k) for k in range(order + 1)]
        nu = [self.nu(x, k) for k in range(order + 1)]
        # h = g + gamma*(1/x - g); gtilde = nu*h, by the Leibniz rule
        d = [inv(k) - g[k] for k in range(order + 1)]
        h = [
            g[k] + sum(math.comb(k, m) * ga[m] * d[k - m] for m in range(k + 1))
            for k in range(order + 1)
        ]
        return sum(
            math.comb(order, m) * nu[m] * h[order - m] for m in range(order + 1)
        )

    def ode_combo(self, x: float) -> float:
        """x gtilde'(x) + gtilde(x)."""
        return x * self.gtilde(x, 1) + self.gtilde(x, 0)

    def ode_combo_d(self, x: float) -> float:
        """(x gtilde' + gtilde)' = 2 gtilde' + x gtilde''."""
        return 2.0 * self.gtilde(x, 1) + x * self.gtilde(x, 2)

    def f(self, x: float) -> float:
        """f(x) = log(delta) + integral_delta^x gtilde."""
        if x <= 0:
            raise ValueError("profile argument must be positive")
        if x <= self.delta:
            return math.log(x)
        breaks = [b for b in (2 * self.delta, self.eta / 2, self.eta)
                  if self.delta < b < x]
        val, _ = quad(lambda y: self.gtilde(y), self.delta, x,
                      points=breaks or None, epsabs=1e-12, limit=200)
        return math.log(self.delta) + val

    def f_derivs(self, t: float, upto: int = 4) -> list[float]:
        """[f, f', f'', ...](t) with f' = gtilde."""
        out = [self.f(t)]
        for k in range(upto):
            out.append(self.gtilde(t, k))
        return out


def profile_build(delta: float, eps: float, bump_slack: float = 1.5,
                  grid_n: int = 10_000) -> KahlerProfile:
    """Build and verify the profile; raises on parameter or invariant
    violations.  The achieved bump-derivative constants exceed the ideal
    trapezoidal ones by the recorded slack factor (quintic smoothstep:
    10/(4 sqrt(3)) ~ 1.4434), which scales all case bounds downstream."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if not (0.0 < delta < 0.1):
        raise ValueError("delta must be a small positive number")
    eta = delta * math.exp(1.0 / eps)
    if not (2 * delta < eta / 2):
        raise ValueError("need 2*delta < eta/2, i.e. eps < 1/log(4)")
    gamma = Bump(delta, 2 * delta)
    nu = Bump(eta / 2, eta)
    slack = max(
        gamma.sup_d1() / (2.0 / delta),
        gamma.sup_d2() / (4.0 / delta ** 2),
        nu.sup_d1() / (4.0 / eta),
        nu.sup_d2() / (16.0 / eta ** 2),
    )
    if slack > bump_slack:
        raise ValueError(
            f"bump slack {slack:.4f} exceeds the allowed {bump_slack}"
        )
    prof = KahlerProfile(delta, eps, eta, gamma, nu, slack)
    # boundary values in closed form
    if abs(prof.g(delta) + 1.0 / delta) > 1e-9 / delta:
        raise AssertionError("g(delta) != -1/delta")
    if abs(prof.g(eta)) > 1e-12 / eta:
        raise AssertionError("g(eta) != 0")
    # ODE residual on a dense grid
    xs = np.linspace(delta, eta, grid_n)
    res = max(
        abs(x * prof.g_d(x, 1) + prof.g_d(x, 0) - eps / x) for x in xs
    )
    if res > 1e-12:
        raise AssertionError(f"ODE residual {res:.3e} exceeds 1e-12")
    return prof


# ---------------------------------------------------------------------------
# case bounds for the cut-off profile


@dataclass(frozen=True)
class CaseBound:
    name: str
    interval: tuple[float, float]
    sup_x_combo: float          # sup x |x gtilde' + gtilde|
    sup_x2_combo_d: float       # sup x^2 |(x gtilde' + gtilde)'|
    bound_value: float          # re-derived constant * slack
    bound_deriv: float
    printed_value: float        # the published constants, informational
    printed_deriv: float
    ok: bool


@dataclass(frozen=True)
class CaseBoundsReport:
    cases: tuple[CaseBound, ...]
    middle_identity_residual: float
    ok: bool


def gtilde_case_bounds(prof: KahlerProfile, grid_n: int = 4000) -> CaseBoundsReport:
    """Measure sup x|x gtilde' + gtilde| and sup x^2|(x gtilde' + gtilde)'|
    per case and compare with the re-derived explicit constants scaled by
    the recorded bump slack."""
    eps = prof.eps
    log2 = math.log(2.0)
    cases_def = [
        ("low", (prof.delta / 4, 2 * prof.delta),
         8.0 + eps + 4.0 * eps * log2,
         32.0 + 9.0 * eps + 16.0 * eps * log2,
         8.0 + eps + 4.0 * eps * log2,
         32.0 + 9.0 * eps + eps * log2),
        ("middle", (2 * prof.delta, prof.eta / 2),
         eps, eps, eps, eps),
        ("high", (prof.eta / 2, prof.eta),
         eps * (1.0 + 4.0 * log2),
         9.0 * eps + 16.0 * eps * log2,
         eps * (1.0 + log2),
         9.0 * eps + 16.0 * eps * log2),
    ]
    out = []
    for name, (lo, hi), cval, cder, pval, pder in cases_def:
        xs = np.linspace(lo, hi, grid_n)
        m_val = max(abs(x * prof.ode_combo(x)) for x in xs)
        m_der = max(abs(x * x * prof.ode_combo_d(x)) for x in xs)
        slack = 1.0 if name == "middle" else prof.slack
        bound_v = slack * cval + 1e-12
        bound_d = slack * cder + 1e-12
        out.append(
            CaseBound(name, (lo, hi), m_val, m_der, bound_v, bound_d,
                      pval, pder, m_val <= bound_v and m_der <= bound_d)
        )
    mid = np.linspace(2 * prof.delta, prof.eta / 2, grid_n)
    mid_res = max(abs(x * prof.ode_combo(x) - eps) for x in mid)
    return CaseBoundsReport(tuple(out), mid_res,
                            all(c.ok for c in out) and mid_res <= 1e-12)


# ---------------------------------------------------------------------------
# the i d'd'' formula and its Fubini-Study restriction


def radial_argument_expr() -> Expression:
    """t = |z|^2 (1 + |w|^2) on the first blow-up chart of C^2."""
    one = Expression.one(2)
    return Expression.abs2(2, 0) * (one + Expression.abs2(2, 1))


def potential_jet_fn(f_derivs: Callable[[float], Sequence[float]]):
    """Jet evaluator of F = f(|z|^2 (1 + |w|^2)) from scalar derivatives."""
    t_expr = radial_argument_expr()

    def F(point, order):
        t = numeric.jet_eval(t_expr, point, order)
        d = f_derivs(t.value.real)
        return numeric.compose_scalar(t, [complex(v) for v in d[: order + 1]])

    return F


def ddbar_closed_formula(point: Sequence[float],
                         f_derivs: Callable[[float], Sequence[float]]) -> list:
    """Real-basis coefficients of the displayed i d'd'' formula, with f'' and
    f' evaluated at |z|^2 (1 + |w|^2)."""
    z = complex(point[0], point[1])
    w = complex(point[2], point[3])
    zb, wb = z.conjugate(), w.conjugate()
    a2z = abs(z) ** 2
    s = 1.0 + abs(w) ** 2
    t = a2z * s
    d = f_derivs(t)
    f1, f2 = d[1], d[2]
    c_zz = f2 * a2z * s * s + f1 * s
    c_zw = f2 * a2z * s * zb * w + f1 * zb * w
    c_wz = f2 * a2z * s * z * wb + f1 * z * wb
    c_ww = f2 * a2z ** 2 * abs(w) ** 2 + f1 * a2z
    return numeric.wedge_complex_to_real(
        1j * c_zz, 1j * c_zw, 1j * c_wz, 1j * c_ww
    )


def ddbar_formula_check(
    f_derivs: Callable[[float], Sequence[float]],
    points: Sequence[Sequence[float]],
) -> float:
    """Max coefficient residual between the jet-computed i d'd'' F and the
    closed formula over the given points."""
    form = numeric.ddbar_form(potential_jet_fn(f_derivs))
    worst = 0.0
    for p in points:
        got = form.at(p)
        want = np.array(ddbar_closed_formula(p, f_derivs), dtype=complex)
        worst = max(worst, float(np.max(np.abs(got - want))))
    return worst


def fubini_study_limit_residual(w_values: Sequence[complex],
                                z_small: float = 1e-4) -> float:
    """For f = log, the i dw^dwb coefficient of i d'd'' F equals
    1/(1+|w|^2)^2 away from z = 0; returns the worst deviation."""

    def log_derivs(t: float) -> list[float]:
        return [math.log(t), 1 / t, -1 / t ** 2, 2 / t ** 3, -6 / t ** 4]

    form = numeric.ddbar_form(potential_jet_fn(log_derivs))
    worst = 0.0
    for w in w_values:
        p = [z_small, 0.0, w.real, w.imag]
        coeffs = form.at(p)
        # du^dv slot equals 2 * (i dw^dwb coefficient)
        got = coeffs[5].real / 2.0
        want = 1.0 / (1.0 + abs(w) ** 2) ** 2
        worst = max(worst, abs(got - want))
    return worst


# ---------------------------------------------------------------------------
# anti-invariant Gram-Schmidt on finite-dimensional surrogates


@dataclass(frozen=True)
class AntiGSInstance:
    """Vectors in an inner-product space with a distinguished anti-invariant
    component map; the map must be an orthogonal projector so invariant and
    anti-invariant parts pair to zero."""

    vectors: np.ndarray   # (s, d) rows
    gram: np.ndarray      # (d, d) SPD
    anti_proj: np.ndarray # (d, d)

    def __post_init__(self):
        G, P = self.gram, self.anti_proj
        if np.max(np.abs(P @ P - P)) > 1e-8:
            raise ValueError("anti-invariant map is not idempotent")
        if np.max(np.abs(P.T @ G - G @ P)) > 1e-8:
            raise ValueError("anti-invariant map is not self-adjoint")

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ self.gram @ v)

    def anti(self, u: np.ndarray) -> np.ndarray:
        return self.anti_proj @ u


def anti_gs(inst: AntiGSInstance, tol: float = 1e-12) -> np.ndarray:
    """Gram-Schmidt on the anti-invariant components: the output spans the
    same space and has pairwise orthogonal anti parts; vectors whose anti
    part vanishes pass through unchanged."""
    vs = np.array(inst.vectors, dtype=float)
    s = vs.shape[0]
    if np.linalg.matrix_rank(vs) < s:
        raise ValueError("input vectors are linearly dependent")
    out = []
    for k in range(s):
        v = vs[k].copy()
        vk_anti = inst.anti(vs[k])
        for prev in out:
            pa = inst.anti(prev)
            denom = inst.inner(pa, pa)
            if denom <= tol:
                continue
            v = v - (inst.inner(vk_anti, pa) / denom) * prev
        out.append(v)
    return np.array(out)


def random_anti_gs_instance(rng: np.random.Generator, s: int, d: int,
                            anti_dim: Optional[int] = None) -> AntiGSInstance:
    """Seeded random surrogate with a G-self-adjoint projector."""
    if anti_dim is None:
        anti_dim = max(1, d // 2)
    A = rng.standard_normal((d, d))
    G = A.T @ A + d * np.eye(d)
    B = rng.standard_normal((d, anti_dim))
    # G-orthonormalize the columns of B
    U = []
    for i in range(anti_dim):
        u = B[:, i].copy()
        for q in U:
            u = u - (q @ G @ u) * q
        u = u / math.sqrt(u @ G @ u)
        U.append(u)
    U = np.array(U).T
    P = U @ U.T @ G
    V = rng.standard_normal((s, d))
    return AntiGSInstance(V, G, P)


# ---------------------------------------------------------------------------
# assembled corrected form on the blow-up chart


def pullback_standard_form() -> FormField:
    """Pullback to the first blow-up chart of the standard Kaehler form
    (i/2) sum dzeta^dzetabar of C^2: exact expression coefficients."""
    from fractions import Fraction

    half_i = Expression.const(2, 0, Fraction(1, 2))
    one = Expression.one(2)
    w = Expression.z(2, 1)
    wb = Expression.zbar(2, 1)
    z = Expression.z(2, 0)
    zb = Expression.zbar(2, 0)
    c11 = half_i * (one + w * wb)
    c12 = half_i * w * zb
    c21 = half_i * z * wb
    c22 = half_i * z * zb

    def hfn(point, order):
        return [
            [numeric.jet_eval(c11, point, order), numeric.jet_eval(c12, point, order)],
            [numeric.jet_eval(c21, point, order), numeric.jet_eval(c22, point, order)],
        ]

    return numeric.two_form_from_complex_matrix(hfn)


def add_forms(a: FormField, b: FormField) -> FormField:
    def fn(point, order):
        ca = a.coeffs(point, order)
        cb = b.coeffs(point, order)
        return [x + y for x, y in zip(ca, cb)]

    return FormField(2, fn)


def structure_j_field(J: ACStructure):
    """Real-matrix field of a structure, as floats or jets."""

    def jf(point, order):
        if order == 0:
            z = complex(point[0], point[1])
            w = complex(point[2], point[3])
            return J.real_matrix((z, w)).tolist()
        return J.real_matrix_jets(list(point), order)

    return jf


@dataclass(frozen=True)
class OmegaReport:
    closedness_residual: float
    positivity: numeric.PositivityReport
    fit: numeric.FitReport
    support_max_abs_z: float
    support_confined: bool
    anti_invariant_residual: float
    annulus_min_ratio: float


def omega_assembly(
    extended: ACStructure,
    prof: Optional[KahlerProfile],
    seed: int = 0,
    n_positivity: int = 1000,
    fit_radii: tuple[float, float] = (1e-4, 1e-2),
    n_fit: int = 25,
) -> tuple[FormField, OmegaReport]:
    """Omega = pullback(omega_0) + i d'd'' F on the first blow-up chart with
    the given extended structure; returns the form and its diagnostics."""
    pi_omega = pullback_standard_form()
    if prof is not None:
        dd = numeric.ddbar_form(potential_jet_fn(lambda t: prof.f_derivs(t, 3)))
        omega = add_forms(pi_omega, dd)
    else:
        omega = pi_omega
    jf = structure_j_field(extended)
    omega_minus = numeric.anti_invariant_part(omega, jf)

    # closedness at moderate radii (all three profile cases are crossed)
    rng = np.random.default_rng(seed)
    closed_pts = []
    for _ in range(20):
        r = rng.uniform(0.06, 0.45)
        th = rng.uniform(0, 2 * math.pi)
        wu, wv = rng.uniform(-0.5, 0.5, 2)
        closed_pts.append([r * math.cos(th), r * math.sin(th), wu, wv])
    closed_res = max(numeric.d_residual(omega, p) for p in closed_pts)

    # positivity over seeded low-discrepancy samples in the near-divisor
    # region (the same radius window as the fit, where f is exactly log);
    # the cut-off annulus delta < t < eta is reported separately because
    # the potential slope turns negative there and the flat chart form
    # has no compact-manifold bulk to dominate it
    r_box = fit_radii[1]
    pos_pts = numeric.halton_points(
        n_positivity, 4, [-r_box, -r_box, -0.6, -0.6], [r_box, r_box, 0.6, 0.6]
    )
    pos = numeric.positivity_sample(omega, jf, pos_pts, seed=seed)
    annulus_min = math.inf
    if prof is not None:
        ann_pts = []
        for _ in range(120):
            t = rng.uniform(prof.delta, prof.eta)
            th = rng.uniform(0, 2 * math.pi)
            wu, wv = rng.uniform(-0.4, 0.4, 2)
            r = math.sqrt(t / (1 + wu * wu + wv * wv))
            ann_pts.append([r * math.cos(th), r * math.sin(th), wu, wv])
        annulus_min = numeric.positivity_sample(
            omega, jf, ann_pts, seed=seed + 1
        ).min_ratio

    # |Omega^-| against |z| over the requested radius window
    radii = np.geomspace(fit_radii[0], fit_radii[1], n_fit)
    w_samples = [0.2 + 0.1j, -0.3 + 0.05j, 0.1 - 0.25j]
    rs, vals = [], []
    for r in radii:
        th = rng.uniform(0, 2 * math.pi)
        z = r * complex(math.cos(th), math.sin(th))
        for w in w_samples:
            rs.append(r)
            vals.append(
                numeric.form_norm(omega_minus, [z.real, z.imag, w.real, w.imag])
            )
    if max(vals, default=0.0) < 1e-300:
        # identically vanishing anti part: the |z|-bound holds trivially
        fit = numeric.FitReport(math.inf, 0.0, 0, True)
    else:
        fit = numeric.bound_fit(rs, vals)

    # support of Omega^- and confinement of the d'd'' correction: the
    # pullback part keeps an anti component wherever B2 lives, so the
    # t < eta confinement applies to the correction term alone
    sup_z = 0.0
    confined = True
    scale = max(vals) if vals else 1.0
    probe_pts = list(closed_pts) + [
        [r, 0.0, w_samples[0].real, w_samples[0].imag]
        for r in np.linspace(0.05, 0.8, 16)
    ]
    for p in probe_pts:
        if numeric.form_norm(omega_minus, p) > 1e-10 * max(scale, 1.0):
            sup_z = max(sup_z, math.hypot(p[0], p[1]))
    if prof is not None:
        dd_minus = numeric.anti_invariant_part(dd, jf)
        for p in probe_pts:
            if numeric.form_norm(dd_minus, p) > 1e-10:
                t = (p[0] ** 2 + p[1] ** 2) * (1 + p[2] ** 2 + p[3] ** 2)
                if t >= prof.eta * (1 + 1e-9):
                    confined = False

    # anti-invariance sanity: J(omega^-) + omega^- = 0 pointwise
    anti_res = 0.0
    for p in closed_pts[:5]:
        c = omega_minus.at(p)
        Jm = jf(p, 0)
        jc = numeric.j_act_on_two_form(list(c), Jm)
        anti_res = max(anti_res,
                       float(max(abs(a + b) for a, b in zip(c, jc))))
    return omega, OmegaReport(closed_res, pos, fit, sup_z, confined, anti_res,
                              annulus_min)
