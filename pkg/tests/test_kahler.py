import math

import numpy as np
import pytest

from acblowup import kahler, numeric
from acblowup.acs import ACStructure
from acblowup.blowup import extension_test, transform
from acblowup.expr import Expression
from acblowup.kahler import (
    AntiGSInstance,
    anti_gs,
    ddbar_formula_check,
    fubini_study_limit_residual,
    gtilde_case_bounds,
    omega_assembly,
    profile_build,
    pullback_standard_form,
    random_anti_gs_instance,
    structure_j_field,
)


# ---------------------------------------------------------------------------
# the radial profile


def test_profile_boundary_values():
    prof = profile_build(0.01, 0.5)
    assert abs(prof.eta - 0.01 * math.exp(2.0)) < 1e-15
    assert abs(prof.g(prof.delta) + 100.0) < 1e-9
    assert abs(prof.g(prof.eta)) < 1e-11
    assert prof.slack <= 1.5
    assert abs(prof.slack - 10 / (4 * math.sqrt(3))) < 1e-12


def test_profile_ode_residual_dense_grid():
    prof = profile_build(0.01, 0.5)
    xs = np.linspace(prof.delta, prof.eta, 10_000)
    res = max(abs(x * prof.g_d(x, 1) + prof.g_d(x, 0) - prof.eps / x) for x in xs)
    assert res < 1e-12


def test_profile_is_log_below_delta_and_flat_above_eta():
    prof = profile_build(0.01, 0.4)
    for x in (1e-4, 5e-3, prof.delta):
        assert abs(prof.f(x) - math.log(x)) < 1e-14
    for x in (prof.eta, 2 * prof.eta, 10 * prof.eta):
        assert prof.gtilde(x) == 0.0
    # quadrature continuity across the pieces
    a = prof.f(prof.eta)
    b = prof.f(prof.eta * 1.5)
    assert abs(a - b) < 1e-10


def test_profile_gtilde_matches_g_in_middle():
    prof = profile_build(0.01, 0.5)
    for x in np.linspace(2 * prof.delta, prof.eta / 2, 50):
        assert abs(prof.gtilde(x) - prof.g(x)) < 1e-13 * max(1, abs(prof.g(x)))
        scale = max(1, abs(prof.g_d(x, 1)))
        assert abs(prof.gtilde(x, 1) - prof.g_d(x, 1)) < 1e-12 * scale


def test_profile_derivatives_by_finite_differences():
    prof = profile_build(0.01, 0.5)
    h = 1e-7
    for x in (0.013, 0.024, 0.05, 0.068):
        fd = (prof.gtilde(x + h) - prof.gtilde(x - h)) / (2 * h)
        assert abs(fd - prof.gtilde(x, 1)) < 1e-4 * max(1, abs(fd))
        fd2 = (prof.gtilde(x + h, 1) - prof.gtilde(x - h, 1)) / (2 * h)
        assert abs(fd2 - prof.gtilde(x, 2)) < 1e-3 * max(1, abs(fd2))


def test_profile_parameter_validation():
    with pytest.raises(ValueError):
        profile_build(0.01, 1.2)
    with pytest.raises(ValueError):
        profile_build(0.5, 0.5)
    with pytest.raises(ValueError):
        profile_build(0.01, 0.9)  # eta/2 < 2 delta
    with pytest.raises(ValueError):
        profile_build(0.01, 0.5, bump_slack=1.0)


# ---------------------------------------------------------------------------
# case bounds


def test_case_bounds():
    prof = profile_build(0.01, 0.5)
    rep = gtilde_case_bounds(prof)
    assert rep.ok
    assert rep.middle_identity_residual <= 1e-12
    by_name = {c.name: c for c in rep.cases}
    eps, log2 = 0.5, math.log(2)
    assert by_name["middle"].sup_x_combo <= eps + 1e-12
    assert by_name["low"].bound_value == pytest.approx(
        prof.slack * (8 + eps + 4 * eps * log2), rel=1e-12)
    assert by_name["high"].bound_value == pytest.approx(
        prof.slack * eps * (1 + 4 * log2), rel=1e-12)
    # the published high-case constant is smaller than the re-derived one
    assert by_name["high"].printed_value < by_name["high"].bound_value


def test_case_bounds_other_parameters():
    for delta, eps in ((0.005, 0.3), (0.02, 0.6), (0.01, 0.25)):
        rep = gtilde_case_bounds(profile_build(delta, eps))
        assert rep.ok, (delta, eps)


# ---------------------------------------------------------------------------
# the closed i d'd'' formula


def linear_profile(t):
    return [t, 1.0, 0.0, 0.0, 0.0]


def test_ddbar_linear_profile_hand_formula():
    # f(t) = t: i d'd'' F = i[(1+|w|^2) dz^dzb + zb w dz^dwb + z wb dw^dzb
    #                        + |z|^2 dw^dwb]
    form = numeric.ddbar_form(kahler.potential_jet_fn(linear_profile))
    for (x, y, u, v) in ([0.3, -0.2, 0.5, 0.1], [0.9, 0.4, -0.7, 0.2]):
        z, w = complex(x, y), complex(u, v)
        got = form.at([x, y, u, v])
        want = numeric.wedge_complex_to_real(
            1j * (1 + abs(w) ** 2),
            1j * z.conjugate() * w,
            1j * z * w.conjugate(),
            1j * abs(z) ** 2,
        )
        assert max(abs(a - b) for a, b in zip(got, want)) < 1e-13


PROFILES = [
    ("t", linear_profile),
    ("t^2", lambda t: [t * t, 2 * t, 2.0, 0.0, 0.0]),
    ("log", lambda t: [math.log(t), 1 / t, -1 / t ** 2, 2 / t ** 3, -6 / t ** 4]),
    ("sin", lambda t: [math.sin(t), math.cos(t), -math.sin(t), -math.cos(t),
                       math.sin(t)]),
    ("cutoff", None),  # replaced by the built profile below
]


def test_ddbar_formula_five_profiles():
    prof = profile_build(0.01, 0.5)
    rng = np.random.default_rng(17)
    points = [
        [rng.uniform(0.1, 0.8) * s for s in (1, -1, 1, -1)]
        for _ in range(20)
    ]
    for name, derivs in PROFILES:
        if derivs is None:
            derivs = lambda t: prof.f_derivs(t, 4)
        res = ddbar_formula_check(derivs, points)
        assert res < 1e-8, name


def test_fubini_study_restriction():
    ws = [0j, 0.5 + 0.25j, -1.2 + 0.7j, 2.0 - 1.0j, 0.1j,
          1.0 + 0j, -0.3 - 0.4j, 3.0 + 0j, 0.8 - 0.2j, -2.0 + 1.5j]
    assert fubini_study_limit_residual(ws) < 1e-6


def test_ddbar_constant_profile_is_zero():
    form = numeric.ddbar_form(
        kahler.potential_jet_fn(lambda t: [1.0, 0.0, 0.0, 0.0, 0.0])
    )
    assert np.max(np.abs(form.at([0.4, 0.1, -0.2, 0.3]))) < 1e-15


# ---------------------------------------------------------------------------
# the anti-invariant component formula


def test_anti_invariant_component_closed_formula(structures):
    # i(d'd''F - J d'd''F) = 2 c1 [P(dx^du - dy^dv) + Q(dx^dv + dy^du)
    #                              + (P^2+Q^2) du^dv],
    # c1 = f''|z|^2(1+|w|^2)^2 + f'(1+|w|^2), B2 = P + iQ
    b2 = Expression.abs2(2, 0) ** 2 + Expression.z(2, 1).scale(
        __import__("acblowup.rational", fromlist=["I"]).I
    )
    i_ = Expression.i(2)
    zero = Expression.zero(2)
    J = ACStructure.from_entries(
        [[(i_, zero), (zero, b2)], [(zero, zero), (i_, zero)]]
    )
    jf = structure_j_field(J)
    prof = profile_build(0.01, 0.5)
    derivs = lambda t: prof.f_derivs(t, 3)
    form = numeric.ddbar_form(kahler.potential_jet_fn(derivs))
    anti2 = numeric.anti_invariant_part(form, jf)
    for (x, y, u, v) in ([0.25, -0.1, 0.4, 0.2], [0.5, 0.3, -0.6, 0.1],
                         [0.09, 0.02, 0.3, -0.2]):
        p = [x, y, u, v]
        z, w = complex(x, y), complex(u, v)
        got = 2 * anti2.at(p)  # lemma's left side is alpha - J alpha
        b2v = b2.eval((z, w))
        P, Q = b2v.real, b2v.imag
        t = abs(z) ** 2 * (1 + abs(w) ** 2)
        d = derivs(t)
        c1 = d[2] * abs(z) ** 2 * (1 + abs(w) ** 2) ** 2 + d[1] * (1 + abs(w) ** 2)
        want = np.array([
            0.0, 2 * c1 * P, 2 * c1 * Q, 2 * c1 * Q, -2 * c1 * P,
            2 * c1 * (P * P + Q * Q),
        ])
        scale = max(1.0, np.max(np.abs(want)))
        assert np.max(np.abs(got - want)) < 1e-9 * scale


def test_anti_invariant_standard_vanishes():
    std = ACStructure.standard(2)
    form = numeric.ddbar_form(kahler.potential_jet_fn(linear_profile))
    anti = numeric.anti_invariant_part(form, structure_j_field(std))
    assert np.max(np.abs(anti.at([0.3, 0.2, -0.1, 0.4]))) < 1e-13


# ---------------------------------------------------------------------------
# anti-invariant Gram-Schmidt


def test_anti_gs_zero_anti_parts_pass_through():
    d = 4
    G = np.eye(d)
    P = np.zeros((d, d))
    V = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [1.0, 1.0, 1.0, 0]])
    inst = AntiGSInstance(V, G, P)
    out = anti_gs(inst)
    assert np.max(np.abs(out - V)) == 0.0


def test_anti_gs_two_vector_formula():
    # with omega1^- != 0: omega2' = omega2 - (<omega2^-, omega1^->/
    # <omega1^-, omega1^->) omega1, and the anti parts become orthogonal
    G = np.eye(4)
    P = np.diag([1.0, 1.0, 0.0, 0.0])
    V = np.array([[1.0, 0.5, 1.0, 0.0], [0.5, 1.0, 0.0, 1.0]])
    inst = AntiGSInstance(V, G, P)
    out = anti_gs(inst)
    a1 = inst.anti(V[0])
    coef = inst.inner(inst.anti(V[1]), a1) / inst.inner(a1, a1)
    want = V[1] - coef * V[0]
    assert np.max(np.abs(out[1] - want)) < 1e-14
    assert abs(inst.inner(inst.anti(out[1]), a1)) < 1e-14


def brute_force_check(inst, out, tol=1e-10):
    s = out.shape[0]
    anti = np.array([inst.anti(v) for v in out])
    gram = anti @ inst.gram @ anti.T
    off = gram - np.diag(np.diag(gram))
    return float(np.max(np.abs(off))), np.linalg.matrix_rank(
        np.vstack([inst.vectors, out])
    ) == s


def test_anti_gs_random_instances():
    rng = np.random.default_rng(123)
    for trial in range(50):
        d = int(rng.integers(2, 9))
        s = int(rng.integers(2, d + 1))
        k = int(rng.integers(1, d))
        inst = random_anti_gs_instance(rng, s, d, k)
        out = anti_gs(inst)
        off, span_ok = brute_force_check(inst, out)
        scale = float(np.max(np.abs(out @ inst.gram @ out.T)))
        assert off < 1e-10 * max(1.0, scale), trial
        assert span_ok, trial


def test_anti_gs_dependent_inputs_rejected():
    G = np.eye(3)
    P = np.diag([1.0, 0, 0])
    V = np.array([[1.0, 0, 0], [2.0, 0, 0]])
    with pytest.raises(ValueError, match="dependent"):
        anti_gs(AntiGSInstance(V, G, P))


def test_anti_gs_instance_validation():
    G = np.eye(3)
    bad_P = np.array([[1.0, 1.0, 0], [0, 0, 0], [0, 0, 0]])
    with pytest.raises(ValueError):
        AntiGSInstance(np.eye(3), G, bad_P @ bad_P + 0.5)


# ---------------------------------------------------------------------------
# assembled form diagnostics


def test_omega_standard_without_profile():
    std = ACStructure.standard(2)
    omega, rep = omega_assembly(std, None, seed=5, n_positivity=100)
    assert rep.positivity.min_ratio > 0
    assert rep.fit.ok and rep.fit.n_used == 0  # anti part vanishes
    assert rep.anti_invariant_residual < 1e-12
    assert rep.closedness_residual < 1e-12


def test_omega_line_example_pipeline(structures):
    ext = extension_test(transform(structures["example3"], 0), probe=False)
    prof = profile_build(1e-2, 0.3)
    omega, rep = omega_assembly(ext.extended, prof, seed=7, n_positivity=300)
    assert rep.closedness_residual < 1e-7
    assert rep.positivity.min_ratio > 0
    assert rep.fit.slope >= 0.9
    assert rep.support_confined
    assert rep.anti_invariant_residual < 1e-10
    # the measured negativity of the cut-off annulus is recorded
    assert rep.annulus_min_ratio < 0


def test_pullback_form_closed_and_degenerate_on_divisor():
    form = pullback_standard_form()
    for p in ([0.4, -0.1, 0.2, 0.3], [0.05, 0.02, 0.6, -0.1]):
        assert numeric.d_residual(form, p) < 1e-12
