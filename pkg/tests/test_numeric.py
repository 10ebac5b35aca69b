import math
import random

import numpy as np
import pytest

from acblowup import numeric
from acblowup.acs import ACStructure
from acblowup.expr import Expression
from acblowup.dsl import parse_expression
from acblowup.numeric import (
    FormField,
    Jet,
    anti_invariant_part,
    bound_fit,
    d_residual,
    ddbar_form,
    dbar_function,
    exterior_d,
    finite_difference_partial,
    j_act_on_two_form,
    jet_eval,
    positivity_sample,
    probe_divisor,
    wedge_complex_to_real,
)

from oracles import random_expression


# ---------------------------------------------------------------------------
# jets


def test_jet_abs2_at_one():
    j = jet_eval(parse_expression("abs2(z)", 2), [1.0, 0.0, 0.0, 0.0], 2)
    assert abs(j.value - 1) < 1e-15
    assert abs(j.partial((1, 0, 0, 0)) - 2) < 1e-15
    assert abs(j.partial((0, 1, 0, 0))) < 1e-15
    assert abs(j.partial((2, 0, 0, 0)) - 2) < 1e-15


def test_jet_square_at_one():
    j = jet_eval(parse_expression("z^2", 2), [1.0, 0.0, 0.0, 0.0], 1)
    assert abs(j.partial((1, 0, 0, 0)) - 2) < 1e-15
    assert abs(j.partial((0, 1, 0, 0)) - 2j) < 1e-15


def test_jet_sqrt_at_origin():
    j = jet_eval(parse_expression("sqrt(2+abs2(z)^2)", 2), [0.0] * 4, 2)
    assert abs(j.value - math.sqrt(2)) < 1e-15
    for k in range(4):
        e = [0] * 4
        e[k] = 1
        assert abs(j.partial(tuple(e))) < 1e-15


def test_jet_vs_finite_differences_random():
    rng = random.Random(77)
    alphas = [(1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0), (0, 0, 2, 0),
              (2, 1, 0, 0), (1, 0, 1, 1)]
    checked = 0
    while checked < 100:
        e = random_expression(rng, 2, depth=2)
        p = [rng.uniform(-0.6, 0.6) for _ in range(4)]
        j = jet_eval(e, p, 3)

        def f(q):
            return e.eval([complex(q[0], q[1]), complex(q[2], q[3])])

        alpha = rng.choice(alphas)
        want = finite_difference_partial(f, p, alpha, 5e-3)
        got = j.partial(alpha)
        scale = max(1.0, abs(want))
        assert abs(got - want) < 1e-6 * scale
        checked += 1


def test_jet_product_chain_reciprocal():
    p = [0.4, -0.3, 0.2, 0.1]
    a = jet_eval(parse_expression("z^2*conj(w)", 2), p, 3)
    b = jet_eval(parse_expression("1 + abs2(z)", 2), p, 3)
    prod = a * b
    want = jet_eval(parse_expression("z^2*conj(w)*(1 + abs2(z))", 2), p, 3)
    for alpha, c in want.coef.items():
        assert abs(prod.coef.get(alpha, 0) - c) < 1e-13
    inv = b.reciprocal()
    ident = inv * b
    assert abs(ident.value - 1) < 1e-14
    for alpha, c in ident.coef.items():
        if sum(alpha):
            assert abs(c) < 1e-13
    s = b.sqrt()
    sq = s * s
    for alpha, c in b.coef.items():
        assert abs(sq.coef.get(alpha, 0) - c) < 1e-13


def test_jet_order_cap():
    with pytest.raises(ValueError, match="capped"):
        jet_eval(parse_expression("z", 2), [0.0] * 4, 5)


def test_jet_pole_error():
    e = parse_expression("z", 2)

    def f(zs, zbs):
        return (zs[0] * zbs[0]).reciprocal()

    with pytest.raises(ZeroDivisionError):
        jet_eval(f, [0.0] * 4, 2)


# ---------------------------------------------------------------------------
# ray probes


SMOOTH_CASES = [
    lambda z: z,
    lambda z: z ** 2,
    lambda z: z ** 4,
    lambda z: z.conjugate(),
    lambda z: z.conjugate() ** 3,
    lambda z: abs(z) ** 2,
    lambda z: abs(z) ** 2 * z,
    lambda z: 1 + 2j,
    lambda z: z * (1 + z + z.conjugate()),
    lambda z: (z + z.conjugate()) ** 2,
    lambda z: math.sqrt(2 + abs(z) ** 8),
    lambda z: math.sqrt(1 + abs(z) ** 2) * z,
    lambda z: z ** 2 * z.conjugate(),
    lambda z: 0.5 * z - 3j * z.conjugate() ** 2,
    lambda z: (1 + abs(z) ** 2) ** 3,
    lambda z: z ** 3 + z.conjugate() ** 3,
    lambda z: 1j * z * abs(z) ** 4,
    lambda z: (z - 2) * (z.conjugate() + 1),
    lambda z: z * z.conjugate() ** 2 + 0.25,
    lambda z: -z ** 2 + 1e-3 * z.conjugate(),
]


def test_probe_smooth_calibration():
    for k, f in enumerate(SMOOTH_CASES):
        rep = probe_divisor(f)
        assert rep.verdict == "smooth", k


def test_probe_fixture_verdicts():
    rep = probe_divisor(lambda z: -2j * (z - z.conjugate()) / z)
    assert rep.verdict == "singular" and rep.first_bad_order == 0
    rep = probe_divisor(lambda z: -z.conjugate() ** 2 / z)
    assert rep.verdict == "continuous_only"
    assert abs(rep.limit) < 1e-9
    rep = probe_divisor(
        lambda z: math.sqrt(2 + abs(z) ** 8) * z.conjugate() ** 4 / z
    )
    assert rep.verdict == "continuous_only" and rep.first_bad_order == 3


def test_probe_divergence():
    rep = probe_divisor(lambda z: 1 / z)
    assert rep.verdict == "singular" and rep.diverging


def test_probe_z_times_smooth():
    g = parse_expression("1 + z*conj(z) + 2*z", 1)
    rep = probe_divisor(lambda z: z * g.eval([z]))
    assert rep.verdict == "smooth"


# ---------------------------------------------------------------------------
# exterior calculus


def const_form(vals):
    return FormField(2, lambda p, order: [
        Jet.constant(v, 4, order) for v in vals
    ])


def test_d_of_constant_function():
    f = FormField(0, lambda p, order: [Jet.constant(3.7, 4, order)])
    d = exterior_d(f)
    assert np.max(np.abs(d.at([0.1, 0.2, 0.3, 0.4]))) == 0.0


def test_dbar_of_abs2():
    # d'' |z|^2 = z dzbar: on the real basis dzbar = dx - i dy
    F = lambda p, order: jet_eval(parse_expression("abs2(z)", 2), p, order)
    ob = dbar_function(F)
    p = [0.3, 0.4, 0.0, 0.0]
    c = ob.at(p)
    z = complex(0.3, 0.4)
    assert abs(c[0] - z) < 1e-14
    assert abs(c[1] - z * (-1j)) < 1e-14
    assert abs(c[2]) < 1e-14 and abs(c[3]) < 1e-14


def test_dd_zero_for_ddbar_forms():
    rng = random.Random(14)

    def f_derivs(t):
        # smooth but non-polynomial profile
        return [math.sin(t), math.cos(t), -math.sin(t), -math.cos(t), math.sin(t)]

    from acblowup.kahler import potential_jet_fn

    form = ddbar_form(potential_jet_fn(f_derivs))
    for _ in range(20):
        p = [rng.uniform(0.1, 0.8), rng.uniform(-0.8, -0.1),
             rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)]
        assert d_residual(form, p) < 1e-8


def test_dd_zero_random_two_forms():
    rng = random.Random(3)
    exprs = [random_expression(rng, 2, depth=2) for _ in range(6)]

    def fn(p, order):
        return [jet_eval(e, p, order) for e in exprs]

    form = FormField(2, fn)
    d = exterior_d(form)
    dd = exterior_d(d)
    for _ in range(20):
        p = [rng.uniform(-0.5, 0.5) for _ in range(4)]
        scale = max(1.0, np.max(np.abs(d.at(p))))
        assert np.max(np.abs(dd.at(p))) < 1e-8 * scale


# ---------------------------------------------------------------------------
# J action on forms


def jfield_of(J):
    from acblowup.kahler import structure_j_field

    return structure_j_field(J)


def test_j_involution_on_forms(structures):
    rng = random.Random(6)
    J = structures["example3"]
    jf = jfield_of(J)
    for _ in range(10):
        p = [rng.uniform(-0.6, 0.6) for _ in range(4)]
        c = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(6)]
        Jm = jf(p, 0)
        once = j_act_on_two_form(c, Jm)
        twice = j_act_on_two_form(once, Jm)
        assert max(abs(a - b) for a, b in zip(twice, c)) < 1e-12


def test_anti_projector_idempotent(structures):
    rng = random.Random(9)
    jf = jfield_of(structures["line_scaled"])
    exprs = [random_expression(rng, 2, depth=1) for _ in range(6)]
    form = FormField(2, lambda p, order: [jet_eval(e, p, order) for e in exprs])
    once = anti_invariant_part(form, jf)
    twice = anti_invariant_part(once, jf)
    for _ in range(8):
        p = [rng.uniform(-0.5, 0.5) for _ in range(4)]
        a, b = once.at(p), twice.at(p)
        assert np.max(np.abs(a - b)) < 1e-10
        # anti-invariance: J(result) = -result
        Jm = jf(p, 0)
        ja = j_act_on_two_form(list(a), Jm)
        assert max(abs(x + y) for x, y in zip(ja, a)) < 1e-10


def test_standard_j_kills_nothing_invariant():
    # with the standard structure every (1,1)-form is invariant:
    # anti part of the standard Kaehler form vanishes
    std = ACStructure.standard(2)
    jf = jfield_of(std)
    form = const_form([1.0, 0, 0, 0, 0, 1.0])  # dx^dy + du^dv
    anti = anti_invariant_part(form, jf)
    assert np.max(np.abs(anti.at([0.3, 0.1, -0.2, 0.4]))) < 1e-15


def test_dz_wedge_dwbar_invariant(structures):
    # dz^dwbar is invariant under any triangular chart structure
    jf = jfield_of(ACStructure.from_entries([
        [(Expression.i(2), Expression.zero(2)),
         (Expression.zero(2), parse_expression("z + 2*i*conj(w)", 2))],
        [(Expression.zero(2), Expression.zero(2)),
         (Expression.i(2), Expression.zero(2))],
    ]))
    coeffs = wedge_complex_to_real(0, 1.0, 0, 0)
    form = const_form(coeffs)
    anti = anti_invariant_part(form, jf)
    for p in ([0.2, -0.4, 0.5, 0.3], [0.7, 0.1, -0.3, -0.2]):
        assert np.max(np.abs(anti.at(p))) < 1e-13


# ---------------------------------------------------------------------------
# positivity and fits


def test_positivity_standard_kaehler():
    std = ACStructure.standard(2)
    form = const_form([1.0, 0, 0, 0, 0, 1.0])
    pts = numeric.halton_points(50, 4, [-1] * 4, [1] * 4)
    rep = positivity_sample(form, jfield_of(std), pts, seed=1)
    assert abs(rep.min_ratio - 1.0) < 1e-9


def test_positivity_degenerate_on_divisor_tangents():
    # the pullback form at a divisor point, sampled against w-plane vectors
    from acblowup.kahler import pullback_standard_form, structure_j_field

    form = pullback_standard_form()
    std = ACStructure.standard(2)
    p = [0.0, 0.0, 0.3, 0.2]
    c = form.at(p)
    M = np.zeros((4, 4), dtype=complex)
    for idx, (a, b) in enumerate(numeric.PAIRS2):
        M[a, b] = c[idx]
        M[b, a] = -c[idx]
    Jm = np.array(structure_j_field(std)(p, 0))
    v = np.array([0, 0, 1.0, 0])  # tangent to the divisor fiber direction
    ratio = float(np.real(v @ M @ (Jm @ v)))
    assert abs(ratio) < 1e-12


def test_bound_fit_exact_linear():
    rs = np.geomspace(1e-4, 1e-2, 30)
    rep = bound_fit(rs, 3.7 * rs)
    assert abs(rep.slope - 1.0) < 1e-9
    assert abs(rep.constant - 3.7) < 1e-6
    assert rep.ok


def test_bound_fit_constant_fails():
    rs = np.geomspace(1e-4, 1e-2, 30)
    rep = bound_fit(rs, np.full(30, 2.0))
    assert abs(rep.slope) < 1e-9
    assert not rep.ok


def test_bound_fit_span_error():
    with pytest.raises(ValueError, match="two decades"):
        bound_fit([1e-3, 2e-3], [1.0, 2.0])
