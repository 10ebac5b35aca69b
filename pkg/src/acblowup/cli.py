"""Command-line surface: subcommands running each analysis over structure
definition files, emitting deterministic reports.

Exit codes: 0 all asserted checks pass, 1 check failure, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import blowup, kahler, numeric, report
from .acs import (
    ACStructure,
    FrameVector,
    NotStandardAtOrigin,
    check_involution,
    line_check,
    nijenhuis,
    obstruction_relations,
    weak_line_check,
)
from .dsl import (
    ParseError,
    StructureFile,
    parse_expression,
    parse_structure,
    print_structure,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class CheckFailure(Exception):
    pass


def _read_input(path: str) -> tuple[str, str]:
    p = Path(path)
    if not p.exists():
        fx = fixture_path(path)
        if fx is not None:
            p = fx
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}", 0, 0)
    return text, report.digest_text(text)


def fixture_path(name: str) -> Path | None:
    base = resources.files("acblowup").joinpath("fixtures")
    cand = base.joinpath(name if name.endswith(".acs") else name + ".acs")
    if cand.is_file():
        return Path(str(cand))
    return None


def fixture_names() -> list[str]:
    base = resources.files("acblowup").joinpath("fixtures")
    return sorted(p.name for p in base.iterdir() if p.name.endswith(".acs"))


def load_structure(path: str, verify: bool = True) -> tuple[StructureFile, ACStructure, str]:
    text, digest = _read_input(path)
    doc = parse_structure(text)
    J = doc.to_structure()
    if verify:
        inv = check_involution(J)
        if not inv.ok:
            raise CheckFailure(
                f"{doc.name}: structure fails the involution check "
                f"(J*J != -Id); rerun with --no-verify to inspect"
            )
    return doc, J, digest


# ---------------------------------------------------------------------------
# check


def _verdict_name(v) -> str:
    return {
        blowup.Extendable: "extendable",
        blowup.NotExtendable: "not_extendable",
        blowup.UnknownExtendability: "unknown",
    }[type(v)]


def run_check(doc: StructureFile, J: ACStructure, seed: int, tol: float) -> dict:
    rng = np.random.default_rng(seed)
    checks: dict = {}
    inv = check_involution(J)
    checks["involution"] = {"verdict": "pass" if inv.ok else "fail"}
    if not inv.ok:
        checks["involution"]["residual_entries"] = [
            [i + 1, k + 1] for i, k, _ in inv.residuals
        ]
    wl = weak_line_check(J)
    checks["weak_line"] = {"verdict": "pass" if wl.ok else "fail"}
    if not wl.ok and wl.witness_point:
        checks["weak_line"]["witness_point"] = list(wl.witness_point)
        checks["weak_line"]["residual"] = wl.residual
    ln = line_check(J)
    checks["line"] = {"verdict": "pass" if ln.ok else "fail"}
    charts = {}
    extend_overall = "extendable"
    for j in range(J.n):
        cs = blowup.transform(J, j)
        v = blowup.extension_test(cs)
        entry: dict = {"extension": _verdict_name(v)}
        if isinstance(v, blowup.Extendable):
            entry["extended_involution"] = "pass" if v.involution_ok else "fail"
        else:
            extend_overall = _verdict_name(v)
            mono, scal, coeff = v.witness
            entry["witness"] = {
                "position": [v.position[0] + 1, v.position[1] + 1, v.position[2]],
                "term": _term_text(J.n, mono, scal, coeff),
            }
            if v.probe is not None:
                entry["probe"] = {
                    "verdict": v.probe.verdict,
                    "first_bad_order": v.probe.first_bad_order,
                    "diverging": v.probe.diverging,
                }
        res = 0.0
        for _ in range(8):
            pt = [complex(a, b) for a, b in rng.uniform(-0.8, 0.8, (J.n, 2))]
            if abs(pt[j]) < 0.05:
                pt[j] += 0.3
            res = max(res, blowup.commutation_residual(J, cs, pt))
        entry["commutation_residual"] = res
        entry["commutation_ok"] = bool(res < tol)
        charts[str(j + 1)] = entry
    checks["charts"] = charts
    checks["extension"] = {"verdict": extend_overall}
    if J.n == 2:
        try:
            obs = obstruction_relations(J)
            checks["obstruction"] = {
                "relations": [
                    {"label": r.label, "value": str(r.value), "ok": r.ok}
                    for r in obs.relations
                ],
                "implied_nijenhuis_origin": [str(x) for x in obs.implied_nijenhuis],
                "ok": obs.ok,
            }
        except NotStandardAtOrigin:
            checks["obstruction"] = {"skipped": "structure not standard at 0"}
        nij0 = nijenhuis(J, (0, 0), FrameVector.dx(2, 0), FrameVector.dx(2, 1))
        mag = max(abs(v) for v in nij0.value)
        checks["nijenhuis_origin"] = {
            "value": list(nij0.value),
            "verdict": "zero" if mag < 1e-10 else "nonzero",
        }
    return checks


def _term_text(n, mono, scal, coeff) -> str:
    from .expr import Expression

    return str(Expression(n, [(mono, scal, coeff)]))


def _apply_expectations(doc: StructureFile, checks: dict) -> tuple[dict, bool]:
    got = {
        "involution": checks["involution"]["verdict"],
        "weak_line": checks["weak_line"]["verdict"],
        "line": checks["line"]["verdict"],
        "extension": checks["extension"]["verdict"],
    }
    if "nijenhuis_origin" in checks:
        got["nijenhuis_origin"] = checks["nijenhuis_origin"]["verdict"]
    table = {}
    ok = True
    for key, want in doc.expect:
        have = got.get(key, "n/a")
        match = have == want
        ok = ok and match
        table[key] = {"expected": want, "got": have, "ok": match}
    return table, ok


def cmd_check(args) -> int:
    doc, J, digest = load_structure(args.file, verify=not args.no_verify)
    rep = report.new_report(args.seed)
    rep["input"] = {"path": args.file, "digest": digest, "name": doc.name,
                    "dim": doc.n}
    checks = run_check(doc, J, args.seed, args.tol)
    rep["checks"] = checks
    table, expect_ok = _apply_expectations(doc, checks)
    if table:
        rep["expectations"] = table
    commut_ok = all(c["commutation_ok"] for c in checks["charts"].values())
    rep["ok"] = bool(
        checks["involution"]["verdict"] == "pass" and expect_ok and commut_ok
    )
    _emit(rep, args)
    return EXIT_OK if rep["ok"] else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# blowup


def cmd_blowup(args) -> int:
    doc, J, digest = load_structure(args.file, verify=not args.no_verify)
    j = args.chart - 1
    if not (0 <= j < J.n):
        print(f"error: chart must be in 1..{J.n}", file=sys.stderr)
        return EXIT_USAGE
    cs = blowup.transform(J, j)
    v = blowup.extension_test(cs)
    if not isinstance(v, blowup.Extendable):
        rep = report.new_report(args.seed)
        rep["input"] = {"path": args.file, "digest": digest, "name": doc.name}
        rep["verdict"] = _verdict_name(v)
        mono, scal, coeff = v.witness
        rep["witness"] = _term_text(J.n, mono, scal, coeff)
        _emit(rep, args)
        return EXIT_CHECK_FAILED
    E = v.extended
    out = StructureFile(
        f"{doc.name}_blowup_chart{args.chart}",
        E.n,
        tuple(
            tuple((E.entries[i][k].lin, E.entries[i][k].anti) for k in range(E.n))
            for i in range(E.n)
        ),
    )
    text = print_structure(out)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# nijenhuis


_FRAMES = {
    "dx": ("dx", 0), "dy": ("dy", 0), "du": ("dx", 1), "dv": ("dy", 1),
}


def _parse_frame(name: str, n: int) -> FrameVector:
    if n == 2 and name in _FRAMES:
        kind, k = _FRAMES[name]
        return getattr(FrameVector, kind)(n, k)
    for kind in ("dx", "dy", "dzbar"):
        if name.startswith(kind) and name[len(kind):].isdigit():
            k = int(name[len(kind):]) - 1
            if 0 <= k < n:
                return getattr(FrameVector, kind)(n, k)
    raise ParseError(f"unknown frame vector {name!r}", 0, 0)


def cmd_nijenhuis(args) -> int:
    doc, J, digest = load_structure(args.file, verify=not args.no_verify)
    coords = args.at
    if len(coords) != 2 * J.n:
        print(f"error: --at needs {2 * J.n} real coordinates", file=sys.stderr)
        return EXIT_USAGE
    point = tuple(
        complex(coords[2 * k], coords[2 * k + 1]) for k in range(J.n)
    )
    X = _parse_frame(args.frame[0], J.n)
    Y = _parse_frame(args.frame[1], J.n)
    sym = nijenhuis(J, point, X, Y, method="symbolic")
    jet = nijenhuis(J, point, X, Y, method="jet")
    dev = max(abs(a - b) for a, b in zip(sym.value, jet.value))
    rep = report.new_report(args.seed)
    rep["input"] = {"path": args.file, "digest": digest, "name": doc.name}
    rep["point"] = [c for c in point]
    rep["frame"] = [X.name, Y.name]
    rep["symbolic"] = list(sym.value)
    rep["jet"] = list(jet.value)
    rep["agreement"] = dev
    rep["ok"] = bool(dev < max(args.tol, 1e-8))
    _emit(rep, args)
    return EXIT_OK if rep["ok"] else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# lift


def cmd_lift(args) -> int:
    n = args.dim
    comps = [c.strip() for c in args.map.split(";")]
    if len(comps) != n:
        print(f"error: --map needs {n} ';'-separated components",
              file=sys.stderr)
        return EXIT_USAGE
    fs = [parse_expression(c, n) for c in comps]
    try:
        lm = blowup.lift_map(fs, args.source_chart - 1, args.target_chart - 1)
    except (blowup.NotComplexLinear, blowup.NotInvertibleDifferential, ValueError) as exc:
        rep = report.new_report(args.seed)
        rep["map"] = comps
        rep["rejected"] = str(exc)
        _emit(rep, args)
        return EXIT_CHECK_FAILED
    rep = report.new_report(args.seed)
    rep["map"] = comps
    rep["differential_at_0"] = [list(row) for row in lm.linear]
    samples = []
    rng = np.random.default_rng(args.seed)
    worst_ray = 0.0
    probes = []
    for _ in range(4):
        w = [complex(a, b) for a, b in rng.uniform(-0.8, 0.8, (n, 2))]
        w[lm.source_j] = 1.0
        try:
            act = lm.divisor_action(w)
        except ZeroDivisionError:
            continue
        dev = lm.ray_agreement(w)
        worst_ray = max(worst_ray, dev)
        samples.append({
            "direction": [c for c in w],
            "divisor_action": [c for c in act],
            "ray_deviation": dev,
        })
        for comp in range(n):
            if comp == lm.target_j:
                continue
            probes.append(lm.component_probe(w, comp).verdict)
    rep["samples"] = samples
    rep["lift_smooth_across_divisor"] = probes and all(
        p == "smooth" for p in probes
    )
    rep["component_probes"] = sorted(set(probes))
    rep["ok"] = bool(worst_ray < 1e-2)
    _emit(rep, args)
    return EXIT_OK if rep["ok"] else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# probe


def cmd_probe(args) -> int:
    rep = report.new_report(args.seed)
    max_order = max(1, min(args.order, 3))
    if args.expr:
        e = parse_expression(args.expr, args.dim)

        def f(z: complex) -> complex:
            pt = [blowup.DEFAULT_PROBE_W * (1 + 0.1 * k)
                  for k in range(args.dim)]
            pt[0] = z
            return e.eval(pt) / z ** args.pole

        pr = numeric.probe_divisor(f, max_order=max_order)
        rep["expr"] = args.expr
        rep["pole"] = args.pole
        rep["probe_order"] = max_order
    else:
        doc, J, digest = load_structure(args.file, verify=not args.no_verify)
        cs = blowup.transform(J, args.chart - 1)
        le = getattr(cs.entries[args.entry[0] - 1][args.entry[1] - 1], args.part)
        rep["input"] = {"path": args.file, "digest": digest, "name": doc.name}
        rep["entry"] = [args.entry[0], args.entry[1], args.part]
        rep["pole"] = le.pole
        if le.pole == 0:
            rep["verdict"] = "smooth"
            rep["note"] = "entry carries no 1/z factor"
            _emit(rep, args)
            return EXIT_OK
        from .blowup import _probe_entry

        pr = _probe_entry(le.num, J.n, args.chart - 1)
    rep["verdict"] = pr.verdict
    rep["diverging"] = pr.diverging
    rep["limit"] = pr.limit
    rep["first_bad_order"] = pr.first_bad_order
    rep["order_spreads"] = {str(k): v for k, v in pr.order_spreads.items()}
    _emit(rep, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# kahler-verify


def cmd_kahler_verify(args) -> int:
    rep = report.new_report(args.seed)
    rep["parameters"] = {"delta": args.delta, "eps": args.eps}
    prof = kahler.profile_build(args.delta, args.eps)
    xs = np.linspace(prof.delta, prof.eta, 10_000)
    ode = max(abs(x * prof.g_d(x, 1) + prof.g_d(x, 0) - prof.eps / x) for x in xs)
    rep["profile"] = {
        "eta": prof.eta,
        "bump_slack": prof.slack,
        "g_at_delta": prof.g(prof.delta),
        "g_at_eta": prof.g(prof.eta),
        "ode_residual": ode,
        "ode_ok": bool(ode < 1e-12),
    }
    cb = kahler.gtilde_case_bounds(prof)
    rep["case_bounds"] = {
        "middle_identity_residual": cb.middle_identity_residual,
        "cases": [
            {
                "name": c.name,
                "sup_x_combo": c.sup_x_combo,
                "bound_value": c.bound_value,
                "sup_x2_combo_deriv": c.sup_x2_combo_d,
                "bound_deriv": c.bound_deriv,
                "printed_value_constant": c.printed_value,
                "printed_deriv_constant": c.printed_deriv,
                "ok": c.ok,
            }
            for c in cb.cases
        ],
        "ok": cb.ok,
    }
    pts = [[0.3, -0.2, 0.5, 0.1], [0.7, 0.2, -0.3, 0.4], [0.45, -0.37, 0.21, -0.11]]
    dd = kahler.ddbar_formula_check(lambda t: prof.f_derivs(t, 4), pts)
    fs = kahler.fubini_study_limit_residual([0j, 0.5 + 0.25j, -1.2 + 0.7j])
    rep["ddbar_formula_residual"] = dd
    rep["fubini_study_residual"] = fs
    ok = bool(rep["profile"]["ode_ok"] and cb.ok and dd < 1e-8 and fs < 1e-6)
    if args.pipeline:
        _, J, _ = load_structure("example3", verify=False)
        ext = blowup.extension_test(blowup.transform(J, 0), probe=False)
        omega, orep = kahler.omega_assembly(
            ext.extended, prof, seed=args.seed, n_positivity=args.samples
        )
        rep["omega"] = {
            "closedness_residual": orep.closedness_residual,
            "positivity_min": orep.positivity.min_ratio,
            "fit_slope": orep.fit.slope,
            "fit_constant": orep.fit.constant,
            "support_max_abs_z": orep.support_max_abs_z,
            "correction_support_confined": orep.support_confined,
            "annulus_min_ratio": orep.annulus_min_ratio,
        }
        ok = ok and orep.closedness_residual < 1e-7 and \
            orep.positivity.min_ratio > 0 and orep.fit.slope >= 0.9
    rep["ok"] = ok
    _emit(rep, args)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# corpus


def cmd_corpus(args) -> int:
    if args.dir:
        paths = sorted(Path(args.dir).glob("*.acs"))
    else:
        paths = [fixture_path(n) for n in fixture_names()]
    rep = report.new_report(args.seed)
    results = {}
    all_ok = True
    for p in paths:
        doc, J, digest = load_structure(str(p), verify=False)
        checks = run_check(doc, J, args.seed, args.tol)
        table, expect_ok = _apply_expectations(doc, checks)
        ok = bool(expect_ok and checks["involution"]["verdict"] == "pass")
        all_ok = all_ok and ok
        results[doc.name] = {
            "digest": digest,
            "expectations": table,
            "ok": ok,
        }
    rep["fixtures"] = results
    rep["ok"] = all_ok
    _emit(rep, args)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# plumbing


def _emit(rep: dict, args) -> None:
    if args.format == "json":
        sys.stdout.write(report.render_json(rep))
    else:
        sys.stdout.write(report.render_text(rep))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--no-verify", action="store_true",
                   help="skip the involution check at load time")
    p.add_argument("--order", type=int, default=4,
                   help="jet order cap (diagnostic)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="acblowup",
        description="Verification engine for almost complex structures on "
                    "C^n and their blow-ups at a point",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="involution, line conditions, transform "
                                     "and extension for all charts")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("blowup", help="emit the extended structure on a chart")
    p.add_argument("file")
    p.add_argument("--chart", type=int, default=1)
    p.add_argument("-o", "--output")
    _add_common(p)
    p.set_defaults(fn=cmd_blowup)

    p = sub.add_parser("nijenhuis", help="Nijenhuis tensor at a point")
    p.add_argument("file")
    p.add_argument("--at", type=float, nargs="+", required=True,
                   help="real coordinates x1 y1 x2 y2 ...")
    p.add_argument("--frame", nargs=2, required=True,
                   help="two frame vectors, e.g. dx du")
    _add_common(p)
    p.set_defaults(fn=cmd_nijenhuis)

    p = sub.add_parser("lift", help="lift a map through blow-ups at 0")
    p.add_argument("--map", required=True,
                   help="';'-separated component expressions")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--source-chart", type=int, default=1)
    p.add_argument("--target-chart", type=int, default=1)
    _add_common(p)
    p.set_defaults(fn=cmd_lift)

    p = sub.add_parser("probe", help="divisor smoothness probe")
    p.add_argument("--expr", help="one-variable expression numerator")
    p.add_argument("--pole", type=int, default=1)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--file", help="probe a transformed entry of a structure")
    p.add_argument("--chart", type=int, default=1)
    p.add_argument("--entry", type=int, nargs=2, default=(2, 2))
    p.add_argument("--part", choices=("lin", "anti"), default="anti")
    _add_common(p)
    p.set_defaults(fn=cmd_probe)

    p = sub.add_parser("kahler-verify", help="profile and form checks")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--pipeline", action="store_true",
                   help="run the corrected-form pipeline on the example "
                        "line-condition fixture")
    p.add_argument("--samples", type=int, default=1000)
    _add_common(p)
    p.set_defaults(fn=cmd_kahler_verify)

    p = sub.add_parser("corpus", help="run every fixture against its "
                                      "expected verdicts")
    p.add_argument("dir", nargs="?", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_corpus)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, CheckFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ParseError) else EXIT_CHECK_FAILED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
