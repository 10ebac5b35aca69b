import json

from acblowup.cli import main, fixture_path
from acblowup.dsl import parse_structure


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_fixture_passes(capsys):
    code, out, _ = run(capsys, "check", "example2", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["checks"]["weak_line"]["verdict"] == "pass"
    assert rep["checks"]["extension"]["verdict"] == "not_extendable"
    assert rep["ok"] is True


def test_check_expectation_mismatch(tmp_path, capsys):
    bad = fixture_path("example1").read_text().replace(
        "expect extension extendable", "expect extension not_extendable"
    )
    f = tmp_path / "bad.acs"
    f.write_text(bad)
    code, out, _ = run(capsys, "check", str(f))
    assert code == 1
    rep = json.loads(out)
    assert rep["expectations"]["extension"]["ok"] is False


def test_check_involution_failure_rejected(tmp_path, capsys):
    f = tmp_path / "noninv.acs"
    f.write_text(
        "name: noninv\ndim: 1\nJ[1][1] = (2*i, 0)\n"
    )
    code, _, err = run(capsys, "check", str(f))
    assert code == 1
    assert "involution" in err
    # --no-verify lets it load and report the failure instead
    code, out, _ = run(capsys, "check", str(f), "--no-verify")
    assert code == 1
    assert json.loads(out)["checks"]["involution"]["verdict"] == "fail"


def test_parse_error_exit_code(tmp_path, capsys):
    f = tmp_path / "broken.acs"
    f.write_text("name: broken\ndim: 2\nJ[1][1] = (i +, 0)\n")
    code, _, err = run(capsys, "check", str(f))
    assert code == 2
    assert "error" in err


def test_report_determinism(capsys):
    args = ("check", "example3", "--seed", "7", "--format", "json")
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    args = ("corpus", "--seed", "3")
    _, out3, _ = run(capsys, *args)
    _, out4, _ = run(capsys, *args)
    assert out3 == out4


def test_corpus_passes(capsys):
    code, out, _ = run(capsys, "corpus")
    assert code == 0
    rep = json.loads(out)
    assert rep["ok"] is True
    assert len(rep["fixtures"]) >= 8


def test_blowup_emits_parseable_structure(capsys):
    code, out, _ = run(capsys, "blowup", "example3", "--chart", "1")
    assert code == 0
    doc = parse_structure(out)
    assert doc.n == 2
    J = doc.to_structure()
    from acblowup.acs import check_involution

    assert check_involution(J).ok


def test_blowup_refuses_obstructed(capsys):
    code, out, _ = run(capsys, "blowup", "example2", "--chart", "1")
    assert code == 1
    rep = json.loads(out)
    assert rep["verdict"] == "not_extendable"
    assert "conj(z)^4" in rep["witness"]


def test_nijenhuis_zero_at_origin(capsys):
    code, out, _ = run(
        capsys, "nijenhuis", "example3", "--at", "0", "0", "0", "0",
        "--frame", "dx", "du",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["symbolic"] == [[0.0, 0.0], [0.0, 0.0]]
    assert rep["agreement"] < 1e-10


def test_lift_ok_and_rejected(capsys):
    code, out, _ = run(capsys, "lift", "--map", "z + w; w")
    assert code == 0
    rep = json.loads(out)
    assert rep["ok"] is True
    code, out, _ = run(capsys, "lift", "--map", "conj(z); w")
    assert code == 1
    assert "rejected" in json.loads(out)


def test_probe_expression(capsys):
    code, out, _ = run(capsys, "probe", "--expr=-conj(z)^2", "--pole", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "continuous_only"
    assert rep["first_bad_order"] == 1


def test_probe_structure_entry(capsys):
    code, out, _ = run(
        capsys, "probe", "--file", "example2", "--chart", "1",
        "--entry", "2", "2", "--part", "anti",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "continuous_only"
    assert rep["first_bad_order"] == 3


def test_kahler_verify(capsys):
    code, out, _ = run(
        capsys, "kahler-verify", "--delta", "0.01", "--eps", "0.5",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["profile"]["ode_ok"] is True
    assert rep["case_bounds"]["ok"] is True
    assert rep["ddbar_formula_residual"] < 1e-8


def test_usage_error_exit_code(capsys):
    assert main(["check"]) == 2
    assert main(["nonsense"]) == 2
