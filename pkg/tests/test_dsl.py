import random

import pytest

from acblowup.dsl import (
    ParseError,
    format_expression,
    parse_expression,
    parse_structure,
    print_structure,
)
from acblowup.expr import Expression
from acblowup.rational import GaussianRational


# ---------------------------------------------------------------------------
# expression parsing


def test_parse_entry_examples():
    # the D entry of the radial example
    e = parse_expression("i*(1+abs2(z)^2)", 2)
    want = Expression.i(2) * (Expression.one(2) + Expression.abs2(2, 0) ** 2)
    assert e == want
    e2 = parse_expression("abs2(z)*sqrt(2+abs2(z)^2)", 2)
    p = (0.4 - 0.3j, 0.1 + 0.2j)
    r = abs(p[0]) ** 2
    assert abs(e2.eval(p) - r * (2 + r * r) ** 0.5) < 1e-13
    assert parse_expression("i", 2) == Expression.i(2)
    e3 = parse_expression("-2*i*(z1 - conj(z1))", 2)
    want3 = (Expression.z(2, 0) - Expression.zbar(2, 0)).scale(
        GaussianRational.of(0, -2)
    )
    assert e3 == want3


def test_abs2_desugars():
    assert parse_expression("abs2(z)", 2) == \
        Expression.z(2, 0) * Expression.zbar(2, 0)
    e = parse_expression("abs2(z + i*w)", 2)
    p = (0.3 + 0.1j, -0.2 + 0.4j)
    v = p[0] + 1j * p[1]
    assert abs(e.eval(p) - abs(v) ** 2) < 1e-14


def test_rationals_and_power():
    e = parse_expression("3/2*z^3", 2)
    p = (0.5 - 0.1j, 0.0)
    assert abs(e.eval(p) - 1.5 * p[0] ** 3) < 1e-15
    with pytest.raises(ParseError):
        parse_expression("z^w", 2)
    with pytest.raises(ParseError):
        parse_expression("1/0", 2)


def test_variable_names_by_dimension():
    assert parse_expression("z1*w", 2) == parse_expression("z*z2", 2)
    assert parse_expression("z3", 3) == Expression.z(3, 2)
    with pytest.raises(ParseError, match="unknown identifier"):
        parse_expression("w", 3)
    assert parse_expression("z", 1) == Expression.z(1, 0)


def test_sqrt_argument_validation():
    with pytest.raises(ParseError, match="radial"):
        parse_expression("sqrt(2 + z)", 2)
    with pytest.raises(ParseError, match="positive constant"):
        parse_expression("sqrt(abs2(z))", 2)
    with pytest.raises(ParseError, match="nonnegative"):
        parse_expression("sqrt(2 - abs2(z))", 2)
    with pytest.raises(ParseError, match="nested"):
        parse_expression("sqrt(2 + sqrt(2)*abs2(z))", 2)
    # a perfect-square constant radicand folds away entirely
    assert parse_expression("sqrt(4)", 2) == Expression.const(2, 2)


def test_parse_error_position():
    try:
        parse_expression("z + $", 2)
    except ParseError as exc:
        assert exc.line == 1 and exc.col == 5
    else:
        raise AssertionError("expected a parse error")


def test_trailing_input_rejected():
    with pytest.raises(ParseError, match="trailing"):
        parse_expression("z z", 2)


# ---------------------------------------------------------------------------
# printing


def test_format_round_trips_pointwise():
    rng = random.Random(71)
    from oracles import random_expression

    for _ in range(40):
        e = random_expression(rng, 2, depth=3)
        try:
            text = format_expression(e)
        except ValueError:
            continue  # reciprocal scalars are not in the surface grammar
        back = parse_expression(text, 2)
        assert back == e, text


def test_format_zero_and_signs():
    assert format_expression(Expression.zero(2)) == "0"
    e = -Expression.z(2, 0) + Expression.i(2) * Expression.z(2, 1)
    text = format_expression(e)
    assert parse_expression(text, 2) == e


# ---------------------------------------------------------------------------
# structure files


GOOD = """
# demo fixture
name: demo
dim: 2
expect involution pass
expect weak_line fail
J[1][1] = (i, 0)
J[1][2] = (0, 0)
J[2][1] = (0, -2*i*(z1 - conj(z1)))
J[2][2] = (i, 0)
"""


def test_parse_structure_roundtrip():
    doc = parse_structure(GOOD)
    assert doc.name == "demo" and doc.n == 2
    assert doc.expectations() == {"involution": "pass", "weak_line": "fail"}
    text = print_structure(doc)
    again = parse_structure(text)
    assert again == doc
    assert print_structure(again) == text


def test_parse_structure_errors():
    with pytest.raises(ParseError, match="missing name"):
        parse_structure("dim: 2\n" + "\n".join(
            f"J[{i}][{k}] = (i, 0)" if i == k else f"J[{i}][{k}] = (0, 0)"
            for i in (1, 2) for k in (1, 2)))
    with pytest.raises(ParseError, match="missing entry"):
        parse_structure("name: x\ndim: 2\nJ[1][1] = (i, 0)")
    with pytest.raises(ParseError, match="out of range"):
        parse_structure("name: x\ndim: 1\nJ[1][2] = (i, 0)\nJ[1][1] = (i, 0)")
    with pytest.raises(ParseError, match="unknown expectation"):
        parse_structure("name: x\ndim: 1\nexpect foo bar\nJ[1][1] = (i, 0)")


def test_fixture_roundtrip(corpus):
    for name, doc in corpus.items():
        text = print_structure(doc)
        again = parse_structure(text)
        assert again.entries == doc.entries, name
        assert again.n == doc.n and again.expect == doc.expect, name
        assert print_structure(again) == text, name


# ---------------------------------------------------------------------------
# fuzzed documents


def random_document(rng: random.Random, idx: int) -> str:
    from oracles import random_expression

    n = rng.choice([1, 2, 2, 3])
    lines = [f"name: fuzz{idx}", f"dim: {n}"]
    if rng.random() < 0.5:
        lines.append("expect involution pass")
    for i in range(n):
        for k in range(n):
            while True:
                lin = random_expression(rng, n, depth=2)
                anti = random_expression(rng, n, depth=1)
                try:
                    a = format_expression(lin)
                    b = format_expression(anti)
                    break
                except ValueError:
                    continue
            lines.append(f"J[{i + 1}][{k + 1}] = ({a}, {b})")
    return "\n".join(lines) + "\n"


def test_fuzzed_document_roundtrip():
    rng = random.Random(2718)
    for idx in range(100):
        text = random_document(rng, idx)
        doc = parse_structure(text)
        printed = print_structure(doc)
        again = parse_structure(printed)
        assert again == doc, text
        assert print_structure(again) == printed, text
