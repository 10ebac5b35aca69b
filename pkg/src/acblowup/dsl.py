"""Surface syntax: a small expression DSL for structure-definition files and
its canonical printer.

Grammar:
    expr     := ['-'] term (('+'|'-') term)*
    term     := factor ('*' factor)*
    factor   := atom ('^' nat)?
    atom     := rational | 'i' | var | 'conj(' expr ')' | 'abs2(' expr ')'
              | 'sqrt(' expr ')' | '(' expr ')'
    rational := nat ('/' nat)?

Variables are z, w for dimension 2 (z1..zn also accepted), z1..zn otherwise.
abs2(e) desugars to e*conj(e); sqrt is accepted only when its canonicalized
argument is a positive rational constant plus a radial polynomial with
nonnegative coefficients.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .expr import ConjMonomial, Expression, RadialPoly, SmoothScalar, SqrtArg
from .rational import GaussianRational


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),=\[\]]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | ident | op | eof
    text: str
    line: int
    col: int


def _tokenize(text: str, line0: int = 1) -> list[_Tok]:
    toks = []
    line = line0
    col = 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if not m or m.start() != i:
            raise ParseError(f"unexpected character {ch!r}", line, col)
        kind = m.lastgroup
        tok = m.group(kind)
        toks.append(_Tok(kind, tok, line, col))
        col += m.end() - i
        i = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


def var_names(n: int) -> list[str]:
    if n == 1:
        return ["z"]
    if n == 2:
        return ["z", "w"]
    return [f"z{k + 1}" for k in range(n)]


class _ExprParser:
    def __init__(self, toks: list[_Tok], n: int):
        self.toks = toks
        self.pos = 0
        self.n = n
        names = {f"z{k + 1}": k for k in range(n)}
        if n == 1:
            names["z"] = 0
        elif n == 2:
            names.update({"z": 0, "w": 1})
        self.vars = names

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # grammar ---------------------------------------------------------------

    def expr(self) -> Expression:
        neg = False
        if self.peek().text == "-":
            self.next()
            neg = True
        e = self.term()
        if neg:
            e = -e
        while self.peek().text in ("+", "-"):
            op = self.next().text
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> Expression:
        e = self.factor()
        while self.peek().text == "*":
            self.next()
            e = e * self.factor()
        return e

    def factor(self) -> Expression:
        e = self.atom()
        if self.peek().text == "^":
            self.next()
            t = self.next()
            if t.kind != "num":
                raise ParseError("exponent must be a natural number", t.line, t.col)
            e = e ** int(t.text)
        return e

    def atom(self) -> Expression:
        t = self.next()
        if t.kind == "num":
            p = int(t.text)
            if self.peek().text == "/":
                self.next()
                q = self.next()
                if q.kind != "num" or int(q.text) == 0:
                    raise ParseError("malformed rational", q.line, q.col)
                return Expression.const(self.n, Fraction(p, int(q.text)))
            return Expression.const(self.n, p)
        if t.kind == "ident":
            if t.text == "i":
                return Expression.i(self.n)
            if t.text in self.vars:
                return Expression.z(self.n, self.vars[t.text])
            if t.text in ("conj", "abs2", "sqrt"):
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                if t.text == "conj":
                    return inner.conj()
                if t.text == "abs2":
                    return inner * inner.conj()
                return self._sqrt(inner, t)
            raise ParseError(f"unknown identifier {t.text!r}", t.line, t.col)
        if t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {t.text!r}", t.line, t.col)

    def _sqrt(self, arg: Expression, t: _Tok) -> Expression:
        c: Optional[Fraction] = None
        radial = []
        for mono, scal, coeff in arg.terms:
            if not scal.is_one:
                raise ParseError(
                    "sqrt argument must be a rational constant plus a radial "
                    "polynomial (no nested scalars)", t.line, t.col)
            if coeff.im != 0 or coeff.re < 0:
                raise ParseError(
                    "sqrt argument must have nonnegative real coefficients",
                    t.line, t.col)
            if mono.is_unit:
                c = coeff.re
            elif mono.is_radial:
                radial.append((mono, coeff.re))
            else:
                raise ParseError(
                    "sqrt argument must be radial: every monomial needs equal "
                    "z and conj(z) exponents", t.line, t.col)
        if c is None or c <= 0:
            raise ParseError(
                "sqrt argument needs a positive constant part", t.line, t.col)
        scal = SmoothScalar.sqrt(SqrtArg(c, RadialPoly.make(self.n, radial)))
        return Expression(
            self.n, [(ConjMonomial.unit(self.n), scal, GaussianRational.of(1))]
        )


def parse_expression(text: str, n: int, line0: int = 1) -> Expression:
    p = _ExprParser(_tokenize(text, line0), n)
    e = p.expr()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return e


# ---------------------------------------------------------------------------
# canonical printing


def _format_rational(q: Fraction) -> str:
    return str(q) if q.denominator != 1 else str(q.numerator)


def _format_coeff(c: GaussianRational) -> tuple[str, Optional[str]]:
    """Returns (sign, text or None); None when the magnitude is 1."""
    if c.im == 0:
        sign = "-" if c.re < 0 else "+"
        mag = abs(c.re)
        return sign, None if mag == 1 else _format_rational(mag)
    if c.re == 0:
        sign = "-" if c.im < 0 else "+"
        mag = abs(c.im)
        return sign, "i" if mag == 1 else f"{_format_rational(mag)}*i"
    sign = "-" if c.re < 0 else "+"
    a, b = (abs(c.re), -c.im if c.re < 0 else c.im)
    bs = "i" if abs(b) == 1 else f"{_format_rational(abs(b))}*i"
    op = "-" if b < 0 else "+"
    return sign, f"({_format_rational(a)}{op}{bs})"


def _format_radial(r: RadialPoly, names: Sequence[str]) -> str:
    parts = []
    for mono, q in r.terms:
        factors = [] if q == 1 else [_format_rational(q)]
        for k, (a, b) in enumerate(mono.exps):
            if a:
                factors.append(
                    f"abs2({names[k]})" if a == 1 else f"abs2({names[k]})^{a}"
                )
        parts.append("*".join(factors))
    return " + ".join(parts)


def _format_scalar(s: SmoothScalar, names: Sequence[str]) -> list[str]:
    out = []
    for arg, t in s.factors:
        if t < 0:
            raise ValueError(
                "reciprocal scalar powers are not representable in the "
                "surface grammar"
            )
        base = f"sqrt({_format_rational(arg.c)}"
        if not arg.radial.is_zero:
            base += f" + {_format_radial(arg.radial, names)}"
        base += ")"
        out.append(base if t == 1 else f"{base}^{t}")
    return out


def format_expression(e: Expression) -> str:
    if e.is_zero:
        return "0"
    names = var_names(e.n)
    parts = []
    for mono, scal, coeff in e.terms:
        sign, ctext = _format_coeff(coeff)
        factors = []
        if ctext is not None:
            factors.append(ctext)
        factors.extend(_format_scalar(scal, names))
        for k, (a, b) in enumerate(mono.exps):
            if a:
                factors.append(names[k] if a == 1 else f"{names[k]}^{a}")
            if b:
                factors.append(
                    f"conj({names[k]})" if b == 1 else f"conj({names[k]})^{b}"
                )
        if not factors:
            factors.append("1")
        parts.append((sign, "*".join(factors)))
    first_sign, first = parts[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, p in parts[1:]:
        text += f" {sign} {p}"
    return text


# ---------------------------------------------------------------------------
# structure files


EXPECT_KEYS = (
    "involution",
    "weak_line",
    "line",
    "extension",
    "nijenhuis_origin",
)


@dataclass(frozen=True)
class StructureFile:
    name: str
    n: int
    entries: tuple[tuple[tuple[Expression, Expression], ...], ...]
    expect: tuple[tuple[str, str], ...] = ()

    def to_structure(self):
        from .acs import ACStructure

        return ACStructure.from_entries(self.entries)

    def expectations(self) -> dict[str, str]:
        return dict(self.expect)


def parse_structure(text: str) -> StructureFile:
    name = None
    dim = None
    expect: list[tuple[str, str]] = []
    entry_lines: list[tuple[int, int, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("name:"):
            name = line[5:].strip()
            continue
        if line.startswith("dim:"):
            try:
                dim = int(line[4:].strip())
            except ValueError:
                raise ParseError("dim must be an integer", lineno, 5)
            continue
        if line.startswith("expect"):
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expect lines read: expect <check> <verdict>",
                                 lineno, 1)
            if parts[1] not in EXPECT_KEYS:
                raise ParseError(f"unknown expectation {parts[1]!r}", lineno, 8)
            expect.append((parts[1], parts[2]))
            continue
        m = re.match(r"J\[(\d+)\]\[(\d+)\]\s*=\s*\((.*)\)\s*$", line)
        if not m:
            raise ParseError("expected a J[i][j] = (lin, anti) line", lineno, 1)
        entry_lines.append((int(m.group(1)), int(m.group(2)), m.group(3), lineno))
    if name is None:
        raise ParseError("missing name: line", 1, 1)
    if dim is None or dim < 1:
        raise ParseError("missing or invalid dim: line", 1, 1)
    table: dict[tuple[int, int], tuple[Expression, Expression]] = {}
    for i, k, body, lineno in entry_lines:
        if not (1 <= i <= dim and 1 <= k <= dim):
            raise ParseError(f"entry index J[{i}][{k}] out of range", lineno, 1)
        lin_txt, anti_txt = _split_pair(body, lineno)
        lin = parse_expression(lin_txt, dim, lineno)
        anti = parse_expression(anti_txt, dim, lineno)
        table[(i - 1, k - 1)] = (lin, anti)
    for i in range(dim):
        for k in range(dim):
            if (i, k) not in table:
                raise ParseError(f"missing entry J[{i + 1}][{k + 1}]", 1, 1)
    entries = tuple(
        tuple(table[(i, k)] for k in range(dim)) for i in range(dim)
    )
    return StructureFile(name, dim, entries, tuple(sorted(set(expect))))


def _split_pair(body: str, lineno: int) -> tuple[str, str]:
    depth = 0
    for idx, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            return body[:idx], body[idx + 1:]
    raise ParseError("entry must be a (lin, anti) pair", lineno, 1)


def print_structure(doc: StructureFile) -> str:
    lines = [f"name: {doc.name}", f"dim: {doc.n}"]
    for key, val in doc.expect:
        lines.append(f"expect {key} {val}")
    for i in range(doc.n):
        for k in range(doc.n):
            lin, anti = doc.entries[i][k]
            lines.append(
                f"J[{i + 1}][{k + 1}] = "
                f"({format_expression(lin)}, {format_expression(anti)})"
            )
    return "\n".join(lines) + "\n"
