"""Expression and matrix-document parser.

Grammar (whitespace insignificant)::

    expr     := term (('+' | '-') term)*
    term     := ['-'] factor (('*' | '/') factor)*
    factor   := base ('^' exponent)?
    base     := integer | ident | '(' expr ')' | 'delta' '(' expr ')'
    exponent := integer | '(' ['-'] integer ['/' integer] ')'

A leading minus and ``delta(...)`` extend the minimal grammar so that every
builtin matrix prints to parseable text.  ``delta(M)`` is the multiplicative
delta for a unit ``M``; in additive documents ``delta(u - a)`` is the
additive delta at ``u = a``.

Matrix documents (``.qmx``) are line based::

    # comment
    n = 2
    rule = multiplicative
    var z region=Zero
    var q denominator=2
    R[1,2|2,1] = (q - q^(-1))/(q*z - q^(-1))

``R[i,j|k,l]`` is the coefficient of ``E_ij (x) E_kl``; unassigned entries
are zero.  ``q``, ``kappa`` and ``h`` are always declared.
"""

from __future__ import annotations

import re
from math import lcm
from dataclasses import dataclass, field
from fractions import Fraction

from qcv.arith.ratfun import ONE, RatFun, _power
from qcv.arith.series import Region
from qcv.arith.vars import CONSTANTS, VarTable, is_spectral
from qcv.errors import ExponentDenominator, ParseError, QcvError
from qcv.fdist import AdditiveSupport, DistExpr, RegularTerm, delta, dist_from_ratfun
from qcv.rmatrix import ADDITIVE, MULTIPLICATIVE, RMatrixSpec
from qcv.tensor import RingMatrix

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


@dataclass
class _Tok:
    kind: str  # int | ident | op | end
    text: str
    line: int
    col: int


def _tokenize(text: str, line: int = 1, col0: int = 1) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else m.end()
        if m.group(1) is not None:
            toks.append(_Tok("int", m.group(1), line, col0 + start))
        elif m.group(2) is not None:
            toks.append(_Tok("ident", m.group(2), line, col0 + start))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", line, col0 + start)
            toks.append(_Tok("op", ch, line, col0 + start))
        pos = m.end()
    toks.append(_Tok("end", "", line, col0 + len(text.rstrip())))
    return toks


class _Parser:
    def __init__(self, text: str, table: VarTable, regions: list, rule: str, line: int = 1, col0: int = 1):
        self.toks = _tokenize(text, line, col0)
        self.i = 0
        self.table = table
        self.regions = regions
        self.rule = rule

    # -- token helpers ----------------------------------------------------
    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text or t.kind == "end":
            what = "end of input" if t.kind == "end" else repr(t.text)
            raise ParseError(f"expected {text!r}, found {what}", t.line, t.col)
        return self.take()

    def fail(self, msg: str, t: _Tok | None = None):
        t = t or self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- grammar ----------------------------------------------------------
    def parse(self):
        v = self.expr()
        t = self.peek()
        if t.kind != "end":
            self.fail(f"unexpected {t.text!r}")
        return v

    def expr(self):
        v = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            t = self.peek()
            w = self.term()
            v = self.combine(v, w, op, t)
        return v

    def term(self):
        neg = False
        if self.peek().kind == "op" and self.peek().text == "-":
            self.take()
            neg = True
        v = self.factor()
        while self.peek().kind == "op" and self.peek().text in ("*", "/"):
            t = self.take()
            w = self.factor()
            if t.text == "/":
                if isinstance(w, DistExpr):
                    self.fail("division by a distribution", t)
                if w.is_zero():
                    self.fail("division by zero", t)
            v = self.combine(v, w, t.text, t)
        return -v if neg else v

    def factor(self):
        v = self.base()
        if self.peek().kind == "op" and self.peek().text == "^":
            t = self.take()
            at = self.peek()
            e = self.exponent()
            if isinstance(v, DistExpr):
                self.fail("power of a distribution", t)
            if isinstance(e, Fraction) and e.denominator != 1:
                if not v.is_unit():
                    self.fail(f"fractional power {e} of a non-monomial", t)
                for name, k in v.mono:
                    try:
                        self.table.check_exponent(name, Fraction(k) * e)
                    except ExponentDenominator as exc:
                        raise ParseError(str(exc), at.line, at.col) from None
            if e < 0 and v.is_zero():
                self.fail("negative power of zero", t)
            v = _power(v, e)
        return v

    def exponent(self):
        t = self.peek()
        if t.kind == "int":
            return int(self.take().text)
        if t.kind == "op" and t.text == "(":
            self.take()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "-":
                self.take()
                sign = -1
            num = self.integer()
            den = 1
            if self.peek().kind == "op" and self.peek().text == "/":
                self.take()
                den = self.integer()
                if den == 0:
                    self.fail("zero denominator in exponent")
            self.expect(")")
            e = Fraction(sign * num, den)
            return int(e) if e.denominator == 1 else e
        self.fail("expected an exponent")

    def integer(self) -> int:
        t = self.peek()
        if t.kind != "int":
            self.fail("expected an integer")
        return int(self.take().text)

    def base(self):
        t = self.peek()
        if t.kind == "int":
            self.take()
            return RatFun.const(int(t.text))
        if t.kind == "ident":
            self.take()
            if t.text == "delta" and self.peek().text == "(":
                self.take()
                inner_tok = self.peek()
                arg = self.expr()
                self.expect(")")
                return self.make_delta(arg, inner_tok)
            if t.text not in self.table.names:
                raise ParseError(f"unknown variable {t.text!r}", t.line, t.col)
            return RatFun.var(t.text)
        if t.kind == "op" and t.text == "(":
            self.take()
            v = self.expr()
            self.expect(")")
            return v
        if t.kind == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected {t.text!r}")

    def combine(self, a, b, op: str, tok: _Tok):
        try:
            return _combine(a, b, op, self.regions)
        except QcvError as exc:
            raise ParseError(str(exc), tok.line, tok.col) from None

    def make_delta(self, arg, tok: _Tok) -> DistExpr:
        if isinstance(arg, DistExpr):
            self.fail("delta of a distribution", tok)
        if self.rule == ADDITIVE:
            spectral = [v for v in arg.variables() if is_spectral(v)]
            lin = arg - RatFun.var(spectral[0]) if len(spectral) == 1 else None
            if lin is None or lin.variables() or not lin.is_laurent():
                self.fail("additive delta needs an argument of the form u - a", tok)
            return delta(spectral[0], point=-lin.coeff)
        if not arg.is_unit():
            self.fail("delta argument must be a monomial", tok)
        try:
            return delta(arg)
        except (QcvError, ValueError) as exc:
            raise ParseError(str(exc), tok.line, tok.col) from None


def _combine(a, b, op: str, regions: list):
    if isinstance(a, DistExpr) or isinstance(b, DistExpr):
        a = a if isinstance(a, DistExpr) else dist_from_ratfun(a, regions)
        if op == "/":
            b = dist_from_ratfun(ONE / b, regions)
        else:
            b = b if isinstance(b, DistExpr) else dist_from_ratfun(b, regions)
        op = "*" if op == "/" else op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    return a / b


def default_table(extra: tuple = ("z", "w", "u", "v")) -> VarTable:
    return VarTable(("q", "kappa", "h") + extra, {"q": 2})


def parse_expr(text: str, table: VarTable | None = None, regions=None, rule: str = MULTIPLICATIVE):
    """Parse ``text`` to a ``RatFun`` (or a ``DistExpr`` if it contains ``delta``)."""
    table = table or default_table()
    return _Parser(text, table, list(regions or []), rule).parse()


# -- printing -------------------------------------------------------------------

def format_ratfun(r: RatFun) -> str:
    return r.to_str()


def format_value(v) -> str:
    if isinstance(v, RatFun):
        return v.to_str()
    if not v.terms:
        return "0"
    parts = []
    for t in v.terms:
        if isinstance(t, RegularTerm):
            parts.append(t.rat.to_str())
        elif isinstance(t.support, AdditiveSupport):
            s = t.support
            sign = "-" if s.point >= 0 else "+"
            parts.append(_with_coeff(t, f"delta({s.var} {sign} {abs(s.point)})"))
        else:
            ds = "*".join(f"delta({RatFun.monomial(m, c).to_str()})" for c, m in t.support.relations())
            parts.append(_with_coeff(t, ds))
    if len(parts) == 1:
        return parts[0]
    return " + ".join(f"({p})" for p in parts)


def _with_coeff(t, ds: str) -> str:
    c = t.coeff.rat
    return ds if c.is_one() else f"({c.to_str()})*{ds}"


# -- matrix documents -------------------------------------------------------------

@dataclass
class MatrixDocument:
    n: int
    rule: str
    table: VarTable
    regions: dict = field(default_factory=dict)  # var -> Region
    entries: dict = field(default_factory=dict)  # (i, j, k, l) -> RatFun | DistExpr
    spectral: str = "z"

    def matrix(self) -> RingMatrix:
        n = self.n
        out = {}
        for (i, j, k, l), v in self.entries.items():
            out[((i - 1) * n + (k - 1), (j - 1) * n + (l - 1))] = v
        if any(isinstance(v, DistExpr) for v in out.values()):
            regions = list(self.regions.items())
            out = {key: v if isinstance(v, DistExpr) else dist_from_ratfun(v, regions) for key, v in out.items()}
        return RingMatrix(n * n, out, (n, 2))

    def spec(self) -> RMatrixSpec:
        return RMatrixSpec(self.n, self.rule, self.matrix(), self.spectral)


_ENTRY = re.compile(r"^R\s*\[\s*(\d+)\s*,\s*(\d+)\s*\|\s*(\d+)\s*,\s*(\d+)\s*\]\s*=")
_KEY = re.compile(r"^(n|rule|spectral)\s*=\s*(\S+)\s*$")


def _strip_comment(line: str) -> str:
    k = line.find("#")
    return line if k < 0 else line[:k]


def parse_matrix(text: str) -> MatrixDocument:
    n, rule, spectral = None, MULTIPLICATIVE, None
    spectral_at = (1, 1)
    names = list(CONSTANTS_ORDER)
    dens: dict = {}
    regions: dict = {}
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        m = _KEY.match(body)
        if m:
            key, val = m.groups()
            if key == "n":
                if not val.isdigit() or int(val) < 2:
                    raise ParseError(f"rank must be an integer >= 2, got {val!r}", lineno, indent + m.start(2) + 1)
                n = int(val)
            elif key == "rule":
                if val not in (MULTIPLICATIVE, ADDITIVE):
                    raise ParseError(f"rule must be {MULTIPLICATIVE} or {ADDITIVE}", lineno, indent + m.start(2) + 1)
                rule = val
            else:
                spectral = val
                spectral_at = (lineno, indent + m.start(2) + 1)
            continue
        if body.startswith("var ") or body == "var":
            _declare(body, lineno, indent, names, dens, regions)
            continue
        m = _ENTRY.match(body)
        if m:
            pending.append((lineno, indent, m, body))
            continue
        raise ParseError(f"cannot read line: {body!r}", lineno, indent + 1)
    if n is None:
        raise ParseError("missing rank declaration 'n = ...'", 1, 1)
    if "q" not in dens:
        dens["q"] = lcm(2, n)
    spec_vars = [v for v in names if is_spectral(v)]
    if spectral is None:
        spectral = spec_vars[0] if spec_vars else ("z" if rule == MULTIPLICATIVE else "u")
        # the default spectral variable needs no declaration
        if spectral not in names:
            names.append(spectral)
    if spectral not in names:
        raise ParseError(f"spectral variable {spectral!r} is not declared", *spectral_at)
    table = VarTable(tuple(names), dens)
    doc = MatrixDocument(n, rule, table, regions, {}, spectral)
    reg_list = list(regions.items())
    for lineno, indent, m, body in pending:
        idx = tuple(int(g) for g in m.groups())
        for pos, v in enumerate(idx):
            if not 1 <= v <= n:
                col = indent + m.start(pos + 1) + 1
                raise ParseError(f"index {v} outside 1..{n}", lineno, col)
        if idx in doc.entries:
            raise ParseError(f"entry R[{idx[0]},{idx[1]}|{idx[2]},{idx[3]}] assigned twice", lineno, indent + 1)
        expr_text = body[m.end():]
        col0 = indent + m.end() + 1
        if not expr_text.strip():
            raise ParseError("missing expression", lineno, col0)
        doc.entries[idx] = _Parser(expr_text, table, reg_list, rule, lineno, col0).parse()
    return doc


CONSTANTS_ORDER = ("q", "kappa", "h")


def _declare(body: str, lineno: int, indent: int, names: list, dens: dict, regions: dict) -> None:
    parts = body.split()
    if len(parts) < 2:
        raise ParseError("'var' needs a name", lineno, indent + 4)
    name = parts[1]
    if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name) or name == "delta":
        raise ParseError(f"bad variable name {name!r}", lineno, indent + body.index(name) + 1)
    if name not in names:
        names.append(name)
    for opt in parts[2:]:
        col = indent + body.index(opt) + 1
        key, _, val = opt.partition("=")
        if key == "region":
            try:
                regions[name] = Region(val)
            except ValueError:
                raise ParseError(f"region must be Zero or Infinity, got {val!r}", lineno, col) from None
        elif key == "denominator":
            if not val.isdigit() or int(val) < 1:
                raise ParseError(f"denominator must be a positive integer, got {val!r}", lineno, col)
            dens[name] = int(val)
        else:
            raise ParseError(f"unknown option {key!r}", lineno, col)


def format_matrix(spec: RMatrixSpec, regions: dict | None = None, denominators: dict | None = None) -> str:
    """Print ``spec`` as a matrix document that ``parse_matrix`` reads back."""
    n = spec.n
    m = spec.matrix
    names = set()
    for v in m.entries.values():
        names |= _value_vars(v)
    lines = [f"n = {n}", f"rule = {spec.rule}", f"spectral = {spec.var}"]
    regions = regions or {}
    denominators = denominators or {}
    for name in sorted(names | {spec.var}):
        if name in CONSTANTS:
            continue
        opts = []
        if name in regions:
            opts.append(f"region={regions[name].value}")
        lines.append(" ".join(["var", name] + opts))
    for name, d in sorted(denominators.items()):
        lines.append(f"var {name} denominator={d}")
    for (r, c), v in sorted(m.entries.items()):
        i, k = divmod(r, n)
        j, l = divmod(c, n)
        lines.append(f"R[{i + 1},{j + 1}|{k + 1},{l + 1}] = {format_value(v)}")
    return "\n".join(lines) + "\n"


def _value_vars(v) -> set:
    if isinstance(v, RatFun):
        return set(v.variables())
    out = set()
    for t in v.terms:
        if isinstance(t, RegularTerm):
            out |= set(t.rat.variables())
        else:
            out |= set(t.coeff.rat.variables())
            if isinstance(t.support, AdditiveSupport):
                out.add(t.support.var)
            else:
                for _, mono in t.support.relations():
                    out |= {x for x, _ in mono}
    return out
