"""Exact rational functions kept in factored, unnormalised form.

A ``RatFun`` is ``coeff * mono * prod(num_f ** k) / prod(den_f ** k)`` where
every factor is a ``LaurentPoly`` normalised by ``normalize_factor`` (its
lex-minimal term is exactly 1).  Structurally equal factors therefore cancel
without any polynomial GCD.  Sums are put over the lcm of the factor
multisets; the new numerator is tried against each denominator factor by
exact division, which keeps sizes small but is not a full reduction.

Equality is mathematical: ``a == b`` iff ``a - b`` has a zero numerator,
i.e. the cross-multiplication test.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from qcv.arith.poly import (
    LaurentPoly,
    Mono,
    divide_exact,
    mono_deg,
    mono_drop,
    mono_inv,
    mono_mul,
    mono_pow,
    mono_str,
    normalize_factor,
    _frac_str,
)
from qcv.errors import DivisionByZero, ExponentDenominator

_EMPTY: dict = {}


def _merge_add(a: dict, b: dict) -> dict:
    if not b:
        return a
    if not a:
        return b
    out = dict(a)
    for f, k in b.items():
        out[f] = out.get(f, 0) + k
    return out


def _cancel(num: dict, den: dict):
    common = num.keys() & den.keys()
    if not common:
        return num, den
    num = dict(num)
    den = dict(den)
    for f in common:
        k = min(num[f], den[f])
        num[f] -= k
        den[f] -= k
        if not num[f]:
            del num[f]
        if not den[f]:
            del den[f]
    return num, den


def _expand(factors: dict) -> LaurentPoly:
    out = LaurentPoly.const(1)
    for f, k in factors.items():
        out = out * (f ** k)
    return out


class RatFun:
    __slots__ = ("coeff", "mono", "num", "den")

    def __init__(self, coeff=Fraction(0), mono: Mono = (), num=None, den=None):
        self.coeff = Fraction(coeff)
        if not self.coeff:
            self.mono, self.num, self.den = (), _EMPTY, _EMPTY
            return
        self.mono = mono
        self.num = num or _EMPTY
        self.den = den or _EMPTY

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, c) -> "RatFun":
        return cls(Fraction(c))

    @classmethod
    def var(cls, name: str, exp=1) -> "RatFun":
        return cls(Fraction(1), ((name, exp),) if exp else ())

    @classmethod
    def monomial(cls, m: Mono, c=1) -> "RatFun":
        return cls(Fraction(c), m)

    @classmethod
    def from_poly(cls, p: LaurentPoly) -> "RatFun":
        if p.is_zero():
            return ZERO
        c, m, p0 = normalize_factor(p)
        if p0 is None:
            return cls(c, m)
        return cls(c, m, {p0: 1})

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeff

    def is_one(self) -> bool:
        return self.coeff == 1 and not self.mono and not self.num and not self.den

    def is_unit(self) -> bool:
        """True for a nonzero constant times a monomial."""
        return bool(self.coeff) and not self.num and not self.den

    def is_laurent(self) -> bool:
        return not self.den

    def variables(self) -> set[str]:
        out = {v for v, _ in self.mono}
        for f in self.num:
            out |= f.variables()
        for f in self.den:
            out |= f.variables()
        return out

    def den_variables(self) -> set[str]:
        out: set[str] = set()
        for f in self.den:
            out |= f.variables()
        return out

    # -- arithmetic -------------------------------------------------------
    def __mul__(self, other) -> "RatFun":
        if not isinstance(other, RatFun):
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        if not self.coeff or not other.coeff:
            return ZERO
        num = _merge_add(self.num, other.num)
        den = _merge_add(self.den, other.den)
        if (self.num and other.den) or (self.den and other.num):
            num, den = _cancel(num, den)
        return RatFun(self.coeff * other.coeff, mono_mul(self.mono, other.mono), num, den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFun":
        if not self.coeff:
            raise DivisionByZero("inverse of the zero function")
        return RatFun(1 / self.coeff, mono_inv(self.mono), self.den, self.num)

    def __truediv__(self, other) -> "RatFun":
        if not isinstance(other, RatFun):
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other) -> "RatFun":
        return _coerce(other) * self.inverse()

    def __neg__(self) -> "RatFun":
        if not self.coeff:
            return self
        return RatFun(-self.coeff, self.mono, self.num, self.den)

    def __add__(self, other) -> "RatFun":
        if not isinstance(other, RatFun):
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return _add(self, other)

    __radd__ = __add__

    def __sub__(self, other) -> "RatFun":
        if not isinstance(other, RatFun):
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return _add(self, -other)

    def __rsub__(self, other) -> "RatFun":
        return _coerce(other) - self

    def __pow__(self, k: int) -> "RatFun":
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return ONE
        if not self.coeff:
            return ZERO
        return RatFun(
            self.coeff ** k,
            mono_pow(self.mono, k),
            {f: e * k for f, e in self.num.items()},
            {f: e * k for f, e in self.den.items()},
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatFun):
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # equality is mathematical, not structural

    # -- views ------------------------------------------------------------
    def numerator(self) -> LaurentPoly:
        return _expand(self.num).scale(self.coeff, self.mono)

    def denominator(self) -> LaurentPoly:
        return _expand(self.den)

    def factors(self):
        """Iterate ``(factor, signed multiplicity)``; negative for the denominator."""
        for f, k in self.num.items():
            yield f, k
        for f, k in self.den.items():
            yield f, -k

    def reduced(self) -> "RatFun":
        """Cancel numerator factors that a denominator factor divides exactly."""
        if not self.num or not self.den:
            return self
        c, m = self.coeff, self.mono
        num, den = dict(self.num), dict(self.den)
        progress = True
        while progress:
            progress = False
            for f in list(num):
                for g in list(den):
                    qt = divide_exact(f, g)
                    if qt is None:
                        continue
                    for d, k in ((num, f), (den, g)):
                        d[k] -= 1
                        if not d[k]:
                            del d[k]
                    qc, qm, q0 = normalize_factor(qt)
                    c, m = c * qc, mono_mul(m, qm)
                    if q0 is not None:
                        num[q0] = num.get(q0, 0) + 1
                    num, den = _cancel(num, den)
                    progress = True
                    break
                if progress:
                    break
        return RatFun(c, m, num, den)

    def substitute(self, var: str, target, table=None) -> "RatFun":
        """Replace ``var`` by ``target`` (a RatFun) in every factor."""
        target = _coerce(target)
        if table is not None and target.is_unit():
            for v, e in target.mono:
                for f, _ in self.factors():
                    for m in f.terms:
                        d = mono_deg(m, var)
                        if d:
                            table.check_exponent(v, e * d)
        out = RatFun(self.coeff, mono_drop(self.mono, var))
        d = mono_deg(self.mono, var)
        if d:
            out = out * _power(target, d)
        for f, k in self.num.items():
            out = out * (subst_poly(f, var, target) ** k)
        for f, k in self.den.items():
            sf = subst_poly(f, var, target)
            if sf.is_zero():
                raise DivisionByZero(f"denominator factor {f.to_str()} vanishes at {var} = {target}")
            out = out * (sf ** -k)
        return out

    def subs(self, mapping: dict) -> "RatFun":
        out = self
        for v, t in mapping.items():
            out = out.substitute(v, t)
        return out

    def to_str(self) -> str:
        if not self.coeff:
            return "0"
        parts = []
        c = self.coeff
        sign = "-" if c < 0 else ""
        a = abs(c)
        if a != 1 or (not self.mono and not self.num):
            parts.append(_frac_str(a))
        if self.mono:
            parts.append(mono_str(self.mono))
        for f, k in sorted(self.num.items(), key=lambda fk: fk[0].to_str()):
            parts.append(f"({f.to_str()})" + (f"^{k}" if k != 1 else ""))
        s = sign + "*".join(parts)
        if self.den:
            dens = [f"({f.to_str()})" + (f"^{k}" if k != 1 else "")
                    for f, k in sorted(self.den.items(), key=lambda fk: fk[0].to_str())]
            s += "/(" + "*".join(dens) + ")"
        return s

    def __str__(self) -> str:
        return self.to_str()

    def __repr__(self) -> str:
        return f"RatFun({self.to_str()})"


ZERO = RatFun(0)
ONE = RatFun(1)


def _coerce(x):
    if isinstance(x, RatFun):
        return x
    if isinstance(x, (int, Fraction)):
        return RatFun(Fraction(x))
    if isinstance(x, LaurentPoly):
        return RatFun.from_poly(x)
    return NotImplemented


def _power(t: RatFun, e) -> RatFun:
    if isinstance(e, Fraction) and e.denominator != 1:
        if not t.is_unit():
            raise ExponentDenominator(f"fractional power {e} of non-monomial {t}")
        c = t.coeff
        if c != 1:
            raise ExponentDenominator(f"fractional power {e} of coefficient {c}")
        return RatFun(1, mono_pow(t.mono, e))
    return t ** int(e)


def subst_poly(p: LaurentPoly, var: str, target: RatFun) -> RatFun:
    """Substitute into a single polynomial, returning a RatFun."""
    if not p.depends_on(var):
        return RatFun.from_poly(p)
    if target.is_unit():
        tc, tm = target.coeff, target.mono
        out: dict = {}
        for m, c in p.terms.items():
            d = mono_deg(m, var)
            if d:
                if isinstance(d, Fraction) and d.denominator != 1 and tc != 1:
                    raise ExponentDenominator(f"fractional power {d} of coefficient {tc}")
                nm = mono_mul(mono_drop(m, var), mono_pow(tm, d))
                nc = c * (tc ** int(d) if tc != 1 else 1)
            else:
                nm, nc = m, c
            s = out.get(nm, 0) + nc
            if s:
                out[nm] = s
            else:
                out.pop(nm, None)
        return RatFun.from_poly(LaurentPoly._raw(out))
    total = ZERO
    for e, coeff in p.coeffs_in(var).items():
        total = total + RatFun.from_poly(coeff) * _power(target, e)
    return total


def _add(a: RatFun, b: RatFun) -> RatFun:
    if not a.coeff:
        return b
    if not b.coeff:
        return a
    den = dict(a.den)
    for f, k in b.den.items():
        if den.get(f, 0) < k:
            den[f] = k
    na = _merge_add(a.num, {f: k - a.den.get(f, 0) for f, k in den.items() if k > a.den.get(f, 0)})
    nb = _merge_add(b.num, {f: k - b.den.get(f, 0) for f, k in den.items() if k > b.den.get(f, 0)})
    common = {f: min(na[f], nb[f]) for f in na.keys() & nb.keys()}
    ra = {f: k - common.get(f, 0) for f, k in na.items() if k - common.get(f, 0)}
    rb = {f: k - common.get(f, 0) for f, k in nb.items() if k - common.get(f, 0)}
    # factor out the common monomial so the sum stays a small polynomial
    pa = _expand(ra).scale(a.coeff, a.mono)
    pb = _expand(rb).scale(b.coeff, b.mono)
    s = pa + pb
    if s.is_zero():
        return ZERO
    c, m, p0 = normalize_factor(s)
    num = dict(common)
    num = {f: k for f, k in num.items() if k}
    if p0 is not None:
        # try to cancel the fresh numerator against denominator factors
        changed = True
        while changed and den:
            changed = False
            for f in list(den):
                q = divide_exact(p0, f)
                if q is not None:
                    den[f] -= 1
                    if not den[f]:
                        del den[f]
                    qc, qm, q0 = normalize_factor(q)
                    c, m = c * qc, mono_mul(m, qm)
                    p0 = q0
                    changed = p0 is not None
                    break
        if p0 is not None:
            num[p0] = num.get(p0, 0) + 1
    num, den = _cancel(num, den)
    return RatFun(c, m, num, den)


def rf_eq(a: RatFun, b: RatFun) -> bool:
    """Cross-multiplication equality."""
    a, b = _coerce(a), _coerce(b)
    return (a.numerator() * b.denominator() - b.numerator() * a.denominator()).is_zero()


def rf_arith(op: str, a: RatFun, b: RatFun | None = None) -> RatFun:
    a = _coerce(a)
    if op == "neg":
        return -a
    b = _coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b.is_zero():
            raise DivisionByZero("division by the zero function")
        return a / b
    raise ValueError(f"unknown op {op!r}")


def rf_substitute(a: RatFun, var: str, target, table=None) -> RatFun:
    return _coerce(a).substitute(var, target, table)


def prod(items: Iterable[RatFun]) -> RatFun:
    out = ONE
    for x in items:
        out = out * x
    return out


def q() -> RatFun:
    return RatFun.var("q")
