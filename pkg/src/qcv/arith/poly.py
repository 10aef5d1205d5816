"""Exact sparse multivariate Laurent polynomials with rational exponents.

A monomial is a tuple of ``(name, exponent)`` pairs sorted by name, with no
zero exponents; the empty tuple is 1.  Exponents are ``int`` or ``Fraction``
(fractional powers of q occur in scalar prefactors).  A polynomial maps
monomials to nonzero ``Fraction`` coefficients.

  (1 - q^2 z)  ->  {(): 1, (("q", 2), ("z", 1)): -1}
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator

Mono = tuple  # tuple[tuple[str, int | Fraction], ...]

ONE_MONO: Mono = ()


def _norm_exp(e):
    if isinstance(e, Fraction) and e.denominator == 1:
        return int(e)
    return e


def mono(**exps) -> Mono:
    return tuple(sorted((v, _norm_exp(e)) for v, e in exps.items() if e))


def mono_from_dict(d: dict) -> Mono:
    return tuple(sorted((v, _norm_exp(e)) for v, e in d.items() if e))


def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        s = d.get(v, 0) + e
        if s:
            d[v] = _norm_exp(s)
        else:
            del d[v]
    return tuple(sorted(d.items()))


def mono_pow(a: Mono, k) -> Mono:
    if k == 0:
        return ()
    return tuple((v, _norm_exp(e * k)) for v, e in a)


def mono_inv(a: Mono) -> Mono:
    return tuple((v, -e) for v, e in a)


def mono_div(a: Mono, b: Mono) -> Mono:
    return mono_mul(a, mono_inv(b))


def mono_deg(a: Mono, var: str):
    for v, e in a:
        if v == var:
            return e
    return 0


def mono_drop(a: Mono, var: str) -> Mono:
    return tuple((v, e) for v, e in a if v != var)


def mono_vars(a: Mono) -> tuple[str, ...]:
    return tuple(v for v, _ in a)


def mono_str(m: Mono) -> str:
    parts = []
    for v, e in m:
        if e == 1:
            parts.append(v)
        elif isinstance(e, int) and e > 0:
            parts.append(f"{v}^{e}")
        else:
            parts.append(f"{v}^({e})")
    return "*".join(parts)


class LaurentPoly:
    """Immutable sparse Laurent polynomial over Q."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        if terms:
            self.terms = {m: Fraction(c) for m, c in terms.items() if c}
        else:
            self.terms = {}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "LaurentPoly":
        p = cls.__new__(cls)
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, c) -> "LaurentPoly":
        c = Fraction(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def monomial(cls, m: Mono, c=1) -> "LaurentPoly":
        c = Fraction(c)
        return cls._raw({m: c} if c else {})

    @classmethod
    def var(cls, name: str) -> "LaurentPoly":
        return cls._raw({((name, 1),): Fraction(1)})

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def variables(self) -> set[str]:
        out: set[str] = set()
        for m in self.terms:
            out.update(v for v, _ in m)
        return out

    def depends_on(self, var: str) -> bool:
        return any(v == var for m in self.terms for v, _ in m)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                del out[m]
        return LaurentPoly._raw(out)

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        if not self.terms or not other.terms:
            return LaurentPoly._raw({})
        if len(other.terms) == 1:
            (m2, c2), = other.terms.items()
            return self.scale(c2, m2)
        if len(self.terms) == 1:
            (m1, c1), = self.terms.items()
            return other.scale(c1, m1)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    del out[m]
        return LaurentPoly._raw(out)

    def scale(self, c, m: Mono = ()) -> "LaurentPoly":
        if not c:
            return LaurentPoly._raw({})
        if not m:
            if c == 1:
                return self
            return LaurentPoly._raw({k: v * c for k, v in self.terms.items()})
        return LaurentPoly._raw({mono_mul(k, m): v * c for k, v in self.terms.items()})

    def __pow__(self, k: int) -> "LaurentPoly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = LaurentPoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # -- structure --------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, LaurentPoly):
            return self.terms == other.terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __iter__(self) -> Iterator:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def coeffs_in(self, var: str) -> dict:
        """Group terms by the exponent of ``var``: ``{exp: LaurentPoly}``."""
        out: dict = {}
        for m, c in self.terms.items():
            e = mono_deg(m, var)
            rest = mono_drop(m, var) if e else m
            out.setdefault(e, {})[rest] = c
        return {e: LaurentPoly._raw(t) for e, t in out.items()}

    def degree_range(self, var: str):
        degs = [mono_deg(m, var) for m in self.terms]
        return min(degs), max(degs)

    def lex_key(self, m: Mono, order: tuple[str, ...]):
        d = dict(m)
        return tuple(d.get(v, 0) for v in order)

    def min_term(self):
        """Smallest term in lexicographic order over the sorted variables.

        Lex order is compatible with multiplication, so dividing by this term
        gives a representative that is canonical up to units.
        """
        order = tuple(sorted(self.variables()))
        m = min(self.terms, key=lambda t: self.lex_key(t, order))
        return m, self.terms[m]

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        order = tuple(sorted(self.variables()))
        items = sorted(self.terms.items(), key=lambda kv: self.lex_key(kv[0], order))
        out = []
        for i, (m, c) in enumerate(items):
            sign = "-" if c < 0 else "+"
            a = -c if c < 0 else c
            ms = mono_str(m)
            if not ms:
                body = _frac_str(a)
            elif a == 1:
                body = ms
            else:
                body = f"{_frac_str(a)}*{ms}"
            if i == 0:
                out.append(("-" if sign == "-" else "") + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    def __repr__(self) -> str:
        return f"LaurentPoly({self.to_str()})"


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"({c.numerator}/{c.denominator})"


def normalize_factor(p: LaurentPoly):
    """Split ``p`` as ``coeff * mono * p0`` with ``p0`` having min term exactly 1."""
    m, c = p.min_term()
    if len(p.terms) == 1:
        return c, m, None
    inv = mono_inv(m)
    p0 = LaurentPoly._raw({mono_mul(k, inv): v / c for k, v in p.terms.items()})
    return c, m, p0


def poly_sum(items: Iterable[LaurentPoly]) -> LaurentPoly:
    out = LaurentPoly()
    for p in items:
        out = out + p
    return out


def divide_exact(a: LaurentPoly, f: LaurentPoly) -> LaurentPoly | None:
    """Return ``a / f`` if ``f`` divides ``a`` in the Laurent ring, else None.

    Long division in a variable where ``f`` has a monomial leading
    coefficient; other factors are skipped (None).
    """
    if f.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    if a.is_zero():
        return a
    if f.is_monomial():
        (m, c), = f.terms.items()
        return a.scale(1 / c, mono_inv(m))
    var = None
    for v in sorted(f.variables()):
        groups = f.coeffs_in(v)
        if len(groups) > 1 and groups[max(groups)].is_monomial():
            var = v
            break
    if var is None:
        return None
    fg = f.coeffs_in(var)
    flo, fhi = min(fg), max(fg)
    if any(isinstance(e, Fraction) for e in fg):
        return None
    lead = fg[fhi]
    (lm, lc), = lead.terms.items()
    lm_inv = mono_inv(lm)
    rem = a.coeffs_in(var)
    if any(isinstance(e, Fraction) for e in rem):
        return None
    rem = {e: p for e, p in rem.items()}
    alo = min(rem)
    quot: dict = {}
    # Normalising both to polynomials in var: quotient degrees lie in
    # [alo - flo, ahi - fhi]; anything left below that is a true remainder.
    floor = alo - flo
    while rem:
        top = max(rem)
        k = top - fhi
        if k < floor:
            return None
        qc = rem[top].scale(1 / lc, lm_inv)
        quot[k] = qc
        for e, fc in fg.items():
            t = e + k
            newp = rem.get(t, LaurentPoly._raw({})) - qc * fc
            if newp.terms:
                rem[t] = newp
            else:
                rem.pop(t, None)
    out: dict = {}
    for k, qc in quot.items():
        for m, c in qc.terms.items():
            mm = mono_mul(m, ((var, k),)) if k else m
            out[mm] = out.get(mm, 0) + c
    return LaurentPoly._raw({m: c for m, c in out.items() if c})
