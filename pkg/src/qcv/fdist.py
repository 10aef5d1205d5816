"""Formal distributions: region-tagged rational expansions and delta terms.

A ``RegularTerm`` is a rational function together with, for each
denominator factor that involves spectral variables, the *dominant* group of
its terms (the terms sharing one spectral exponent vector).  The factor is
expanded as ``1/(D + rest) = D^-1 * sum (-rest/D)^k``.  This generalises a
per-variable Zero/Infinity tag: ``1 - q^2 z`` with the constant group
dominant is the expansion near ``z = 0``.

The expansion of a term is well defined when the small ratios ``g - D`` of
all its factors lie in a pointed cone, i.e. some integer functional ``lam``
is >= 1 on every one of them.  ``lam`` also bounds coefficient enumeration in
``truncate``.

A ``DeltaTerm`` is ``coeff * prod_i delta(M_i)``.  The relations ``M_i = 1``
are kept in reduced echelon form, eliminating the lexicographically last
spectral variable first, so each pivot variable is a monomial in the free
ones.  ``coeff`` is a ``RegularTerm`` in the free variables only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product as iproduct
from math import lcm
from typing import Iterable

from qcv.arith.poly import (
    LaurentPoly,
    Mono,
    mono_deg,
    mono_inv,
    mono_mul,
    mono_pow,
    mono_str,
    normalize_factor,
)
from qcv.arith.ratfun import ONE, ZERO, RatFun, _cancel
from qcv.arith.series import Region, rf_partial_fractions
from qcv.arith.vars import is_spectral
from qcv.errors import Divergent, NonExpandable, SingularPivot, Unsupported

Vec = tuple  # sorted ((var, exp), ...) over spectral variables


# -- exponent vectors ------------------------------------------------------

def spec_vec(m: Mono) -> Vec:
    return tuple((v, e) for v, e in m if is_spectral(v))


def const_part(m: Mono) -> Mono:
    return tuple((v, e) for v, e in m if not is_spectral(v))


def vec_add(a: Vec, b: Vec) -> Vec:
    return mono_mul(a, b)


def vec_sub(a: Vec, b: Vec) -> Vec:
    return mono_mul(a, mono_inv(b))


def vec_dot(lam: dict, v: Vec):
    return sum(lam.get(x, 0) * e for x, e in v)


def groups(f: LaurentPoly) -> dict:
    """Terms of ``f`` grouped by spectral exponent vector."""
    out: dict = {}
    for m, c in f.terms.items():
        out.setdefault(spec_vec(m), {})[m] = c
    return {k: LaurentPoly._raw(v) for k, v in out.items()}


def pointed_witness(vectors: Iterable[Vec]):
    """Integer functional ``lam`` with ``lam . v >= 1`` for all ``vectors``.

    Exact Fourier-Motzkin elimination; returns None if no such ``lam``
    exists (the vectors do not lie in an open pointed cone).
    """
    vectors = list(dict.fromkeys(vectors))
    names = sorted({x for v in vectors for x, _ in v})
    if not vectors:
        return {}
    d = len(names)
    pos = {x: i for i, x in enumerate(names)}
    rows = []
    for v in vectors:
        a = [Fraction(0)] * d
        for x, e in v:
            a[pos[x]] = Fraction(e)
        rows.append((a, Fraction(1)))
    stages = [rows]
    for j in range(d - 1, -1, -1):
        cur = stages[-1]
        keep, up, low = [], [], []
        for a, b in cur:
            if a[j] > 0:
                low.append((a, b))
            elif a[j] < 0:
                up.append((a, b))
            else:
                keep.append((a, b))
        new = list(keep)
        for ap, bp in low:
            for an, bn in up:
                sp, sn = ap[j], -an[j]
                a = [ap[i] * sn + an[i] * sp for i in range(d)]
                new.append((a, bp * sn + bn * sp))
        stages.append(new)
    if any(b > 0 for a, b in stages[-1]):
        return None
    lam = [Fraction(0)] * d
    for j in range(d):
        cur = stages[d - 1 - j]
        lo, hi = None, None
        for a, b in cur:
            if a[j] == 0:
                continue
            rest = b - sum(a[i] * lam[i] for i in range(j))
            bound = rest / a[j]
            if a[j] > 0:
                lo = bound if lo is None else max(lo, bound)
            else:
                hi = bound if hi is None else min(hi, bound)
        if lo is not None:
            lam[j] = lo
        elif hi is not None:
            lam[j] = min(hi, Fraction(0))
    scale = reduce(lcm, (x.denominator for x in lam), 1)
    return {x: int(lam[i] * scale) for i, x in enumerate(names) if lam[i]}


# -- monomial substitution ------------------------------------------------

def _unit_pow(c: Fraction, m: Mono, e):
    if isinstance(e, Fraction) and e.denominator != 1:
        if c != 1:
            raise Unsupported(f"fractional power {e} of coefficient {c}")
        return Fraction(1), mono_pow(m, e)
    return c ** int(e), mono_pow(m, int(e))


def subst_mono(m: Mono, mapping: dict):
    """Apply ``var -> (coeff, mono)`` simultaneously; returns ``(coeff, mono)``."""
    c = Fraction(1)
    out: Mono = ()
    for v, e in m:
        if v in mapping:
            tc, tm = mapping[v]
            pc, pm = _unit_pow(tc, tm, e)
            c *= pc
            out = mono_mul(out, pm)
        else:
            out = mono_mul(out, ((v, e),))
    return c, out


def subst_poly_units(p: LaurentPoly, mapping: dict) -> LaurentPoly:
    out: dict = {}
    for m, c in p.terms.items():
        k, nm = subst_mono(m, mapping)
        s = out.get(nm, 0) + c * k
        if s:
            out[nm] = s
        else:
            out.pop(nm, None)
    return LaurentPoly._raw(out)


def subst_vec(v: Vec, mapping: dict) -> Vec:
    return spec_vec(subst_mono(v, mapping)[1])


def _unit(r: RatFun):
    if not r.is_unit():
        raise Unsupported(f"expected a monomial, got {r}")
    return r.coeff, r.mono


# -- regular terms ----------------------------------------------------------

class RegularTerm:
    """``rat`` expanded with the dominant group ``dirs[f]`` for each den factor ``f``."""

    __slots__ = ("rat", "dirs", "_lam")

    def __init__(self, rat: RatFun, dirs: dict | None = None, check: bool = True):
        self.rat = rat
        self.dirs = dict(dirs or {})
        self._lam = False
        if check:
            self._validate()

    def _validate(self) -> None:
        self.dirs = {f: d for f, d in self.dirs.items() if f in self.rat.den}
        for f in self.rat.den:
            gs = groups(f)
            if len(gs) < 2:
                continue
            d = self.dirs.get(f)
            if d is None:
                raise NonExpandable(f"no expansion direction for factor {f.to_str()}")
            if d not in gs:
                raise ValueError(f"direction {mono_str(d)} is not a term group of {f.to_str()}")

    @classmethod
    def make(cls, rat: RatFun, dirs: dict) -> "RegularTerm":
        rat = rat.reduced()
        t = cls(rat, {f: d for f, d in dirs.items() if f in rat.den})
        return t

    def is_zero(self) -> bool:
        return self.rat.is_zero()

    def small_ratios(self) -> list:
        out = []
        for f, d in self.dirs.items():
            for g in groups(f):
                if g != d:
                    out.append(vec_sub(g, d))
        return out

    def witness(self):
        if self._lam is False:
            self._lam = pointed_witness(self.small_ratios())
        return self._lam

    def is_pointed(self) -> bool:
        return self.witness() is not None

    def spectral_vars(self) -> set:
        return {v for v in self.rat.variables() if is_spectral(v)}

    def scale(self, c: RatFun) -> "RegularTerm":
        return RegularTerm(self.rat * c, self.dirs, check=False)

    def __neg__(self) -> "RegularTerm":
        return RegularTerm(-self.rat, self.dirs, check=False)

    def key(self) -> tuple:
        return tuple(sorted((f.to_str(), mono_str(d)) for f, d in self.dirs.items()))

    def __str__(self) -> str:
        if not self.dirs:
            return self.rat.to_str()
        tags = ", ".join(f"{f.to_str()}~{mono_str(d) or '1'}" for f, d in sorted(self.dirs.items(), key=lambda x: x[0].to_str()))
        return f"{self.rat.to_str()} [{tags}]"

    __repr__ = __str__


def dominant_group(f: LaurentPoly, regions) -> Vec:
    """Pick the dominant group of ``f`` from an ordered list of ``(var, Region)``."""
    gs = list(groups(f))

    def key(v):
        d = dict(v)
        return tuple(d.get(x, 0) if r is Region.ZERO else -d.get(x, 0) for x, r in regions)

    keys = sorted(gs, key=key)
    if len(keys) > 1 and key(keys[0]) == key(keys[1]):
        raise NonExpandable(f"regions {regions} do not fix an expansion of {f.to_str()}")
    return keys[0]


def regular_from_ratfun(f: RatFun, regions=()) -> RegularTerm:
    if isinstance(regions, dict):
        regions = list(regions.items())
    regions = [(v, r if isinstance(r, Region) else Region(r)) for v, r in regions]
    f = f.reduced()
    dirs = {}
    for fac in f.den:
        if len(groups(fac)) > 1:
            dirs[fac] = dominant_group(fac, regions)
    t = RegularTerm(f, dirs)
    if not t.is_pointed():
        raise NonExpandable(f"expansion of {f} in {regions} is not well defined")
    return t


def _merge_dirs(a: dict, b: dict, trace: dict) -> dict:
    out = dict(a)
    for f, d in b.items():
        if f in out and out[f] != d:
            raise Divergent(
                f"factor {f.to_str()} expanded in two opposite directions", trace
            )
        out[f] = d
    return out


def regular_mul(a: RegularTerm, b: RegularTerm) -> RegularTerm:
    trace = {"left": str(a), "right": str(b)}
    dirs = _merge_dirs(a.dirs, b.dirs, trace)
    t = RegularTerm.make(a.rat * b.rat, dirs)
    if not t.is_pointed():
        raise Divergent("product of expansions with no common pointed cone", trace)
    return t


def regular_subst(t: RegularTerm, mapping: dict, trace: dict | None = None) -> RegularTerm | None:
    """Substitute ``var -> (coeff, mono)`` in ``t``; None if the result vanishes.

    Raises Divergent when a denominator factor, or its dominant group,
    vanishes under the substitution.
    """
    rat = t.rat
    if not any(v in mapping for v in rat.variables()):
        return t
    trace = trace or {}
    c, m = subst_mono(rat.mono, mapping)
    coeff = rat.coeff * c
    num: dict = {}
    den: dict = {}
    dirs: dict = {}
    for f, k in rat.num.items():
        g = subst_poly_units(f, mapping)
        if g.is_zero():
            return None
        gc, gm, g0 = normalize_factor(g)
        coeff *= gc ** k
        m = mono_mul(m, mono_pow(gm, k))
        if g0 is not None:
            num[g0] = num.get(g0, 0) + k
    for f, k in rat.den.items():
        g = subst_poly_units(f, mapping)
        if g.is_zero():
            raise Divergent(f"denominator {f.to_str()} vanishes on the support", dict(trace, term=str(t)))
        gc, gm, g0 = normalize_factor(g)
        coeff /= gc ** k
        m = mono_mul(m, mono_pow(gm, -k))
        if g0 is None:
            continue
        d = t.dirs.get(f)
        if d is not None:
            nd = vec_sub(subst_vec(d, mapping), spec_vec(gm))
            gs = groups(g0)
            if len(gs) > 1:
                if nd not in gs:
                    raise Divergent(
                        f"dominant part of {f.to_str()} vanishes on the support",
                        dict(trace, term=str(t)),
                    )
                if g0 in dirs and dirs[g0] != nd:
                    raise Divergent(f"factor {g0.to_str()} gets two directions", dict(trace, term=str(t)))
                dirs[g0] = nd
        den[g0] = den.get(g0, 0) + k
    out = RatFun(coeff, m, num, den)
    # factors that became structurally equal cancel here
    n2, d2 = _cancel(out.num, out.den)
    out = RatFun(out.coeff, out.mono, n2, d2)
    res = RegularTerm.make(out, dirs)
    if not res.is_pointed():
        raise Divergent("expansion is not pointed on the support", dict(trace, term=str(t)))
    return res


# -- delta supports ---------------------------------------------------------

@dataclass(frozen=True)
class Support:
    """Relations ``pivot = coeff * mono`` with ``mono`` free of every pivot."""

    rows: tuple  # ((pivot, coeff, mono), ...) sorted by pivot

    @property
    def rank(self) -> int:
        return len(self.rows)

    def mapping(self) -> dict:
        return {p: (c, m) for p, c, m in self.rows}

    def pivots(self) -> tuple:
        return tuple(p for p, _, _ in self.rows)

    def relations(self) -> list:
        """Each row as a unit ``M`` with ``M = 1`` on the support."""
        return [(1 / c, mono_mul(((p, 1),), mono_inv(m))) for p, c, m in self.rows]

    def __str__(self) -> str:
        parts = []
        for p, c, m in self.rows:
            val = RatFun.monomial(m, c).to_str()
            parts.append(f"{p}={val}")
        return ", ".join(parts)


@dataclass(frozen=True)
class AdditiveSupport:
    """The additive delta at ``var = point`` (Yangian only)."""

    var: str
    point: Fraction = Fraction(0)

    @property
    def rank(self) -> int:
        return 1

    def __str__(self) -> str:
        return f"{self.var}={self.point} (additive)"


def make_support(relations: list) -> Support:
    """Echelon form of the relations ``c * m = 1``.

    Raises Divergent for dependent relations and Unsupported when a pivot
    would need an exponent other than +-1.
    """
    rows = []
    for c, m in relations:
        vec = {v: e for v, e in m if is_spectral(v)}
        if not vec:
            raise ValueError(f"delta argument {RatFun.monomial(m, c)} has no spectral variable")
        if any(isinstance(e, Fraction) for e in vec.values()):
            raise Unsupported("fractional spectral exponent in a delta argument")
        rows.append([vec, Fraction(c), const_part(m)])
    cols = sorted({v for r in rows for v in r[0]}, reverse=True)
    pivots: dict = {}
    free_rows = list(range(len(rows)))

    def combine(r, p, e):
        # r := r * p^(-e)
        vec = dict(r[0])
        for v, x in p[0].items():
            s = vec.get(v, 0) - e * x
            if s:
                vec[v] = s
            else:
                vec.pop(v, None)
        return [vec, r[1] * p[1] ** (-e), mono_mul(r[2], mono_pow(p[2], -e))]

    for x in cols:
        cand = [i for i in free_rows if rows[i][0].get(x, 0)]
        if not cand:
            continue
        units = [i for i in cand if abs(rows[i][0][x]) == 1]
        if not units:
            raise Unsupported(f"delta support needs a root of {x}")
        i = units[0]
        if rows[i][0][x] == -1:
            r = rows[i]
            rows[i] = [{v: -e for v, e in r[0].items()}, 1 / r[1], mono_inv(r[2])]
        for j in range(len(rows)):
            if j != i and rows[j][0].get(x, 0):
                rows[j] = combine(rows[j], rows[i], rows[j][0][x])
        pivots[x] = i
        free_rows.remove(i)
    for i in free_rows:
        raise Divergent(
            "product of deltas with dependent arguments",
            {"relations": [RatFun.monomial(m, c).to_str() for c, m in relations]},
        )
    out = []
    for x, i in pivots.items():
        vec, c, cm = rows[i]
        mono = mono_mul(mono_inv(cm), tuple(sorted((v, -e) for v, e in vec.items() if v != x)))
        out.append((x, 1 / c, mono))
    return Support(tuple(sorted(out, key=lambda r: r[0])))


class DeltaTerm:
    __slots__ = ("support", "coeff")

    def __init__(self, support, coeff: RegularTerm):
        self.support = support
        self.coeff = coeff

    def is_zero(self) -> bool:
        return self.coeff.is_zero()

    def __neg__(self) -> "DeltaTerm":
        return DeltaTerm(self.support, -self.coeff)

    def scale(self, c: RatFun) -> "DeltaTerm":
        return DeltaTerm(self.support, self.coeff.scale(c))

    def __str__(self) -> str:
        return f"({self.coeff})*delta[{self.support}]"

    __repr__ = __str__


def _eval_at(r: RatFun, var: str, point) -> RatFun | None:
    """``r`` at ``var = point`` after clearing powers of ``var``; None at a pole.

    The factored form may hide a finite value (``u^-1/(1 - h u^-1)`` at
    ``u = 0``), so numerator and denominator are expanded first.
    """
    num, den = r.numerator(), r.denominator()
    lo = min(num.degree_range(var)[0] if not num.is_zero() else 0, den.degree_range(var)[0])

    def value(p: LaurentPoly) -> RatFun:
        out = ZERO
        for e, c in p.coeffs_in(var).items():
            out = out + RatFun.from_poly(c) * RatFun.const(Fraction(point) ** int(e - lo))
        return out

    d = value(den)
    if d.is_zero():
        return None
    return value(num) / d


def _subst_support(t: RegularTerm, support, trace=None) -> RegularTerm | None:
    if isinstance(support, AdditiveSupport):
        if support.var not in t.rat.variables():
            return t
        rat = _eval_at(t.rat, support.var, support.point)
        if rat is None:
            raise Divergent(f"denominator vanishes at {support}", dict(trace or {}, term=str(t)))
        if rat.is_zero():
            return None
        dirs = {f: d for f, d in t.dirs.items() if not f.depends_on(support.var)}
        return RegularTerm.make(rat, dirs)
    return regular_subst(t, support.mapping(), trace)


def term_mul(a, b):
    """Product of two terms; returns a term or None (zero)."""
    trace = {"left": str(a), "right": str(b)}
    if isinstance(a, RegularTerm) and isinstance(b, RegularTerm):
        return regular_mul(a, b)
    if isinstance(a, RegularTerm):
        a, b = b, a
    if isinstance(b, RegularTerm):
        c = _subst_support(b, a.support, trace)
        if c is None:
            return None
        return DeltaTerm(a.support, regular_mul(c, a.coeff))
    if isinstance(a.support, AdditiveSupport) or isinstance(b.support, AdditiveSupport):
        if a.support == b.support:
            raise Divergent("square of an additive delta", trace)
        raise Unsupported("products of additive deltas")
    try:
        sup = make_support(a.support.relations() + b.support.relations())
    except Divergent as exc:
        raise Divergent(str(exc), dict(trace, **exc.trace)) from exc
    ca = _subst_support(a.coeff, sup, trace)
    cb = _subst_support(b.coeff, sup, trace)
    if ca is None or cb is None:
        return None
    return DeltaTerm(sup, regular_mul(ca, cb))


# -- distributions ---------------------------------------------------------

def _support_key(s) -> tuple:
    if s is None:
        return (0, "")
    return (s.rank, str(s))


class DistExpr:
    """A finite sum of ``RegularTerm`` and ``DeltaTerm`` summands."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable = ()):
        self.terms = tuple(t for t in terms if t is not None and not t.is_zero())

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls) -> "DistExpr":
        return cls(())

    @classmethod
    def one(cls) -> "DistExpr":
        return cls((RegularTerm(ONE),))

    @classmethod
    def const(cls, c) -> "DistExpr":
        return cls((RegularTerm(RatFun.const(c) if not isinstance(c, RatFun) else c),))

    def one_like(self) -> "DistExpr":
        return DistExpr.one()

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "DistExpr":
        other = as_dist(other)
        return DistExpr(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "DistExpr":
        return DistExpr(-t for t in self.terms)

    def __sub__(self, other) -> "DistExpr":
        return self + (-as_dist(other))

    def __rsub__(self, other) -> "DistExpr":
        return as_dist(other) - self

    def __mul__(self, other) -> "DistExpr":
        return dist_mul(self, as_dist(other))

    def __rmul__(self, other) -> "DistExpr":
        return dist_mul(as_dist(other), self)

    def is_zero(self) -> bool:
        return not normalize(self.terms)

    def normalized(self) -> "DistExpr":
        return DistExpr(normalize(self.terms))

    def inverse(self, hint: dict | None = None) -> "DistExpr":
        terms = normalize(self.terms)
        if len(terms) != 1 or not isinstance(terms[0], RegularTerm):
            raise SingularPivot(f"{self} is not an invertible region-tagged rational")
        return DistExpr((regular_inverse(terms[0], hint),))

    def __eq__(self, other) -> bool:
        try:
            other = as_dist(other)
        except TypeError:
            return NotImplemented
        return dist_eq(self, other)

    __hash__ = None

    def substitute(self, mapping: dict) -> "DistExpr":
        """Simultaneous monomial substitution ``var -> RatFun unit``."""
        units = {v: _unit(as_ratfun(t)) for v, t in mapping.items()}
        return DistExpr(_subst_term(t, units) for t in self.terms)

    # -- views ------------------------------------------------------------
    def regular_part(self) -> list:
        return [t for t in self.terms if isinstance(t, RegularTerm)]

    def delta_part(self) -> list:
        return [t for t in self.terms if isinstance(t, DeltaTerm)]

    def as_regular(self) -> RegularTerm | None:
        terms = normalize(self.terms)
        if not terms:
            return RegularTerm(ZERO)
        if len(terms) == 1 and isinstance(terms[0], RegularTerm):
            return terms[0]
        return None

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(str(t) for t in self.terms)

    __repr__ = __str__


def as_ratfun(x) -> RatFun:
    if isinstance(x, RatFun):
        return x
    if isinstance(x, (int, Fraction)):
        return RatFun.const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a rational function")


def as_dist(x) -> DistExpr:
    if isinstance(x, DistExpr):
        return x
    if isinstance(x, RegularTerm) or isinstance(x, DeltaTerm):
        return DistExpr((x,))
    return DistExpr((regular_from_ratfun(as_ratfun(x)),))


def dist_from_ratfun(f: RatFun, regions=()) -> DistExpr:
    return DistExpr((regular_from_ratfun(f, regions),))


def delta(argument, point=None) -> DistExpr:
    """``delta(M)`` for a unit ``M``; ``delta("u", point=a)`` is the additive delta at ``u = a``."""
    if point is not None:
        return DistExpr((DeltaTerm(AdditiveSupport(argument, Fraction(point)), RegularTerm(ONE)),))
    c, m = _unit(as_ratfun(argument))
    return DistExpr((DeltaTerm(make_support([(c, m)]), RegularTerm(ONE)),))


def dist_mul(a: DistExpr, b: DistExpr) -> DistExpr:
    out = []
    for s in a.terms:
        for t in b.terms:
            p = term_mul(s, t)
            if p is not None:
                out.append(p)
    return DistExpr(out)


def dist_eq(a: DistExpr, b: DistExpr) -> bool:
    return (as_dist(a) - as_dist(b)).is_zero()


def _subst_term(t, units: dict):
    if isinstance(t, RegularTerm):
        return regular_subst(t, units)
    if isinstance(t.support, AdditiveSupport):
        if t.support.var in units:
            raise Unsupported("substitution into an additive delta variable")
        c = regular_subst(t.coeff, units)
        return None if c is None else DeltaTerm(t.support, c)
    # rebuild from coefficient times the substituted deltas
    c = regular_subst(t.coeff, units)
    if c is None:
        return None
    rels = [subst_mono(m, units) for m in (mono for _, mono in t.support.relations())]
    rels = [(k / c0, m) for (k, m), (c0, _) in zip(rels, t.support.relations())]
    sup = make_support(rels)
    c2 = _subst_support(c, sup)
    return None if c2 is None else DeltaTerm(sup, c2)


def regular_inverse(t: RegularTerm, hint: dict | None = None) -> RegularTerm:
    """Invert ``t``.  New denominator factors (numerator factors of ``t``)
    expand in the region picked by ``hint`` (a functional ``var -> weight``,
    positive weight meaning the variable is small) when that is consistent,
    else by the witness of ``t``."""
    if t.rat.is_zero():
        raise SingularPivot("inverse of zero")
    if hint is not None:
        try:
            return _inverse_with(t, hint)
        except SingularPivot:
            pass
    lam = t.witness()
    if lam is None:
        raise SingularPivot(f"{t} has no consistent expansion")
    return _inverse_with(t, lam)


def _inverse_with(t: RegularTerm, lam: dict) -> RegularTerm:
    inv = t.rat.inverse()
    dirs = {}
    for f in inv.den:
        gs = list(groups(f))
        if len(gs) < 2:
            continue
        if f in t.dirs:
            continue
        names = sorted({x for g in gs for x, _ in g})
        dirs[f] = min(gs, key=lambda g: (vec_dot(lam, g), tuple(dict(g).get(x, 0) for x in names)))
    out = RegularTerm.make(inv, dirs)
    if not out.is_pointed():
        raise SingularPivot(f"inverse of {t} has no consistent expansion")
    return out


# -- normal form -------------------------------------------------------------

class _FlipFailed(Exception):
    pass


def _flip(t: RegularTerm, f: LaurentPoly, target: Vec, support):
    """Re-expand factor ``f`` of ``t`` with dominant group ``target``.

    Uses ``i_A(1/f) - i_B(1/f) = A^-1 delta(-B/A)`` for ``f = A + B``.
    Returns the re-expanded term and the delta correction (already placed on
    the enlarged support).
    """
    if t.rat.den.get(f) != 1:
        raise _FlipFailed("multiple pole")
    gs = groups(f)
    if len(gs) != 2:
        raise _FlipFailed("factor is not a binomial")
    old = t.dirs[f]
    A = RatFun.from_poly(gs[target])
    B = RatFun.from_poly(gs[old])
    new = RegularTerm(t.rat, {**t.dirs, f: target})
    if not new.is_pointed():
        raise _FlipFailed("re-expanded term is not pointed")
    x = (-(B / A)).reduced()
    if not x.is_unit():
        raise _FlipFailed("delta argument is not a monomial")
    rest_dirs = {g: d for g, d in t.dirs.items() if g != f}
    rest = RegularTerm.make(t.rat * RatFun.from_poly(f) / A, rest_dirs)
    if not rest.is_pointed():
        raise _FlipFailed("remaining factors are not pointed")
    # t_old = t_new - rest * delta(x)
    try:
        if support is None:
            corr = term_mul(-rest, DeltaTerm(make_support([(x.coeff, x.mono)]), RegularTerm(ONE)))
        else:
            corr = term_mul(
                DeltaTerm(support, -rest),
                DeltaTerm(make_support([(x.coeff, x.mono)]), RegularTerm(ONE)),
            )
    except (Divergent, Unsupported) as exc:
        raise _FlipFailed(str(exc)) from exc
    return new, corr


def _unify(coeffs: list, support):
    """Give every shared factor one direction; returns ``(terms, corrections)``."""
    corrections = []
    while True:
        seen: dict = {}
        for t in coeffs:
            for f, d in t.dirs.items():
                seen.setdefault(f, set()).add(d)
        clash = sorted((f for f, ds in seen.items() if len(ds) > 1), key=lambda f: f.to_str())
        if not clash:
            return coeffs, corrections
        f = clash[0]
        for target in sorted(seen[f], key=mono_str):
            try:
                new_terms, new_corr = [], []
                for t in coeffs:
                    if t.dirs.get(f, target) != target:
                        nt, corr = _flip(t, f, target, support)
                        new_terms.append(nt)
                        if corr is not None:
                            new_corr.append(corr)
                    else:
                        new_terms.append(t)
            except _FlipFailed:
                continue
            coeffs = new_terms
            corrections.extend(new_corr)
            break
        else:
            raise Unsupported(f"cannot bring factor {f.to_str()} to a common expansion")


def _merge(coeffs: list) -> list:
    total = ZERO
    dirs: dict = {}
    for t in coeffs:
        total = total + t.rat
        dirs.update(t.dirs)
    if total.is_zero():
        return []
    merged = RegularTerm.make(total, dirs)
    if merged.is_pointed():
        return [merged]
    return coeffs


def normalize(terms) -> list:
    """Canonical sum: one merged coefficient per support, shared directions."""
    buckets: dict = {}
    for t in terms:
        if isinstance(t, RegularTerm):
            key, sup, c = _support_key(None), None, t
        else:
            key, sup, c = _support_key(t.support), t.support, t.coeff
        buckets.setdefault(key, (sup, []))[1].append(c)
    out = []
    while buckets:
        key = min(buckets)
        sup, coeffs = buckets.pop(key)
        coeffs, corrections = _unify(coeffs, sup)
        for corr in corrections:
            k2 = _support_key(corr.support)
            if k2 <= key:
                raise Unsupported("correction term on a smaller support")
            buckets.setdefault(k2, (corr.support, []))[1].append(corr.coeff)
        for c in _merge(coeffs):
            out.append(c if sup is None else DeltaTerm(sup, c))
    return out


# -- truncation oracle -------------------------------------------------------

def _vec_key(v: Vec) -> Mono:
    return tuple(sorted(v))


def _series_mul(a: dict, b: dict, lam: dict, budget) -> dict:
    out: dict = {}
    for va, ca in a.items():
        da = vec_dot(lam, va)
        for vb, cb in b.items():
            if da + vec_dot(lam, vb) > budget:
                continue
            v = vec_add(va, vb)
            s = out.get(v, ZERO) + ca * cb
            if s.is_zero():
                out.pop(v, None)
            else:
                out[v] = s
    return out




def _binom_coeff(k: int, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out = out * (-k - i) / (i + 1)
    return out


def _regular_coeffs(t: RegularTerm, windows: dict) -> dict:
    """Coefficients of ``t`` on the box ``windows``: ``{vec: RatFun in constants}``."""
    rat = t.rat
    svars = sorted(t.spectral_vars())
    for v in svars:
        if v not in windows:
            raise KeyError(f"no truncation window for {v}")
    lam = t.witness()
    if lam is None:
        raise Divergent(f"{t} has no consistent expansion", {"term": str(t)})
    lmax = sum(max(lam.get(v, 0) * lo, lam.get(v, 0) * hi) for v, (lo, hi) in windows.items())
    # numerator, grouped by spectral vector
    num: dict = {}
    for m, c in rat.numerator().terms.items():
        v = spec_vec(m)
        num[v] = num.get(v, ZERO) + RatFun.monomial(const_part(m), c)
    base: Vec = ()
    base_c = ONE
    factors = []
    for f, k in rat.den.items():
        gs = groups(f)
        if len(gs) < 2:
            base_c = base_c * RatFun.from_poly(f) ** (-k)
            continue
        d = t.dirs[f]
        dpoly = groups(f)[d]
        dconst = RatFun.from_poly(LaurentPoly._raw({const_part(m): c for m, c in dpoly.terms.items()}))
        base = vec_add(base, mono_pow(d, -k))
        base_c = base_c * dconst ** (-k)
        x = {}
        for g, gp in gs.items():
            if g == d:
                continue
            gc = RatFun.from_poly(LaurentPoly._raw({const_part(m): c for m, c in gp.terms.items()}))
            x[vec_sub(g, d)] = gc / dconst
        factors.append((x, k))
    if not num:
        return {}
    budget = lmax - vec_dot(lam, base) - min(vec_dot(lam, v) for v in num)
    series = {(): ONE}
    for x, k in factors:
        if budget < 0:
            return {}
        # (1 + X)^-k truncated at lam-degree budget
        s = {(): ONE}
        power = {(): ONE}
        j = 0
        while True:
            j += 1
            power = _series_mul(power, x, lam, budget)
            if not power:
                break
            coef = RatFun.const(_binom_coeff(k, j))
            for v, c in power.items():
                s[v] = s.get(v, ZERO) + coef * c
        series = _series_mul(series, s, lam, budget)
    out: dict = {}
    for vn, cn in num.items():
        for vs, cs in series.items():
            v = vec_add(vec_add(vn, vs), base)
            d = dict(v)
            if all(lo <= d.get(x, 0) <= hi for x, (lo, hi) in windows.items()) and all(x in windows for x in d):
                s = out.get(v, ZERO) + cn * cs * base_c
                if s.is_zero():
                    out.pop(v, None)
                else:
                    out[v] = s
    return out


def _delta_coeffs(t: DeltaTerm, windows: dict) -> dict:
    sup = t.support
    if isinstance(sup, AdditiveSupport):
        raise Unsupported("additive deltas have no bilateral truncation")
    rows = sup.rows
    pivots = [p for p, _, _ in rows]
    for p in pivots:
        if p not in windows:
            raise KeyError(f"no truncation window for {p}")
    free = {v: w for v, w in windows.items() if v not in pivots}
    # enlarge free windows by the shifts value^-k over the pivot ranges
    big = dict(free)
    for v in list(free) + sorted(t.coeff.spectral_vars() - set(free)):
        lo, hi = free.get(v, (0, 0))
        shift_lo, shift_hi = 0, 0
        for p, c, m in rows:
            e = mono_deg(m, v)
            plo, phi = windows[p]
            a, b = e * plo, e * phi
            shift_lo += min(a, b)
            shift_hi += max(a, b)
        big[v] = (lo + shift_lo, hi + shift_hi)
    cc = _regular_coeffs(t.coeff, big)
    out: dict = {}
    ranges = [range(windows[p][0], windows[p][1] + 1) for p in pivots]
    for ks in iproduct(*ranges):
        shift = Fraction(1)
        smono: Mono = tuple((p, k) for p, k in zip(pivots, ks) if k)
        for (p, c, m), k in zip(rows, ks):
            shift *= c ** (-k)
            smono = mono_mul(smono, mono_pow(m, -k))
        sv, sc = spec_vec(smono), RatFun.monomial(const_part(smono), shift)
        for v, c in cc.items():
            nv = vec_add(v, sv)
            d = dict(nv)
            if all(x in windows and windows[x][0] <= e <= windows[x][1] for x, e in d.items()):
                s = out.get(nv, ZERO) + c * sc
                if s.is_zero():
                    out.pop(nv, None)
                else:
                    out[nv] = s
    return out


def truncate(a: DistExpr, windows: dict) -> dict:
    """Exact coefficients ``{spectral monomial: RatFun}`` inside the box ``windows``."""
    out: dict = {}
    for t in as_dist(a).terms:
        part = _regular_coeffs(t, windows) if isinstance(t, RegularTerm) else _delta_coeffs(t, windows)
        for v, c in part.items():
            s = out.get(v, ZERO) + c
            if s.is_zero():
                out.pop(v, None)
            else:
                out[v] = s
    return out


def tables_equal(a: dict, b: dict) -> bool:
    return all((a.get(k, ZERO) - b.get(k, ZERO)).is_zero() for k in a.keys() | b.keys())


def convolve(a: dict, b: dict, windows: dict) -> dict:
    """Windowed product of two coefficient tables."""
    out: dict = {}
    for va, ca in a.items():
        for vb, cb in b.items():
            v = vec_add(va, vb)
            d = dict(v)
            if all(x in windows and windows[x][0] <= e <= windows[x][1] for x, e in d.items()):
                s = out.get(v, ZERO) + ca * cb
                if s.is_zero():
                    out.pop(v, None)
                else:
                    out[v] = s
    return out


# -- limits ------------------------------------------------------------------

@dataclass
class LimitFamily:
    """Terms ``t * var**(slope * N)`` for a formal positive integer ``N``."""

    items: list = field(default_factory=list)  # [(term, var or None, slope)]

    @classmethod
    def of(cls, expr: DistExpr, var: str | None = None, slope: int = 0) -> "LimitFamily":
        return cls([(t, var, slope) for t in as_dist(expr).terms])

    def __add__(self, other: "LimitFamily") -> "LimitFamily":
        return LimitFamily(self.items + other.items)

    def __mul__(self, other: "LimitFamily") -> "LimitFamily":
        out = []
        for s, v, a in self.items:
            for t, w, b in other.items:
                if v is not None and w is not None and v != w and a and b:
                    raise Unsupported("product of families sloped in different variables")
                p = term_mul(s, t)
                if p is not None:
                    out.append((p, v if a else w, a + b))
        return LimitFamily(out)

    def at(self, n: int) -> DistExpr:
        """The member of the family at ``N = n``."""
        out = []
        for t, v, s in self.items:
            if v is None or not s:
                out.append(t)
            else:
                out.append(term_mul(t, RegularTerm(RatFun.var(v, s * n))))
        return DistExpr(out)


def _q_degree(c: RatFun):
    if any(v != "q" for v, _ in c.mono):
        return None
    return mono_deg(c.mono, "q")


def _limit_term(t: RegularTerm, var: str, slope: int) -> list:
    pf = rf_partial_fractions(t.rat, var)
    out = []
    for pole in pf.poles:
        if any(is_spectral(v) for v, _ in pole.c.mono):
            raise Unsupported(f"pole 1 - ({pole.c})*{var} involves other spectral variables")
        f = (ONE - pole.c * RatFun.var(var))
        _, _, f0 = normalize_factor(f.numerator())
        d = t.dirs.get(f0)
        if d is None:
            raise NonExpandable(f"no direction for pole factor {f0.to_str()}")
        gs = groups(f0)
        low = min(gs, key=lambda g: dict(g).get(var, 0))
        region = Region.ZERO if d == low else Region.INFINITY
        grows = slope < 0 if region is Region.ZERO else slope > 0
        if not grows:
            continue
        qd = _q_degree(pole.c)
        if qd is None or (qd == 0 and pole.c.coeff != 1):
            raise Unsupported(f"limit with pole at {var} = 1/({pole.c}) is not covered")
        if region is Region.INFINITY:
            qd = -qd
        if qd > 0:
            continue
        if qd < 0:
            raise Divergent(f"coefficients grow like powers of ({pole.c})", {"term": str(t)})
        if pole.order > 1:
            raise Divergent(f"pole of order {pole.order} at {var} = 1 tends to a divergent sum", {"term": str(t)})
        num = RegularTerm.make(pole.numerator, t.dirs)
        sign = 1 if region is Region.ZERO else -1
        out.append(term_mul(num.scale(RatFun.const(sign)), DeltaTerm(make_support([(Fraction(1), ((var, 1),))]), RegularTerm(ONE))))
    return out


def limit(family: LimitFamily) -> DistExpr:
    """Coefficient-wise limit ``N -> oo`` in the ``|q| < 1`` regime."""
    out = []
    for t, var, slope in family.items:
        if var is None or not slope:
            out.append(t)
            continue
        if not isinstance(t, RegularTerm):
            raise Unsupported("limits of delta terms with a sloped variable")
        out.extend(_limit_term(t, var, slope))
    return DistExpr(out)


@dataclass
class LimitDemo:
    """The three limits of the non-commuting example, with their truncations."""

    up: DistExpr  # lim z^N S
    down: DistExpr  # lim z^-N S
    of_product: DistExpr  # lim (z^N S)(z^-N S)
    product_of_limits: DistExpr
    tables: dict


def limit_demo(window: tuple[int, int] = (-8, 8)) -> LimitDemo:
    """``S = iota_0(1/(1-z))`` pushed up and down by ``z^(+-N)``."""
    z = RatFun.var("z")
    S = dist_from_ratfun(ONE / (ONE - z), [("z", Region.ZERO)])
    fu, fd = LimitFamily.of(S, "z", 1), LimitFamily.of(S, "z", -1)
    up, down = limit(fu), limit(fd)
    of_product = limit(fu * fd)
    product_of_limits = up * down
    w = {"z": window}
    tables = {k: truncate(v, w) for k, v in
              (("up", up), ("down", down), ("of_product", of_product), ("product_of_limits", product_of_limits))}
    return LimitDemo(up, down, of_product, product_of_limits, tables)
