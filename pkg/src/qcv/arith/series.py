"""Region expansions, partial fractions and q-Pochhammer coefficients.

Everything here works one variable at a time: a ``RatFun`` is viewed as a
function of ``var`` whose coefficients are ``RatFun`` in the other symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from qcv.arith.poly import LaurentPoly, mono_deg, mono_drop, mono_inv, mono_mul
from qcv.arith.ratfun import ONE, ZERO, RatFun
from qcv.errors import NonExpandable, UnsupportedDenominator


class Region(Enum):
    ZERO = "Zero"
    INFINITY = "Infinity"

    def flip(self) -> "Region":
        return Region.INFINITY if self is Region.ZERO else Region.ZERO

    def __str__(self) -> str:
        return self.value


@dataclass
class TruncatedSeries:
    """Coefficients of ``var**k`` for ``lo <= k <= hi``; missing keys are zero."""

    var: str
    lo: int
    hi: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = [k for k in self.coeffs if not self.lo <= k <= self.hi]
        if bad:
            raise ValueError(f"exponents {bad} outside window [{self.lo}, {self.hi}]")
        self.coeffs = {k: c for k, c in self.coeffs.items() if not c.is_zero()}

    def __getitem__(self, k: int) -> RatFun:
        return self.coeffs.get(k, ZERO)

    def window(self) -> range:
        return range(self.lo, self.hi + 1)

    def restrict(self, lo: int, hi: int) -> "TruncatedSeries":
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        return TruncatedSeries(self.var, lo, hi, {k: c for k, c in self.coeffs.items() if lo <= k <= hi})

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        out = {k: self[k] + other[k] for k in range(lo, hi + 1)}
        return TruncatedSeries(self.var, lo, hi, out)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + other.scale(RatFun.const(-1))

    def scale(self, c: RatFun) -> "TruncatedSeries":
        return TruncatedSeries(self.var, self.lo, self.hi, {k: v * c for k, v in self.coeffs.items()})

    def mul(self, other: "TruncatedSeries", lo: int, hi: int) -> "TruncatedSeries":
        """Product on ``[lo, hi]``; the caller guarantees both inputs are one-sided
        enough that the window is exact (e.g. both power series from ``lo = 0``)."""
        out: dict = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                if lo <= i + j <= hi:
                    out[i + j] = out.get(i + j, ZERO) + a * b
        return TruncatedSeries(self.var, lo, hi, out)

    def equals(self, other: "TruncatedSeries") -> bool:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return all(self[k] == other[k] for k in range(lo, hi + 1))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"({self.coeffs[k]})*{self.var}^({k})" for k in sorted(self.coeffs))


def _split(p: LaurentPoly, var: str) -> dict:
    out = {}
    for e, c in p.coeffs_in(var).items():
        if isinstance(e, Fraction):
            raise NonExpandable(f"fractional power {var}^{e}")
        out[e] = RatFun.from_poly(c)
    return out


def _inverse_power_series(d: dict, order: int) -> list:
    """Coefficients 0..order of 1/sum(d[k] v^k), where min(d) == 0."""
    d0 = d.get(0, ZERO)
    if d0.is_zero():
        raise NonExpandable("pivot coefficient vanishes")
    inv0 = d0.inverse()
    out = [inv0]
    for k in range(1, order + 1):
        acc = ZERO
        for j, dj in d.items():
            if 1 <= j <= k:
                acc = acc + dj * out[k - j]
        out.append(-(acc * inv0))
    return out


def _expand_zero(num: dict, den: dict, lo: int, hi: int) -> dict:
    dlo = min(den)
    den = {k - dlo: c for k, c in den.items()}
    num = {k - dlo: c for k, c in num.items()}
    nlo = min(num)
    order = hi - nlo
    if order < 0:
        return {}
    inv = _inverse_power_series(den, order)
    out: dict = {}
    for e, c in num.items():
        for k in range(max(0, lo - e), hi - e + 1):
            out[e + k] = out.get(e + k, ZERO) + c * inv[k]
    return out


def rf_expand(a: RatFun, var: str, region: Region, window: tuple[int, int]) -> TruncatedSeries:
    """Expand ``a`` in ``var`` near zero or near infinity, keeping ``window``."""
    lo, hi = window
    if a.is_zero():
        return TruncatedSeries(var, lo, hi, {})
    num = _split(a.numerator(), var)
    den = _split(a.denominator(), var)
    if region is Region.ZERO:
        coeffs = _expand_zero(num, den, lo, hi)
    else:
        num = {-k: c for k, c in num.items()}
        den = {-k: c for k, c in den.items()}
        coeffs = {-k: c for k, c in _expand_zero(num, den, -hi, -lo).items()}
    return TruncatedSeries(var, lo, hi, {k: c for k, c in coeffs.items() if lo <= k <= hi})


# -- partial fractions -----------------------------------------------------

@dataclass(frozen=True)
class Pole:
    """``numerator / (1 - c*var)**order``; ``c`` is a unit free of ``var``."""

    c: RatFun
    order: int
    numerator: RatFun

    def as_ratfun(self, var: str) -> RatFun:
        return self.numerator * (ONE - self.c * RatFun.var(var)) ** (-self.order)


@dataclass(frozen=True)
class PartialFractions:
    var: str
    polynomial: RatFun
    poles: tuple[Pole, ...]

    def recombine(self) -> RatFun:
        out = self.polynomial
        for p in self.poles:
            out = out + p.as_ratfun(self.var)
        return out


def binomial_root(f: LaurentPoly, var: str):
    """Write ``f`` as ``unit * (1 - c*var)`` and return ``(unit, c)``.

    Raises UnsupportedDenominator unless ``f`` has exactly two terms whose
    ``var``-degrees differ by one.
    """
    if len(f.terms) != 2:
        raise UnsupportedDenominator(f"factor {f.to_str()} is not a binomial in {var}")
    (m1, c1), (m2, c2) = sorted(f.terms.items(), key=lambda t: mono_deg(t[0], var))
    e1, e2 = mono_deg(m1, var), mono_deg(m2, var)
    if e2 - e1 != 1 or isinstance(e1, Fraction):
        raise UnsupportedDenominator(f"factor {f.to_str()} is not of the form 1 - c*{var}")
    unit = RatFun.monomial(m1, c1)
    c = RatFun.monomial(mono_drop(mono_mul(m2, mono_inv(m1)), var), -c2 / c1)
    return unit, c


def _unit_key(u: RatFun):
    return (u.coeff, u.mono)


def pole_structure(a: RatFun, var: str):
    """Return ``(rest, poles)`` with ``a = rest * prod (1 - c v)**-m``.

    ``rest`` has no ``var`` in its denominator; ``poles`` maps a key to ``(c, m)``.
    """
    rest = RatFun(a.coeff, a.mono, a.num, {f: k for f, k in a.den.items() if not f.depends_on(var)})
    poles: dict = {}
    for f, k in a.den.items():
        if not f.depends_on(var):
            continue
        unit, c = binomial_root(f, var)
        rest = rest * unit ** (-k)
        key = _unit_key(c)
        c0, m0 = poles.get(key, (c, 0))
        poles[key] = (c0, m0 + k)
    return rest, poles


def rf_partial_fractions(a: RatFun, var: str) -> PartialFractions:
    a = a.reduced()
    rest, poles = pole_structure(a, var)
    v = RatFun.var(var)
    t = RatFun.var("_t")
    parts = []
    for key, (c, m) in sorted(poles.items(), key=lambda kv: str(kv[1][0])):
        # h(t) = a * (1 - c v)^m at v = (1 - t)/c, expanded in t near 0
        h = rest
        for key2, (c2, m2) in poles.items():
            if key2 != key:
                h = h * (ONE - c2 * v) ** (-m2)
        # (1 - c v) = t, so principal part coefficients are the t-series of h
        h = h.substitute(var, (ONE - t) / c)
        ser = rf_expand(h, "_t", Region.ZERO, (0, m - 1))
        for k in range(m):
            coef = ser[k]
            if not coef.is_zero():
                parts.append(Pole(c, m - k, coef))
    poly = a
    for p in parts:
        poly = poly - p.as_ratfun(var)
    poly = poly.reduced()
    if var in poly.den_variables():
        raise UnsupportedDenominator(f"polynomial part of {a} kept a {var}-pole")
    return PartialFractions(var, poly, tuple(parts))


# -- q-Pochhammer coefficients --------------------------------------------

def qpoch_finite(p: RatFun, m: int) -> RatFun:
    """``(p; p)_m = prod_{k=1..m} (1 - p^k)``."""
    out = ONE
    for k in range(1, m + 1):
        out = out * (ONE - p ** k)
    return out


def qpoch_series(shift: RatFun, p: RatFun, var: str, order: int, inverse: bool = False) -> TruncatedSeries:
    """Coefficients of ``(var*shift; p)_inf`` or its reciprocal up to ``var**order``.

    Uses Euler's expansions, so each coefficient is an exact rational function
    of the constants rather than a truncated q-series.
    """
    out = {}
    for m in range(order + 1):
        if inverse:
            out[m] = shift ** m / qpoch_finite(p, m)
        else:
            sign = -1 if m % 2 else 1
            out[m] = RatFun.const(sign) * shift ** m * p ** (m * (m - 1) // 2) / qpoch_finite(p, m)
    return TruncatedSeries(var, 0, order, out)
