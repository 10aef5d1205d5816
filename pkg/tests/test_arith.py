from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qcv.arith.poly import LaurentPoly
from qcv.arith.ratfun import ONE, ZERO, RatFun, rf_arith, rf_eq, rf_substitute
from qcv.arith.series import Region, rf_expand, rf_partial_fractions
from qcv.arith.vars import VarTable
from qcv.errors import DivisionByZero, ExponentDenominator, UnsupportedDenominator

q, z, w = RatFun.var("q"), RatFun.var("z"), RatFun.var("w")


def g11(x):
    return (q ** 2 * x - ONE) / (x - q ** 2)


# small random rational functions in q, z
@st.composite
def laurent(draw):
    terms = draw(st.lists(
        st.tuples(st.integers(-3, 3), st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=3))
    out = ZERO
    for c, a, b in terms:
        out = out + RatFun.const(c) * q ** a * z ** b
    return out


@st.composite
def ratfun(draw):
    num = draw(laurent())
    den = draw(laurent())
    if den.is_zero():
        den = ONE
    return num / den


class TestArith:
    def test_common_denominator(self):
        assert rf_eq(ONE / (ONE - z) + z / (ONE - z), (ONE + z) / (ONE - z))

    def test_annihilator(self):
        assert rf_arith("mul", g11(z), ZERO).is_zero()

    def test_trig_entry_forms_agree(self):
        a = (q - q.inverse()) / (q * z - q.inverse())
        b = (ONE - q ** 2) / (ONE - q ** 2 * z)
        assert rf_arith("sub", a, b).is_zero()
        assert rf_eq(a, b)

    def test_eq_basics(self):
        assert rf_eq(z / z, ONE)
        assert not rf_eq(ONE / (ONE - z), ONE / (ONE - q * z))

    def test_division_by_zero(self):
        with pytest.raises(DivisionByZero):
            rf_arith("div", ONE, z - z)

    def test_substitute_shift(self):
        assert rf_eq(rf_substitute(ONE / (ONE - z), "z", q ** 2 * z), ONE / (ONE - q ** 2 * z))

    def test_substitute_ratio(self):
        got = rf_substitute(g11(z), "z", z / w)
        assert rf_eq(got, (q ** 2 * z / w - ONE) / (z / w - q ** 2))

    def test_fractional_exponent_guard(self):
        table = VarTable(("q", "kappa", "h", "z"), {"q": 2})
        half = RatFun.monomial((("z", Fraction(1, 2)),))
        with pytest.raises(ExponentDenominator):
            rf_substitute(ONE / (ONE - z), "z", half, table)
        table.check_exponent("q", Fraction(-1, 2))

    def test_partial_fractions_two_poles(self):
        pf = rf_partial_fractions(ONE / ((ONE - z) * (ONE - q ** 2 * z)), "z")
        # frozen from an independent CAS: 1/(1-q^2) / (1-z) + q^2/(q^2-1) / (1-q^2 z)
        coeffs = {p.c.to_str(): p.numerator for p in pf.poles}
        assert rf_eq(coeffs["1"], ONE / (ONE - q ** 2))
        assert rf_eq(coeffs["q^2"], q ** 2 / (q ** 2 - ONE))
        assert pf.polynomial.is_zero()

    def test_partial_fractions_single(self):
        pf = rf_partial_fractions(ONE / (ONE - z), "z")
        assert pf.polynomial.is_zero() and len(pf.poles) == 1

    def test_partial_fractions_rejects_trinomial(self):
        with pytest.raises(UnsupportedDenominator):
            rf_partial_fractions(ONE / (ONE - z - z ** 2), "z")

    def test_expand_zero(self):
        s = rf_expand(ONE / (ONE - z), "z", Region.ZERO, (0, 3))
        assert [s[k] for k in range(4)] == [ONE] * 4

    def test_expand_infinity(self):
        s = rf_expand(ONE / (ONE - z), "z", Region.INFINITY, (-4, -1))
        assert all(rf_eq(s[k], -ONE) for k in range(-4, 0))
        assert s[0].is_zero()

    def test_expand_geometric(self):
        s = rf_expand(ONE / (ONE - q ** 2 * z), "z", Region.ZERO, (0, 2))
        assert [s[0], s[1], s[2]] == [ONE, q ** 2, q ** 4]

    def test_opposite_regions_differ(self):
        f = ONE / (ONE - z)
        a = rf_expand(f, "z", Region.ZERO, (-3, 3))
        b = rf_expand(f, "z", Region.INFINITY, (-3, 3))
        assert a[0] == ONE and b[0].is_zero()


@given(ratfun(), ratfun(), ratfun())
def test_field_axioms(a, b, c):
    assert rf_eq(a + b, b + a)
    assert rf_eq(a * (b + c), a * b + a * c)
    assert rf_eq((a * b) * c, a * (b * c))
    assert rf_eq(a - a, ZERO)
    if not b.is_zero():
        assert rf_eq((a / b) * b, a)


@given(ratfun(), ratfun())
def test_eq_is_congruence(a, b):
    # a rewritten through a nontrivial identity stays equal
    a2 = (a * (ONE + z)) / (ONE + z)
    assert rf_eq(a2, a)
    assert rf_eq(a2 + b, a + b) and rf_eq(a2 * b, a * b)


@given(st.lists(st.tuples(st.integers(-2, 2).filter(bool), st.integers(1, 2)), min_size=1, max_size=3),
       st.integers(-2, 2))
def test_partial_fractions_recombine(poles, shift):
    f = z ** shift
    for qa, m in poles:
        f = f / (ONE - q ** qa * z) ** m
    pf = rf_partial_fractions(f, "z")
    assert rf_eq(pf.recombine(), f)


@given(st.integers(0, 3), st.integers(1, 3))
def test_expand_product_is_convolution(a, b):
    f = ONE / (ONE - q ** a * z)
    g = (ONE + z) / (ONE - q ** b * z) ** 2
    lo, hi = 0, 6
    sf, sg = rf_expand(f, "z", Region.ZERO, (lo, hi)), rf_expand(g, "z", Region.ZERO, (lo, hi))
    sfg = rf_expand(f * g, "z", Region.ZERO, (lo, hi))
    assert sf.mul(sg, lo, hi).equals(sfg)


def test_laurent_poly_canonical():
    p = LaurentPoly.var("z") + LaurentPoly.var("z") - LaurentPoly.var("z") * LaurentPoly.const(2)
    assert p.is_zero() and len(p) == 0
