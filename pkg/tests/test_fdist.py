import random

import pytest
from hypothesis import given, strategies as st

from qcv.arith.ratfun import ONE, RatFun
from qcv.arith.series import Region
from qcv.errors import Divergent, QcvError
from qcv.fdist import (
    DistExpr,
    LimitFamily,
    delta,
    dist_eq,
    dist_from_ratfun,
    dist_mul,
    limit,
    limit_demo,
    tables_equal,
    truncate,
)

from distgen import associative, product_matches_convolution, random_dist

q, z, w, u = RatFun.var("q"), RatFun.var("z"), RatFun.var("w"), RatFun.var("u")
Z0 = [("z", Region.ZERO)]
ZI = [("z", Region.INFINITY)]


def iota0(f):
    return dist_from_ratfun(f, Z0)


class TestConstruction:
    def test_expansion(self):
        t = truncate(iota0(ONE / (ONE - z)), {"z": (-2, 2)})
        assert sorted(dict(k).get("z", 0) for k in t) == [0, 1, 2]

    def test_delta_support(self):
        t = truncate(delta(z), {"z": (-2, 2)})
        assert len(t) == 5 and all(c == ONE for c in t.values())

    def test_constant_delta_rejected(self):
        with pytest.raises(ValueError):
            delta(RatFun.const(2))


class TestProducts:
    def test_zero_at_support(self):
        assert dist_mul(DistExpr.const(ONE - z), delta(z)).is_zero()

    def test_pole_on_support_diverges(self):
        with pytest.raises(Divergent) as err:
            dist_mul(iota0(ONE / (ONE - z)), delta(z))
        assert err.value.trace

    def test_regular_pole_off_support(self):
        # frozen: coefficients of the product are sum_{m>=0} q^(2m) = 1/(1-q^2)
        got = dist_mul(iota0(ONE / (ONE - q ** 2 * z)), delta(z))
        assert dist_eq(got, DistExpr.const(ONE / (ONE - q ** 2)) * delta(z))

    def test_dependent_deltas_diverge(self):
        with pytest.raises(Divergent):
            delta(z) * delta(z)
        with pytest.raises(Divergent):
            delta(z / w) * delta(q * z / w)

    def test_independent_deltas(self):
        d = delta(z / w) * delta(w)
        assert dist_eq(d, delta(z) * delta(w))

    def test_additive_delta(self):
        d = delta("u", point=0)
        assert (DistExpr.const(u) * d).is_zero()
        h = RatFun.var("h")
        got = dist_from_ratfun(ONE / (u - h), [("u", Region.ZERO)]) * d
        assert dist_eq(got, DistExpr.const(-ONE / h) * d)

    @pytest.mark.parametrize("regions", [Z0, ZI])
    def test_substitution_ignores_region(self, regions):
        f = dist_from_ratfun((ONE + q * z) / (ONE - q ** 2 * z), regions)
        a = q ** 3
        got = f * delta(z / a)
        want = DistExpr.const((ONE + q * a) / (ONE - q ** 2 * a)) * delta(z / a)
        assert dist_eq(got, want)


class TestEquality:
    def test_inverse_argument(self):
        assert dist_eq(delta(z / w), delta(w / z))

    def test_region_difference_is_delta(self):
        f = ONE / (ONE - z)
        assert dist_eq(iota0(f) - dist_from_ratfun(f, ZI), delta(z))

    def test_zero_neutral(self):
        a = iota0(ONE / (ONE - q * z))
        assert dist_eq(a + DistExpr.zero(), a)


class TestLimits:
    def test_up(self):
        assert limit(LimitFamily.of(iota0(ONE / (ONE - z)), "z", 1)).is_zero()

    def test_down(self):
        assert dist_eq(limit(LimitFamily.of(iota0(ONE / (ONE - z)), "z", -1)), delta(z))

    def test_down_q_pole(self):
        assert limit(LimitFamily.of(iota0(ONE / (ONE - q ** 2 * z)), "z", -1)).is_zero()

    @pytest.mark.parametrize("N", [4, 8, 16])
    def test_samples_match(self, N):
        win = {"z": (-3, 3)}
        fam = LimitFamily.of(iota0(ONE / (ONE - z)), "z", -1)
        assert tables_equal(truncate(fam.at(N), win), truncate(delta(z), win))
        fam = LimitFamily.of(iota0(ONE / (ONE - q ** 2 * z)), "z", -1)
        # coefficient of z^k is q^(2(k+N)): its q-degree grows with N
        for c in truncate(fam.at(N), win).values():
            assert dict(c.mono)["q"] >= 2 * (N - 3)

    def test_demo_triple(self):
        d = limit_demo()
        assert d.up.is_zero() and d.product_of_limits.is_zero()
        assert dist_eq(d.down, delta(z))
        assert dist_eq(d.of_product, iota0(ONE / (ONE - z) ** 2))


@given(st.integers(0, 10 ** 6))
def test_product_commutes_and_distributes(seed):
    rng = random.Random(seed)
    a, b, c = random_dist(rng), random_dist(rng), random_dist(rng)
    try:
        ab, ba = a * b, b * a
        lhs, rhs = a * (b + c), a * b + a * c
    except QcvError:
        return
    assert dist_eq(ab, ba)
    assert dist_eq(lhs, rhs)


@given(st.integers(0, 10 ** 6))
def test_truncation_oracle(seed):
    rng = random.Random(seed)
    assert product_matches_convolution(random_dist(rng), random_dist(rng)) in (True, None)


@given(st.integers(0, 10 ** 6))
def test_associative_without_divergence(seed):
    rng = random.Random(seed)
    assert associative(random_dist(rng), random_dist(rng), random_dist(rng)) in (True, None)
