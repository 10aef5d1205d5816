from fractions import Fraction

import pytest

from qcv.arith.ratfun import ONE, RatFun, rf_eq
from qcv.arith.series import Region, rf_expand
from qcv.fdist import DistExpr, delta, dist_eq, dist_from_ratfun, truncate
from qcv.rmatrix import (
    MULTIPLICATIVE,
    RMatrixSpec,
    build_gauss_factors,
    build_scalar_prefactor,
    build_singular_RD,
    build_trig_R,
    build_twist_G,
    build_twisted_R,
    build_U_diag,
    build_yangian_R,
    build_yangian_RD,
    check_singular_props,
    check_ybe,
    limit_factors,
    limit_twisted_gauss,
    swap_unitarity_scalar,
    ybe_mismatch,
    ybe_sides,
)
from qcv.tensor import RingMatrix, is_diagonal, is_unit_lower, is_unit_upper, mat_product

q, z, u, h = RatFun.var("q"), RatFun.var("z"), RatFun.var("u"), RatFun.var("h")
qi = q.inverse()
Z0 = [("z", Region.ZERO)]


def at(m, r, c):
    """1-based flat entry, zero when absent."""
    return m.get(r - 1, c - 1, RatFun(0))


class TestTrig:
    # sl2 entries, scalar factor stripped
    SL2 = {
        (1, 1): ONE, (4, 4): ONE,
        (2, 2): q * (ONE - z) / (ONE - q ** 2 * z),
        (2, 3): (ONE - q ** 2) / (ONE - q ** 2 * z),
        (3, 2): (ONE - q ** 2) * z / (ONE - q ** 2 * z),
        (3, 3): q * (ONE - z) / (ONE - q ** 2 * z),
    }

    def test_sl2_entries(self):
        M = build_trig_R(2).matrix
        for r in range(1, 5):
            for c in range(1, 5):
                assert rf_eq(at(M, r, c), self.SL2.get((r, c), RatFun(0))), (r, c)

    @pytest.mark.parametrize("n", [2, 3])
    def test_diagonal_ones(self, n):
        M = build_trig_R(n).matrix
        assert at(M, 1, 1) == ONE and at(M, n * n, n * n) == ONE

    def test_unitarity_guard(self):
        P = swap_unitarity_scalar(2)
        assert is_diagonal(P)
        assert all(rf_eq(v, P.get(0, 0)) for v in (P.get(k, k) for k in range(4)))


class TestGauss:
    def test_sl2_factors(self):
        g = build_gauss_factors(2)
        assert rf_eq(at(g.upper, 2, 3), (qi - q) / (ONE - z))
        assert rf_eq(at(g.diag, 2, 2), q * (ONE - q ** -2 * z) / (ONE - z))
        assert rf_eq(at(g.diag, 3, 3), q * (ONE - z) / (ONE - q ** 2 * z))
        assert rf_eq(at(g.lower, 3, 2), (qi - q) * z / (ONE - z))

    def test_n3_recombines(self):
        g = build_gauss_factors(3)
        assert g.product() == build_trig_R(3).matrix
        assert is_unit_upper(g.upper) and is_unit_lower(g.lower)


class TestTwists:
    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_G_sl2(self, N):
        G = build_twist_G(2, N)
        geo = sum((z ** k for k in range(2 * N)), RatFun(0))
        assert rf_eq(at(G, 2, 3), (qi - q) * geo)
        assert rf_eq(at(G, 2, 3), (qi - q) * (ONE - z ** (2 * N)) / (ONE - z))

    def test_U_sl2(self):
        U = build_U_diag(2)
        assert [at(U, k, k) for k in range(1, 5)] == [ONE, z.inverse(), z, ONE]

    @pytest.mark.parametrize("n,N", [(2, 1), (3, 2)])
    def test_three_constructions(self, n, N):
        c = build_twisted_R(n, N, "closed_form")
        assert build_twisted_R(n, N, "twist") == c
        assert build_twisted_R(n, N, "conjugation") == c

    def test_N0_conjugation(self):
        assert build_twisted_R(2, 0, "conjugation") == build_trig_R(2).matrix


class TestYBE:
    @pytest.mark.parametrize("n", [2, 3])
    def test_trig(self, n):
        assert check_ybe(build_trig_R(n))

    def test_twisted(self):
        assert check_ybe(RMatrixSpec(2, MULTIPLICATIVE, build_twisted_R(2, 1)))

    def test_perturbed_fails_with_witness(self):
        # frozen from an independent CAS computation of both YBE sides
        w = RatFun.var("w")
        d = q * z - qi
        M = RingMatrix(4, {(0, 0): ONE, (3, 3): ONE, (1, 1): (z - ONE) / d, (2, 2): (z - ONE) / d,
                           (1, 2): (q - qi) / d, (2, 1): 2 * (q - qi) * z / d}, (2, 2))
        spec = RMatrixSpec(2, MULTIPLICATIVE, M)
        assert not check_ybe(spec)
        assert ybe_mismatch(spec) == (1, 2)
        lhs, rhs = (mat_product(s) for s in ybe_sides(spec))
        want_l = q * (q ** 2 - ONE) * (w * z - ONE) / ((q ** 2 * w - ONE) * (q ** 2 * w * z - ONE))
        want_r = (q * (q ** 2 - ONE) * (q ** 2 * w * z ** 2 + q ** 2 * w * z - 2 * q ** 2 * z - 2 * w * z + z + ONE)
                  / ((q ** 2 * w - ONE) * (q ** 2 * z - ONE) * (q ** 2 * w * z - ONE)))
        assert rf_eq(lhs.get(1, 2), want_l) and rf_eq(rhs.get(1, 2), want_r)

    def test_constant_rank_one_satisfies(self):
        # the all-ones 4x4 matrix is J (x) J, so both orderings agree
        J = RingMatrix(4, {(i, j): ONE for i in range(4) for j in range(4)}, (2, 2))
        assert check_ybe(RMatrixSpec(2, MULTIPLICATIVE, J))


class TestSingular:
    def test_singular_entries(self):
        RD = build_singular_RD(2)
        want = {
            (1, 1): dist_from_ratfun(ONE / (ONE - z), Z0),
            (2, 2): dist_from_ratfun(q * (ONE - q ** -2 * z) / (ONE - z) ** 2, Z0),
            (3, 2): delta(z),
            (3, 3): dist_from_ratfun(q / (ONE - q ** 2 * z), Z0),
            (4, 4): dist_from_ratfun(ONE / (ONE - z), Z0),
        }
        for r in range(1, 5):
            for c in range(1, 5):
                got = RD.get(r - 1, c - 1, DistExpr.zero())
                assert dist_eq(got, want.get((r, c), DistExpr.zero())), (r, c)

    def test_scaled_entry(self):
        e = build_singular_RD(2).get(1, 1) * DistExpr.const(ONE - z)
        assert dist_eq(e, dist_from_ratfun(q * (ONE - q ** -2 * z) / (ONE - z), Z0))
        # cross-check on the window: (1-z) * iota_0(1/(1-z)^2) = iota_0(1/(1-z))
        w = {"z": (-4, 6)}
        assert truncate(e, w) == truncate(dist_from_ratfun(q * (ONE - q ** -2 * z) / (ONE - z), Z0), w)

    def test_lower_limit_entry(self):
        _, _, lower = limit_factors(2)
        assert dist_eq(lower.get(2, 1), DistExpr.const(qi - q) * delta(z))

    @pytest.mark.parametrize("n", [2, 3])
    def test_limit_equals_closed_form(self, n):
        assert limit_twisted_gauss(n) == build_singular_RD(n)

    def test_props_n2(self):
        rep = check_singular_props(2)
        assert len(rep.divergent_orderings) == 2 and not rep.converged_orderings
        name, trace = rep.divergent_orderings[0]
        assert name == "R12*R13*R23" and "entry" in trace
        assert rep.prop5_diagonal and rep.prop5_rational and all(rep.prop5_kappa.values())

    def test_props_n3_deltas_annihilated(self):
        RD = build_singular_RD(3)
        deltas = [k for k, v in RD.entries.items() if v.delta_part()]
        assert len(deltas) == 3
        for k in deltas:
            assert (DistExpr.const(ONE - z) * RD.entries[k]).is_zero()
        assert check_singular_props(3).prop5_diagonal


class TestYangian:
    def test_ybe(self):
        assert check_ybe(build_yangian_R())

    def test_entries(self):
        R = build_yangian_R().matrix
        assert rf_eq(at(R, 2, 2), u / (u - h)) and rf_eq(at(R, 2, 3), -h / (u - h))
        RD = build_yangian_RD()
        assert dist_eq(RD.get(1, 1), dist_from_ratfun((u + h) / u ** 2, [("u", Region.INFINITY)]))
        assert dist_eq(RD.get(2, 1), delta("u", point=0))

    def test_delta_annihilated(self):
        assert (DistExpr.const(u) * build_yangian_RD().get(2, 1)).is_zero()


class TestPrefactor:
    def test_constant_term(self):
        rho = build_scalar_prefactor(2, 3)
        assert rho.coefficient(0) == RatFun.monomial((("q", Fraction(-1, 2)),))

    def test_first_coefficient(self):
        # log-derivative of the products: -2 q^2 / (1 + q^2)
        rho = build_scalar_prefactor(2, 3)
        assert rf_eq(rho.rho[1], -2 * q ** 2 / (ONE + q ** 2))

    def test_second_coefficient_q_series(self):
        # frozen q-expansion of the z^2 coefficient from truncated products (11 factors of each)
        frozen = [0, 0, 0, 0, 1, 0, -4, 0, 7, 0, -8, 0, 9, 0, -12, 0, 15, 0, -16, 0, 17,
                  0, -20, 0, 23, 0, -24, 0, 25, 0, -28, 0, 31, 0, -32, 0, 33]
        rho = build_scalar_prefactor(2, 3)
        s = rf_expand(rho.rho[2], "q", Region.ZERO, (0, 36))
        assert [s[k] for k in range(37)] == [RatFun.const(c) for c in frozen]

    def test_invertible(self):
        assert build_scalar_prefactor(3, 2).rho[0].is_unit()
