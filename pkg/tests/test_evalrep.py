import pytest

from qcv.arith.ratfun import ONE, RatFun
from qcv.errors import Divergent, QcvError
from qcv.evalrep import (
    build_L,
    cartan,
    check_drinfeld_relations,
    check_relation,
    check_rll_diagonal,
    check_sl3_composite,
    comm,
    extract_currents,
    gauss_coordinates,
    op_identity,
    op_inverse,
    op_scale,
    rll_multiplier,
    small,
)
from qcv.fdist import DistExpr, delta, dist_eq
from qcv.tensor import RingMatrix, is_diagonal, matmul

q, z, w = RatFun.var("q"), RatFun.var("z"), RatFun.var("w")


def test_cartan():
    assert cartan(2) == [[2]]
    assert cartan(4) == [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]


class TestL:
    def test_plus_shape(self):
        L = build_L(2, "+")
        assert not L.entry(1, 2).entries
        low = L.entry(2, 1)
        assert low.entries.keys() == {(0, 1)}
        assert dist_eq(low.get(0, 1), delta(z))

    @pytest.mark.parametrize("n", [2, 3])
    def test_triangularity(self, n):
        Lp, Lm = build_L(n, "+"), build_L(n, "-")
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                assert not Lp.entry(i, j).entries
                assert not Lm.entry(j, i).entries

    def test_k_entries_are_regular(self):
        g = gauss_coordinates(build_L(3, "+"))
        for op in g.k.values():
            assert is_diagonal(op)
            assert all(not v.delta_part() for v in op.entries.values())

    def test_coordinates_index_sets(self):
        assert set(gauss_coordinates(build_L(3, "+")).e) == {(1, 2), (1, 3), (2, 3)}
        assert set(gauss_coordinates(build_L(3, "-")).f) == {(2, 1), (3, 1), (3, 2)}

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            build_L(2, "0")


class TestCurrents:
    def test_psi_inverse(self):
        c = extract_currents(2)
        km = c.at(c.km[1], "z")
        assert matmul(op_inverse(km, small("z")), km) == op_identity(2)

    def test_commutator_is_delta_supported(self):
        c = extract_currents(2)
        br = comm(c.x_plus(1, "z"), c.x_minus(1, "w"))
        assert br.entries
        assert all(not v.normalized().regular_part() for v in br.entries.values())

    def test_inverse_needs_diagonal(self):
        m = RingMatrix(2, {(0, 1): DistExpr.one(), (0, 0): DistExpr.one(), (1, 1): DistExpr.one()}, (2, 1))
        with pytest.raises(QcvError):
            op_inverse(m)


class TestRelations:
    def test_drinfeld_n2(self):
        rep = check_drinfeld_relations(2)
        assert rep.ok and len(rep.results) == 10
        assert all(r.oracle for r in rep.results)

    def test_sl3_composites(self):
        rep = check_sl3_composite()
        by = {r.name: r for r in rep.results}
        assert not rep.ok
        e13 = by["e12(z1) e23(z2) - c e23(z2) e12(z1) = delta(z1/z2) e13(z1)"]
        assert e13.status == "fail" and e13.witness["ratio"] == "q^(-1)*(1 - q^2)"
        assert by["(zq - w/q) e13(z) e13(w) = (z/q - wq) e13(w) e13(z)"].ok
        assert by["[f32(z), e13(w)] = delta(w/z) K+12(w) e12(w)"].status == "divergent"

    def test_divergent_side(self):
        def bad():
            raise Divergent("pole on support", {"entry": [1, 1]})
        r = check_relation("bad", bad, lambda: op_identity(2), ("z",))
        assert r.status == "divergent" and not r.ok and r.witness["entry"] == [1, 1]

    def test_mismatch_has_witness(self):
        one = op_identity(2)
        r = check_relation("scaled", lambda: op_scale(DistExpr.const(ONE + z), one), lambda: one, ("z",))
        assert r.status == "fail"
        assert r.witness["entry"] == [1, 1] and r.witness["monomial"] == "z"

    def test_window_pair(self):
        one = op_identity(2)
        r = check_relation("id", lambda: one, lambda: one, ("z",), window=(-2, 5))
        assert r.ok and r.oracle


class TestRLL:
    @pytest.mark.parametrize("mixed", [False, True])
    def test_multiplier_diagonal(self, mixed):
        assert is_diagonal(rll_multiplier(3, mixed))

    def test_report(self):
        rep = check_rll_diagonal(2)
        status = {r.name: r.status for r in rep.results}
        assert status["multiplier diagonal"] == status["multiplier diagonal (mixed)"] == "pass"
        assert status["M L-_1(z) L-_2(w) = M L-_2(w) L-_1(z)"] == "pass"
        assert status["M L+_1(z) L+_2(w) = M L+_2(w) L+_1(z)"] == "fail"
