"""Acceptance criteria 1 to 10, each test tagged with its criterion and budget.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import io
import json
import random
import time
from contextlib import contextmanager

import pytest

from qcv.arith.ratfun import ONE, RatFun, rf_eq
from qcv.arith.series import Region
from qcv.cli.main import run
from qcv.cli.parser import parse_expr, parse_matrix
from qcv.errors import ParseError
from qcv.evalrep import check_drinfeld_relations, check_sl3_composite
from qcv.fdist import DistExpr, delta, dist_eq, dist_from_ratfun, limit_demo, tables_equal, truncate
from qcv.rmatrix import (
    MULTIPLICATIVE,
    RMatrixSpec,
    build_singular_RD,
    build_trig_R,
    build_twisted_R,
    build_yangian_R,
    build_yangian_RD,
    check_singular_props,
    check_ybe,
    limit_twisted_gauss,
)
from qcv.tensor import is_diagonal

from distgen import associative, product_matches_convolution, random_dist
from malformed import MALFORMED_EXPR, MALFORMED_QMX

z, u, h = RatFun.var("z"), RatFun.var("u"), RatFun.var("h")


@contextmanager
def budget(seconds):
    t0 = time.perf_counter()
    yield
    took = time.perf_counter() - t0
    assert took <= seconds, f"took {took:.1f} s, budget {seconds} s"


TWISTED = [(n, N) for n in (2, 3) for N in (1, 2)]


@pytest.mark.criterion(1)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_c1_trig_ybe(n):
    with budget(60):
        assert check_ybe(build_trig_R(n))


@pytest.mark.criterion(1)
@pytest.mark.parametrize("n,N", TWISTED)
def test_c1_twisted_ybe(n, N):
    with budget(30):
        assert check_ybe(RMatrixSpec(n, MULTIPLICATIVE, build_twisted_R(n, N)))


@pytest.mark.criterion(2)
@pytest.mark.parametrize("n,N", TWISTED)
def test_c2_three_constructions(n, N):
    with budget(10):
        c = build_twisted_R(n, N, "closed_form")
        for other in (build_twisted_R(n, N, "twist"), build_twisted_R(n, N, "conjugation")):
            for key in c.entries.keys() | other.entries.keys():
                assert rf_eq(c.get(*key, RatFun(0)), other.get(*key, RatFun(0))), key


@pytest.mark.criterion(3)
@pytest.mark.parametrize("n", [2, 3])
def test_c3_limit_reproduces_singular(n):
    with budget(10):
        lim, RD = limit_twisted_gauss(n), build_singular_RD(n)
        for key in lim.entries.keys() | RD.entries.keys():
            assert dist_eq(lim.get(*key, DistExpr.zero()), RD.get(*key, DistExpr.zero())), key
        # E_ij (x) E_ji with i > j carries delta(z) with coefficient exactly 1
        for i in range(1, n + 1):
            for j in range(1, i):
                row, col = (i - 1) * n + (j - 1), (j - 1) * n + (i - 1)
                entry = RD.get(row, col)
                deltas = entry.normalized().delta_part()
                assert len(deltas) == 1 and dist_eq(DistExpr([deltas[0]]), delta(z))


@pytest.mark.criterion(4)
@pytest.mark.parametrize("n", [2, 3])
def test_c4_both_orderings_divergent(n):
    with budget(10):
        rep = check_singular_props(n)
        assert not rep.converged_orderings
        names = {name for name, _ in rep.divergent_orderings}
        assert names == {"R12*R13*R23", "R23*R13*R12"}
        for _, trace in rep.divergent_orderings:
            assert "entry" in trace and "left" in trace and "right" in trace


@pytest.mark.criterion(5)
@pytest.mark.parametrize("n", [2, 3])
def test_c5_diagonality(n):
    rep = check_singular_props(n)
    assert rep.prop5_diagonal and rep.prop5_rational
    assert rep.prop5_kappa == {"+": True, "-": True}
    RD = build_singular_RD(n)
    assert is_diagonal(RD.map(lambda e: DistExpr.const(ONE - z) * e))


@pytest.mark.criterion(6)
def test_c6_limit_demo():
    d = limit_demo((-8, 8))
    win = {"z": (-8, 8)}
    assert not truncate(d.up, win) and d.up.is_zero()
    assert tables_equal(truncate(d.down, win), truncate(delta(z), win))
    square = {dict(m).get("z", 0): c for m, c in truncate(d.of_product, win).items()}
    # (sum_{m>=0} z^m)^2 has coefficient k + 1 at z^k
    for k in range(-8, 9):
        want = RatFun.const(k + 1) if k >= 0 else RatFun(0)
        assert rf_eq(square.get(k, RatFun(0)), want), k
    assert d.product_of_limits.is_zero() and square


@pytest.mark.criterion(7)
@pytest.mark.parametrize("n", [2, 3])
def test_c7_drinfeld(n):
    with budget(150):
        rep = check_drinfeld_relations(n, window=8)
        assert rep.ok, rep.failures()
        assert all(r.oracle for r in rep.results)
        if n == 3:
            assert sum(r.name.startswith("Serre") for r in rep.results) == 4


@pytest.mark.criterion(7)
@pytest.mark.xfail(strict=True, reason="composite sl3 relations do not all hold with these conventions; see the decisions log")
def test_c7_sl3_composite():
    with budget(150):
        rep = check_sl3_composite(window=8)
        assert rep.ok, [(r.name, r.status) for r in rep.failures()]


@pytest.mark.criterion(8)
def test_c8_yangian():
    with budget(5):
        assert check_ybe(build_yangian_R())
        RD = build_yangian_RD()
        inf = [("u", Region.INFINITY)]
        want = {
            (0, 0): DistExpr.one(), (3, 3): DistExpr.one(),
            (1, 1): dist_from_ratfun((u + h) / u ** 2, inf),
            (2, 2): dist_from_ratfun(ONE / (u - h), inf),
            (2, 1): delta("u", point=0),
        }
        for key in RD.entries.keys() | want.keys():
            assert dist_eq(RD.get(*key, DistExpr.zero()), want.get(key, DistExpr.zero())), key
        assert (DistExpr.const(u) * RD.get(2, 1)).is_zero()


@pytest.mark.criterion(9)
def test_c9_oracle_soundness():
    rng = random.Random(20261015)
    checked = 0
    with budget(60):
        while checked < 200:
            a, b, c = random_dist(rng), random_dist(rng), random_dist(rng)
            conv, assoc = product_matches_convolution(a, b), associative(a, b, c)
            if conv is None or assoc is None:
                continue
            assert conv and assoc
            checked += 1


@pytest.mark.criterion(10)
@pytest.mark.parametrize("builtin", ["trig", "twisted", "singular", "yangian"])
def test_c10_round_trip(builtin):
    code = run(["parse", "--builtin", builtin, "--n", "2"], io.StringIO())
    assert code == 0
    if builtin != "yangian":
        assert run(["parse", "--builtin", builtin, "--n", "3"], io.StringIO()) == 0


@pytest.mark.criterion(10)
def test_c10_malformed_inputs():
    cases = [(parse_expr, *c) for c in MALFORMED_EXPR] + [(parse_matrix, *c) for c in MALFORMED_QMX]
    assert len(cases) >= 20
    for fn, text, line, col in cases:
        with pytest.raises(ParseError) as err:
            fn(text)
        assert (err.value.line, err.value.column) == (line, col), text


@pytest.mark.criterion(10)
def test_c10_deterministic_json(tmp_path):
    outs = []
    for k, jobs in enumerate(("1", "3")):
        p = tmp_path / f"r{k}.json"
        run(["singular", "--n", "2", "--json", str(p), "--no-timing", "--jobs", jobs], io.StringIO())
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    json.loads(outs[0])
