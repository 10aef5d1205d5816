"""``qcv``: run the verification checks from the command line."""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from qcv.arith.poly import mono_str
from qcv.arith.ratfun import ONE, RatFun
from qcv.arith.series import Region
from qcv.errors import Divergent, ParseError, QcvError
from qcv.evalrep import check_drinfeld_relations, check_rll_diagonal, check_sl3_composite
from qcv.fdist import DistExpr, delta, dist_from_ratfun, limit_demo, tables_equal, truncate
from qcv.rmatrix import (
    MULTIPLICATIVE,
    RMatrixSpec,
    build_gauss_factors,
    build_singular_RD,
    build_trig_R,
    build_twisted_R,
    build_yangian_R,
    build_yangian_RD,
    check_singular_props,
    limit_twisted_gauss,
    ybe_sides,
)
from qcv.tensor import RingMatrix, first_mismatch, gauss_decompose, mat_product
from qcv.cli.parser import format_matrix, format_value, parse_expr, parse_matrix
from qcv.cli.report import Report, Writer, dumps

# Largest rank each command accepts; beyond these the checks leave desk scale.
MAX_N = {"ybe": 4, "twist-equiv": 3, "gauss": 4, "singular": 3, "prop4": 3, "prop5": 3, "currents": 3}
BUILTINS = ("trig", "twisted", "singular", "yangian")


class UsageError(Exception):
    pass


def _window(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            k = int(text)
            return (-k, k)
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like LO..HI, got {text!r}") from None
    if a > b:
        raise argparse.ArgumentTypeError(f"empty window {text!r}")
    return (a, b)


def _timed(check: str, params: dict, fn, expect_divergence: bool = False) -> Report:
    t0 = time.perf_counter()
    try:
        status, witness = fn()
    except ParseError:
        raise
    except Divergent as exc:
        status, witness = "divergent-certified", {"error": str(exc), "trace": exc.trace}
    except QcvError as exc:
        status, witness = "unsupported", {"error": f"{type(exc).__name__}: {exc}"}
    return Report(check, params, status, witness, (time.perf_counter() - t0) * 1000, expect_divergence)


def _minimal_monomial(diff) -> str | None:
    if isinstance(diff, RatFun):
        num = diff.numerator()
        if num.is_zero():
            return None
        m, _ = num.min_term()
        return mono_str(m) or "1"
    return None


def _entry_witness(a: RingMatrix, b: RingMatrix, key) -> dict:
    x, y = a.entries.get(key), b.entries.get(key)
    wit = {
        "entry": [key[0] + 1, key[1] + 1],
        "got": "0" if x is None else format_value(x),
        "expected": "0" if y is None else format_value(y),
    }
    if a.legs:
        wit["legs"] = [list(a.unflatten(key[0])), list(a.unflatten(key[1]))]
    if isinstance(x, RatFun) or isinstance(y, RatFun):
        mono = _minimal_monomial((x if x is not None else RatFun(0)) - (y if y is not None else RatFun(0)))
        if mono:
            wit["monomial"] = mono
    return wit


def _compare(a: RingMatrix, b: RingMatrix):
    key = first_mismatch(a, b)
    if key is None:
        return "pass", None
    return "fail", _entry_witness(a, b, key)


# -- individual checks ---------------------------------------------------------------

def _ybe_status(spec: RMatrixSpec):
    lhs, rhs = ybe_sides(spec)
    try:
        L, R = mat_product(lhs), mat_product(rhs)
    except Divergent as exc:
        return "divergent-certified", {"error": str(exc), "trace": exc.trace}
    try:
        return _compare(L, R)
    except QcvError as exc:
        return "unsupported", {"error": str(exc)}


def _builtin_spec(name: str, n: int, N: int) -> RMatrixSpec:
    if name == "trig":
        return build_trig_R(n)
    if name == "twisted":
        return RMatrixSpec(n, MULTIPLICATIVE, build_twisted_R(n, N))
    if name == "singular":
        return RMatrixSpec(n, MULTIPLICATIVE, build_singular_RD(n))
    if name == "yangian":
        return build_yangian_R()
    raise UsageError(f"unknown builtin {name!r}")


def _builtin_regions(name: str) -> dict:
    return {"singular": {"z": Region.ZERO}}.get(name, {})


def _load_file(path: str) -> RMatrixSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_matrix(text).spec()


def jobs_ybe(a) -> list:
    if a.file:
        spec = _load_file(a.file)
        params = {"file": a.file, "n": spec.n}
        return [lambda: _timed("ybe", params, lambda: _ybe_status(spec))]
    params = {"builtin": a.builtin, "n": 2 if a.builtin == "yangian" else a.n}
    if a.builtin == "twisted":
        params["N"] = a.N
    return [lambda: _timed("ybe", params, lambda: _ybe_status(_builtin_spec(a.builtin, a.n, a.N)))]


def jobs_twist_equiv(a) -> list:
    def run():
        closed = build_twisted_R(a.n, a.N, "closed_form")
        for method in ("twist", "conjugation"):
            status, wit = _compare(build_twisted_R(a.n, a.N, method), closed)
            if status != "pass":
                return status, dict(wit, construction=method)
        return "pass", None

    return [lambda: _timed("twist-equiv", {"n": a.n, "N": a.N}, run)]


def jobs_gauss(a) -> list:
    def closed_form():
        return _compare(build_gauss_factors(a.n).product(), build_trig_R(a.n).matrix)

    def decomposition():
        ref = build_gauss_factors(a.n)
        got = gauss_decompose(build_trig_R(a.n).matrix, "udl")
        for name in ("upper", "diag", "lower"):
            status, wit = _compare(getattr(got, name), getattr(ref, name))
            if status != "pass":
                return status, dict(wit, factor=name)
        return "pass", None

    p = {"n": a.n}
    return [lambda: _timed("gauss-product", p, closed_form), lambda: _timed("gauss-decompose", p, decomposition)]


def jobs_limit_demo(a) -> list:

    def run():
        demo = limit_demo(a.window)
        w = {"z": a.window}
        z = RatFun.var("z")
        sq = dist_from_ratfun(ONE / (ONE - z) ** 2, [("z", Region.ZERO)])
        expected = {"up": DistExpr.zero(), "down": delta(z), "of_product": sq,
                    "product_of_limits": DistExpr.zero()}
        for name, want in expected.items():
            got = getattr(demo, name)
            if not tables_equal(demo.tables[name], truncate(want, w)):
                return "fail", {"limit": name, "got": format_value(got), "expected": format_value(want)}
        if tables_equal(demo.tables["of_product"], demo.tables["product_of_limits"]):
            return "fail", {"limit": "of_product", "note": "agrees with the product of limits"}
        return "pass", None

    return [lambda: _timed("limit-demo", {"window": list(a.window)}, run)]


def _prop4(n: int):
    rep = check_singular_props(n)
    if len(rep.divergent_orderings) == 2:
        return "divergent-certified", {name: trace for name, trace in rep.divergent_orderings}
    return "fail", {"converged": rep.converged_orderings,
                    "divergent": [name for name, _ in rep.divergent_orderings]}


def _prop5(n: int):
    rep = check_singular_props(n)
    checks = {"(1-z)R^D diagonal": rep.prop5_diagonal, "(1-z)R^D regular": rep.prop5_rational}
    checks.update({f"kappa{k} multiplier diagonal": v for k, v in sorted(rep.prop5_kappa.items())})
    bad = [k for k, v in checks.items() if not v]
    if bad:
        return "fail", {"failed": bad, **rep.witness}
    return "pass", None


def _singular_build(n: int):
    return _compare(limit_twisted_gauss(n), build_singular_RD(n))


def _rll_jobs(n: int, window) -> list:

    def run():
        rep = check_rll_diagonal(n, window)
        return [_relation_report("rll", {"n": n, "relation": r.name}, r) for r in rep.results]

    return [run]


def _relation_report(check: str, params: dict, r) -> Report:
    # an evaluation-representation divergence is a failure of the relation, not a certificate
    status = {"pass": "pass", "unsupported": "unsupported"}.get(r.status, "fail")
    wit = r.witness
    if status != "pass" and not wit:
        wit = {"note": r.status}
    if r.status == "divergent":
        wit = dict(wit or {}, divergent=True)
    return Report(check, params, status, wit, r.ms)


def jobs_prop4(a) -> list:
    return [lambda: _timed("prop4", {"n": a.n}, lambda: _prop4(a.n), expect_divergence=True)]


def jobs_prop5(a) -> list:
    out = [lambda: _timed("prop5", {"n": a.n}, lambda: _prop5(a.n))]
    if a.rll:
        out += _rll_jobs(a.n, a.window)
    return out


def jobs_singular(a) -> list:
    return [lambda: _timed("singular-build", {"n": a.n}, lambda: _singular_build(a.n))] + jobs_prop4(a) + jobs_prop5(a)


def jobs_currents(a) -> list:

    def drinfeld():
        rep = check_drinfeld_relations(a.n, a.window)
        return [_relation_report("drinfeld", {"n": a.n, "relation": r.name, "window": list(a.window)}, r)
                for r in rep.results]

    def sl3():
        rep = check_sl3_composite(a.window)
        return [_relation_report("sl3", {"n": 3, "relation": r.name, "window": list(a.window)}, r)
                for r in rep.results]

    return [drinfeld] + ([sl3] if a.n == 3 else [])


def jobs_yangian(a) -> list:
    def delta_annihilated():
        u = RatFun.var("u")
        d = build_yangian_RD().get(2, 1)
        prod = DistExpr.const(u) * d
        if prod.is_zero():
            return "pass", None
        return "fail", {"entry": [3, 2], "got": format_value(prod), "expected": "0"}

    return [lambda: _timed("ybe", {"builtin": "yangian"}, lambda: _ybe_status(build_yangian_R())),
            lambda: _timed("yangian-delta", {}, delta_annihilated)]


def jobs_parse(a) -> list:
    def run():
        if a.expr is not None:
            return "pass", {"value": format_value(parse_expr(a.expr))}
        if a.file:
            spec = _load_file(a.file)
            return "pass", {"n": spec.n, "rule": spec.rule, "entries": len(spec.matrix.entries)}
        spec = _builtin_spec(a.builtin, a.n, a.N)
        regions = _builtin_regions(a.builtin)
        again = parse_matrix(format_matrix(spec, regions)).spec()
        return _compare(again.matrix, spec.matrix)

    params = {"expr": a.expr} if a.expr is not None else ({"file": a.file} if a.file else {"builtin": a.builtin, "n": a.n})
    return [lambda: _timed("parse", params, run)]


COMMANDS = {
    "ybe": jobs_ybe,
    "twist-equiv": jobs_twist_equiv,
    "gauss": jobs_gauss,
    "limit-demo": jobs_limit_demo,
    "singular": jobs_singular,
    "prop4": jobs_prop4,
    "prop5": jobs_prop5,
    "currents": jobs_currents,
    "yangian": jobs_yangian,
    "parse": jobs_parse,
}


HELP = {
    "ybe": "Yang-Baxter equation for a builtin or file matrix",
    "twist-equiv": "closed-form, twist and conjugation constructions agree",
    "gauss": "Gauss factors of the trigonometric R-matrix",
    "limit-demo": "the three limits of the non-commuting example",
    "singular": "build the singular R-matrix and run prop4 and prop5",
    "prop4": "both YBE orderings of the singular R-matrix diverge",
    "prop5": "diagonality of the multiplied singular R-matrix",
    "currents": "current relations at level zero",
    "yangian": "rational R-matrix and its singular limit",
    "parse": "parse an expression or matrix document, or round-trip a builtin",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="rank (default 2)")
    common.add_argument("--N", type=int, default=1, help="twist parameter (default 1)")
    common.add_argument("--window", type=_window, default=(-8, 8), help="oracle window LO..HI (default -8..8)")
    common.add_argument("--json", metavar="PATH", help="also write the reports as JSON ('-' for stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads")
    common.add_argument("--no-timing", action="store_true", help="omit timings from text and write ms=0 in JSON, for byte-stable output")

    p = argparse.ArgumentParser(prog="qcv", description="Exact checks for trigonometric R-matrices and their currents.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=HELP[name])
        if name in ("ybe", "parse"):
            sp.add_argument("--builtin", choices=BUILTINS, default="trig")
            sp.add_argument("--file", help="matrix document (.qmx)")
        if name == "parse":
            sp.add_argument("--expr", help="parse a single expression")
        if name in ("prop5", "singular"):
            sp.add_argument("--rll", action="store_true", help="also check the RLL relations entrywise")
    return p


def _validate(a) -> None:
    bound = MAX_N.get(a.command)
    if a.n < 2:
        raise UsageError("--n must be at least 2")
    if bound is not None and a.n > bound:
        raise UsageError(f"--n {a.n} exceeds the bound {bound} for {a.command}")
    if a.N < 1:
        raise UsageError("--N must be at least 1")
    if a.jobs < 1:
        raise UsageError("--jobs must be at least 1")


def _collect(job) -> list:
    out = job()
    return out if isinstance(out, list) else [out]


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        _validate(a)
        jobs = COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"qcv: error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"qcv: {exc}", file=sys.stderr)
        return 2

    writer = Writer(out, timing=not a.no_timing)
    reports: list = []
    with ThreadPoolExecutor(max_workers=a.jobs) as pool:
        futures = [pool.submit(_collect, j) for j in jobs]
        # emit in submission order so text and JSON do not depend on scheduling
        for f in futures:
            try:
                batch = f.result()
            except ParseError as exc:
                print(f"qcv: {exc}", file=sys.stderr)
                return 2
            for r in batch:
                writer.emit(r)
                reports.append(r)

    if a.json:
        text = dumps(reports, timing=not a.no_timing)
        if a.json == "-":
            out.write(text)
        else:
            Path(a.json).write_text(text, encoding="utf-8")
    return 0 if all(r.ok for r in reports) else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
