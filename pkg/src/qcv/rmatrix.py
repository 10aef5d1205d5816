"""R-matrices of the evaluation representation and the identities between them.

Index conventions follow ``qcv.tensor``: ``E_ab (x) E_cd`` sits at flat
position ``((a,c), (b,d))``.  All matrices are *matrix parts*; scalar
prefactors are built separately (``build_scalar_prefactor``) because they
cancel in every identity checked here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from qcv.arith.ratfun import ONE, ZERO, RatFun
from qcv.arith.series import Region, TruncatedSeries, qpoch_series
from qcv.errors import Divergent
from qcv.fdist import (
    DistExpr,
    LimitFamily,
    delta,
    dist_from_ratfun,
    limit,
)
from qcv.tensor import (
    GaussFactors,
    RingMatrix,
    embed,
    first_mismatch,
    is_diagonal,
    mat_product,
    matmul,
    swap_legs,
)

MULTIPLICATIVE = "multiplicative"
ADDITIVE = "additive"

_q = RatFun.var("q")
_qi = _q.inverse()
_ZR = [("z", Region.ZERO)]


@dataclass
class RMatrixSpec:
    n: int
    rule: str
    matrix: RingMatrix
    var: str = "z"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("rank must be at least 2")
        if self.matrix.dim != self.n ** 2:
            raise ValueError(f"matrix has dimension {self.matrix.dim}, expected {self.n ** 2}")


def _two_leg(n: int, f) -> RingMatrix:
    """Two-leg matrix whose entry at ``((a,c),(b,d))`` is ``f(a, c, b, d)``."""
    return RingMatrix.from_function(n, 2, lambda r, c: f(r[0], r[1], c[0], c[1]))


def _var(name: str) -> RatFun:
    return RatFun.var(name)


# -- trigonometric R ----------------------------------------------------------

def trig_entry(a: int, c: int, b: int, d: int, z: RatFun):
    den = _q * z - _qi
    if (a, c) == (b, d):
        return ONE if a == c else (z - ONE) / den
    if a == d and c == b:
        return (_q - _qi) / den if a < c else (_q - _qi) * z / den
    return None


def build_trig_R(n: int) -> RMatrixSpec:
    z = _var("z")
    return RMatrixSpec(n, MULTIPLICATIVE, _two_leg(n, lambda a, c, b, d: trig_entry(a, c, b, d, z)))


def _diag_D(n: int, z: RatFun) -> RingMatrix:
    def f(a, c, b, d):
        if (a, c) != (b, d):
            return None
        if a == c:
            return ONE
        if a < c:
            return (z * _qi - _q) / (z - ONE)
        return (z - ONE) / (_q * z - _qi)

    return _two_leg(n, f)


def build_gauss_factors(n: int) -> GaussFactors:
    """``M(z) = upper * diag * lower`` with the displayed closed-form entries."""
    z = _var("z")
    up = _two_leg(n, lambda a, c, b, d: ONE if (a, c) == (b, d) else
                  ((_qi - _q) / (ONE - z) if a == d and c == b and a < c else None))
    lo = _two_leg(n, lambda a, c, b, d: ONE if (a, c) == (b, d) else
                  ((_qi - _q) * z / (ONE - z) if a == d and c == b and a > c else None))
    return GaussFactors(lo, _diag_D(n, z), up, "udl")


# -- twists -------------------------------------------------------------------

def build_twist_G(n: int, N: int) -> RingMatrix:
    """``G_N(z) = 1 + sum_{a<b} (q^-1 - q)(1 + z + ... + z^(2N(b-a)-1)) E_ab (x) E_ba``."""
    z = _var("z")

    def f(a, c, b, d):
        if (a, c) == (b, d):
            return ONE
        if a == d and c == b and a < c:
            geo = ZERO
            for k in range(2 * N * (c - a)):
                geo = geo + z ** k
            return (_qi - _q) * geo
        return None

    return _two_leg(n, f)


def build_U_diag(n: int) -> RingMatrix:
    z = _var("z")
    return _two_leg(n, lambda a, c, b, d: z ** (a - c) if (a, c) == (b, d) else None)


def subst_matrix(m: RingMatrix, var: str, target) -> RingMatrix:
    def f(e):
        if isinstance(e, DistExpr):
            return e.substitute({var: target})
        return e.substitute(var, target)

    return m.map(f)


def _matrix_power(m: RingMatrix, k: int) -> RingMatrix:
    if k < 0:
        return _matrix_power(m.inverse(), -k)
    out = RingMatrix.identity(m.dim, legs=m.legs)
    for _ in range(k):
        out = matmul(out, m)
    return out


def build_twisted_R(n: int, N: int, method: str = "closed_form") -> RingMatrix:
    z = _var("z")
    M = build_trig_R(n).matrix
    if method == "conjugation":
        U = build_U_diag(n)
        # U^-N M U^N: the sign of the exponent is fixed by agreement with the twist
        return mat_product([_matrix_power(U, -N), M, _matrix_power(U, N)])
    if method == "twist":
        G = build_twist_G(n, N)
        G21 = swap_legs(subst_matrix(G, "z", z.inverse()))
        return mat_product([G.inverse(), M, G21])
    if method == "closed_form":
        A, D, B = twisted_gauss_factors(n, N)
        return mat_product([A, D, B])
    raise ValueError(f"unknown construction {method!r}")


def twisted_gauss_factors(n: int, N: int):
    """Upper, diagonal and lower Gauss factors of ``R_2N`` at a concrete ``N``."""
    z = _var("z")
    A = _two_leg(n, lambda a, c, b, d: ONE if (a, c) == (b, d) else
                 ((_qi - _q) * z ** (2 * N * (c - a)) / (ONE - z) if a == d and c == b and a < c else None))
    B = _two_leg(n, lambda a, c, b, d: ONE if (a, c) == (b, d) else
                 ((_qi - _q) * z ** (-2 * N * (a - c) + 1) / (ONE - z) if a == d and c == b and a > c else None))
    return A, _diag_D(n, z), B


# -- Yang-Baxter ----------------------------------------------------------------

def ybe_sides(spec: RMatrixSpec, matrix: RingMatrix | None = None):
    R = spec.matrix if matrix is None else matrix
    v = spec.var
    if spec.rule == MULTIPLICATIVE:
        a, b = _var("z"), _var("w")
        mapping = {v: a}, {v: a * b}, {v: b}
    else:
        a, b = _var("u"), _var("v")
        mapping = {v: a}, {v: a + b}, {v: b}
    r12 = R if mapping[0][v].mono == ((v, 1),) else subst_matrix(R, v, mapping[0][v])
    r13 = subst_matrix(R, v, mapping[1][v])
    r23 = subst_matrix(R, v, mapping[2][v])
    R12, R13, R23 = embed(r12, (1, 2), 3), embed(r13, (1, 3), 3), embed(r23, (2, 3), 3)
    return (R12, R13, R23), (R23, R13, R12)


def ybe_mismatch(spec: RMatrixSpec):
    """First flat entry where the two YBE orderings differ, or None."""
    lhs, rhs = ybe_sides(spec)
    return first_mismatch(mat_product(lhs), mat_product(rhs))


def check_ybe(spec: RMatrixSpec) -> bool:
    return ybe_mismatch(spec) is None


def swap_unitarity_scalar(n: int = 2):
    """``M(z) * P M(1/z) P``; returns the product matrix."""
    z = _var("z")
    M = build_trig_R(n).matrix
    return matmul(M, swap_legs(subst_matrix(M, "z", z.inverse())))


# -- the singular R-matrix -------------------------------------------------------

def singular_entry(a: int, c: int, b: int, d: int) -> DistExpr | None:
    z = _var("z")
    if (a, c) == (b, d):
        if a == c:
            return dist_from_ratfun(ONE / (ONE - z), _ZR)
        if a < c:
            return dist_from_ratfun((_q - _qi * z) / (ONE - z) ** 2, _ZR)
        return dist_from_ratfun(_q / (ONE - _q ** 2 * z), _ZR)
    if a == d and c == b and a > c:
        return delta(z)
    return None


def build_singular_RD(n: int) -> RingMatrix:
    return _two_leg(n, singular_entry)


def twisted_gauss_families(n: int):
    """Gauss factors of ``R_2N`` as N-families, scalar pole folded into the diagonal."""
    z = _var("z")
    one = DistExpr.one()

    def upper(a, c, b, d):
        if (a, c) == (b, d):
            return LimitFamily.of(one)
        if a == d and c == b and a < c:
            return LimitFamily.of(dist_from_ratfun((_qi - _q) / (ONE - z), _ZR), "z", 2 * (c - a))
        return None

    def lower(a, c, b, d):
        if (a, c) == (b, d):
            return LimitFamily.of(one)
        if a == d and c == b and a > c:
            return LimitFamily.of(dist_from_ratfun((_qi - _q) * z / (ONE - z), _ZR), "z", -2 * (a - c))
        return None

    D = _diag_D(n, z)

    def diag(a, c, b, d):
        if (a, c) != (b, d):
            return None
        e = D.get(*_flat(n, (a, c), (b, d)))
        return LimitFamily.of(dist_from_ratfun(e / (ONE - z), _ZR))

    return upper, diag, lower


def _flat(n: int, r, c):
    return (r[0] - 1) * n + r[1] - 1, (c[0] - 1) * n + c[1] - 1


def _limit_matrix(n: int, f) -> RingMatrix:
    def g(a, c, b, d):
        fam = f(a, c, b, d)
        return None if fam is None else limit(fam)

    return _two_leg(n, g)


def limit_twisted_gauss(n: int) -> RingMatrix:
    """Product of the entrywise limits of the three Gauss factors of ``R_2N``."""
    upper, diag, lower = twisted_gauss_families(n)
    return mat_product([_limit_matrix(n, upper), _limit_matrix(n, diag), _limit_matrix(n, lower)])


def limit_factors(n: int):
    upper, diag, lower = twisted_gauss_families(n)
    return _limit_matrix(n, upper), _limit_matrix(n, diag), _limit_matrix(n, lower)


@dataclass
class SingularReport:
    divergent_orderings: list  # [(ordering name, trace)]
    converged_orderings: list
    prop5_diagonal: bool
    prop5_rational: bool
    prop5_kappa: dict  # sign -> bool
    witness: dict


def _try_product(mats) -> tuple[bool, dict]:
    try:
        out = mats[0]
        for m in mats[1:]:
            out = matmul(out, m)
    except Divergent as exc:
        return True, exc.trace
    return False, {}


def singular_ybe_orderings(n: int):
    z, w = _var("z"), _var("w")
    RD = build_singular_RD(n)
    r12 = RD
    r13 = RD.map(lambda e: e.substitute({"z": z * w}))
    r23 = RD.map(lambda e: e.substitute({"z": w}))
    R12, R13, R23 = embed(r12, (1, 2), 3), embed(r13, (1, 3), 3), embed(r23, (2, 3), 3)
    out = {}
    for name, mats in (("R12*R13*R23", [R12, R13, R23]), ("R23*R13*R12", [R23, R13, R12])):
        div, trace = _try_product(mats)
        out[name] = (div, trace)
    return out


def check_singular_props(n: int) -> SingularReport:
    z, w = _var("z"), _var("w")
    kappa = _var("kappa")
    orderings = singular_ybe_orderings(n)
    div = [(k, t) for k, (d, t) in orderings.items() if d]
    conv = [k for k, (d, _) in orderings.items() if not d]
    RD = build_singular_RD(n)
    scaled = RD.map(lambda e: e * (ONE - z))
    diag_ok = is_diagonal(scaled)
    rational_ok = all(e.as_regular() is not None for e in scaled.entries.values())
    kappa_ok = {}
    witness: dict = {}
    for sign in (1, -1):
        arg = w * kappa ** (-sign) / z
        mult = (z - kappa * w) * (z - kappa.inverse() * w)
        m = RD.map(lambda e: e.substitute({"z": arg}) * mult)
        ok = is_diagonal(m)
        kappa_ok["-" if sign > 0 else "+"] = ok
        if not ok:
            witness[f"kappa{sign}"] = [list(k) for k in sorted(m.entries) if k[0] != k[1]][:1]
    return SingularReport(div, conv, diag_ok, rational_ok, kappa_ok, witness)


# -- Yangian --------------------------------------------------------------------

def build_yangian_R() -> RMatrixSpec:
    u, h = _var("u"), _var("h")

    def f(a, c, b, d):
        if (a, c) == (b, d):
            return ONE if a == c else u / (u - h)
        if a == d and c == b:
            return -h / (u - h)
        return None

    return RMatrixSpec(2, ADDITIVE, _two_leg(2, f), var="u")


def build_yangian_RD() -> RingMatrix:
    u, h = _var("u"), _var("h")
    ur = [("u", Region.INFINITY)]
    table = {
        ((1, 1), (1, 1)): DistExpr.one(),
        ((1, 2), (1, 2)): dist_from_ratfun((u + h) / u ** 2, ur),
        ((2, 1), (2, 1)): dist_from_ratfun(ONE / (u - h), ur),
        ((2, 2), (2, 2)): DistExpr.one(),
        ((2, 1), (1, 2)): delta("u", point=0),
    }
    return _two_leg(2, lambda a, c, b, d: table.get(((a, c), (b, d))))


# -- scalar prefactor -------------------------------------------------------------

@dataclass
class ScalarPrefactor:
    n: int
    rho: TruncatedSeries  # regular part, without the q^(-1/n) unit
    unit: RatFun  # q^(-1/n)
    pole_order: int = 1

    def coefficient(self, k: int) -> RatFun:
        return self.unit * self.rho[k]

    def r_coefficient(self, k: int) -> RatFun:
        """Coefficient of ``z^k`` in ``r(z) = rho(z) * sum_{m>=0} z^m``."""
        out = ZERO
        for j in range(0, k + 1):
            out = out + self.rho[j]
        return self.unit * out


def build_scalar_prefactor(n: int, window: int = 4) -> ScalarPrefactor:
    """``rho(z) = q^(-1/n) (z q^n; q^2n)^2 / (z q^2n; q^2n)^2`` up to ``z^window``."""
    p = _q ** (2 * n)
    a = qpoch_series(_q ** n, p, "z", window)
    b = qpoch_series(_q ** (2 * n), p, "z", window, inverse=True)
    rho = a.mul(a, 0, window).mul(b, 0, window).mul(b, 0, window)
    unit = RatFun.monomial((("q", Fraction(-1, n)),))
    return ScalarPrefactor(n, rho, unit)
