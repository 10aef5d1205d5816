"""Random divergence-free distributions for the truncation-oracle tests.

Regular parts depend on one spectral variable at a time and are expanded
near zero, so every factor is bounded below and windowed convolution with
enlarged windows is exact.  Delta parts sit on ``z = c w``: a delta in a
single variable against a series in that same variable has infinitely many
contributions per coefficient, which no finite window can check.
"""

import random

from qcv.arith.ratfun import ONE, RatFun
from qcv.arith.series import Region
from qcv.errors import QcvError
from qcv.fdist import DistExpr, convolve, delta, dist_from_ratfun, tables_equal, truncate

q, z, w = RatFun.var("q"), RatFun.var("z"), RatFun.var("w")
REGIONS = [("z", Region.ZERO), ("w", Region.ZERO)]
INNER = {"z": (-3, 3), "w": (-3, 3)}
OUTER = {"z": (-14, 14), "w": (-14, 14)}


def _regular(rng: random.Random) -> DistExpr:
    v = rng.choice([z, w])
    f = RatFun.const(rng.choice([-2, -1, 1, 2, 3])) * q ** rng.randint(-1, 1) * v ** rng.randint(-2, 2)
    for _ in range(rng.randint(0, 2)):
        f = f / (ONE - q ** rng.randint(0, 2) * v)
    return dist_from_ratfun(f, REGIONS)


def _delta(rng: random.Random) -> DistExpr:
    arg = rng.choice([z / w, q * z / w, w / (q * z)])
    coeff = dist_from_ratfun(RatFun.const(rng.choice([1, -1, 2])) * w ** rng.randint(-1, 1), REGIONS)
    return coeff * delta(arg)


def random_dist(rng: random.Random) -> DistExpr:
    out = DistExpr.zero()
    for _ in range(rng.randint(1, 2)):
        out = out + (_delta(rng) if rng.random() < 0.3 else _regular(rng))
    return out


def product_matches_convolution(a: DistExpr, b: DistExpr) -> bool | None:
    """None when the product diverges (not a sample), else the oracle verdict."""
    try:
        ab = a * b
    except QcvError:
        return None
    want = convolve(truncate(a, OUTER), truncate(b, OUTER), INNER)
    return tables_equal(truncate(ab, INNER), want)


def associative(a: DistExpr, b: DistExpr, c: DistExpr) -> bool | None:
    try:
        left, right = (a * b) * c, a * (b * c)
    except QcvError:
        return None
    return tables_equal(truncate(left, INNER), truncate(right, INNER)) and (left - right).is_zero()
