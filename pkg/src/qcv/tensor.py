"""Sparse square matrices over an abstract ring, with tensor-leg structure.

Entries can be any objects supporting ``+``, ``-``, ``*``, ``is_zero()`` and
(for pivots) ``inverse()``: ``RatFun``, ``DistExpr`` or another
``RingMatrix`` (operator-valued entries).  Multiplication never assumes
commutativity, so operator entries keep their order.

Legs are flattened row-major with the first leg most significant: on
``V^{(x)m}`` with ``dim V = n`` the basis vector ``e_{a1} (x) ... (x) e_{am}``
(1-based ``ai``) sits at index ``sum (ai - 1) * n**(m - i)``.  For two legs
``E_ij (x) E_kl`` is the matrix unit at ``((i,k), (j,l))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Callable, Iterable

from qcv.arith.ratfun import ONE, RatFun
from qcv.errors import Divergent, QcvError, SingularPivot


def one_like(x):
    if isinstance(x, RatFun):
        return ONE
    return x.one_like()


def _droppable(v) -> bool:
    # an entry whose zero test is out of reach is kept; comparisons decide later
    try:
        return v.is_zero()
    except QcvError:
        return False


class RingMatrix:
    __slots__ = ("dim", "entries", "legs")

    def __init__(self, dim: int, entries: dict | None = None, legs: tuple[int, int] | None = None):
        if legs is not None and legs[0] ** legs[1] != dim:
            raise ValueError(f"legs {legs} do not match dimension {dim}")
        self.dim = dim
        self.legs = legs
        self.entries = {}
        for (i, j), v in (entries or {}).items():
            if not (0 <= i < dim and 0 <= j < dim):
                raise IndexError(f"entry ({i}, {j}) outside {dim}x{dim}")
            if not _droppable(v):
                self.entries[(i, j)] = v

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, dim: int, one=ONE, legs=None) -> "RingMatrix":
        return cls(dim, {(i, i): one for i in range(dim)}, legs)

    @classmethod
    def zero(cls, dim: int, legs=None) -> "RingMatrix":
        return cls(dim, {}, legs)

    @classmethod
    def unit(cls, n: int, i: int, j: int, value=ONE) -> "RingMatrix":
        """``value * E_ij`` on a single leg, 1-based indices."""
        return cls(n, {(i - 1, j - 1): value}, (n, 1))

    @classmethod
    def from_function(cls, n: int, m: int, f: Callable) -> "RingMatrix":
        """Build from ``f(row_indices, col_indices)`` with 1-based index tuples."""
        dim = n ** m
        out = {}
        idx = list(iproduct(range(1, n + 1), repeat=m))
        for r, a in enumerate(idx):
            for c, b in enumerate(idx):
                v = f(a, b)
                if v is not None and not v.is_zero():
                    out[(r, c)] = v
        return cls(dim, out, (n, m))

    def index(self, legs_idx: tuple[int, ...]) -> int:
        """Flat index of a 1-based leg-index tuple."""
        n = self.legs[0]
        out = 0
        for a in legs_idx:
            out = out * n + (a - 1)
        return out

    def unflatten(self, k: int) -> tuple[int, ...]:
        n, m = self.legs
        out = []
        for _ in range(m):
            out.append(k % n + 1)
            k //= n
        return tuple(reversed(out))

    # -- ring-element protocol -------------------------------------------
    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.entries.values())

    def one_like(self) -> "RingMatrix":
        e = next(iter(self.entries.values()), ONE)
        return RingMatrix.identity(self.dim, one_like(e), self.legs)

    def __getitem__(self, ij):
        return self.entries.get(ij)

    def get(self, i: int, j: int, default=None):
        return self.entries.get((i, j), default)

    def __add__(self, other: "RingMatrix") -> "RingMatrix":
        _same_dim(self, other)
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out[k] + v if k in out else v
        return RingMatrix(self.dim, out, self.legs or other.legs)

    def __neg__(self) -> "RingMatrix":
        return RingMatrix(self.dim, {k: -v for k, v in self.entries.items()}, self.legs)

    def __sub__(self, other: "RingMatrix") -> "RingMatrix":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RingMatrix):
            return matmul(self, other)
        return self.scale(other)

    def scale(self, c, left: bool = True) -> "RingMatrix":
        if left:
            return RingMatrix(self.dim, {k: c * v for k, v in self.entries.items()}, self.legs)
        return RingMatrix(self.dim, {k: v * c for k, v in self.entries.items()}, self.legs)

    def map(self, f: Callable) -> "RingMatrix":
        return RingMatrix(self.dim, {k: f(v) for k, v in self.entries.items()}, self.legs)

    def inverse(self) -> "RingMatrix":
        if is_diagonal(self):
            if len(self.entries) != self.dim:
                raise SingularPivot("zero on the diagonal")
            try:
                return RingMatrix(self.dim, {k: v.inverse() for k, v in self.entries.items()}, self.legs)
            except QcvError as exc:
                raise SingularPivot(f"diagonal entry not invertible: {exc}") from exc
        g = gauss_decompose(self)
        return g.inverse()

    def equals(self, other: "RingMatrix", eq: Callable | None = None) -> bool:
        return first_mismatch(self, other, eq) is None

    def __eq__(self, other) -> bool:
        if not isinstance(other, RingMatrix):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"RingMatrix(dim={self.dim}, nnz={len(self.entries)})"


def _same_dim(a: RingMatrix, b: RingMatrix) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} vs {b.dim}")


def _is_zero_diff(a, b) -> bool:
    if a is None and b is None:
        return True
    if a is None:
        return b.is_zero()
    if b is None:
        return a.is_zero()
    return (a - b).is_zero()


def first_mismatch(a: RingMatrix, b: RingMatrix, eq: Callable | None = None):
    """First flat ``(i, j)`` where the entries differ, or None."""
    _same_dim(a, b)
    for k in sorted(a.entries.keys() | b.entries.keys()):
        x, y = a.entries.get(k), b.entries.get(k)
        if eq is not None:
            same = eq(x, y)
        else:
            same = _is_zero_diff(x, y)
        if not same:
            return k
    return None


def matmul(a: RingMatrix, b: RingMatrix) -> RingMatrix:
    _same_dim(a, b)
    rows_b: dict = {}
    for (k, j), v in b.entries.items():
        rows_b.setdefault(k, []).append((j, v))
    out: dict = {}
    for (i, k), x in a.entries.items():
        for j, y in rows_b.get(k, ()):
            try:
                p = x * y
            except Divergent as exc:
                trace = dict(exc.trace)
                trace.setdefault("entry", [i + 1, j + 1])
                trace.setdefault("via", k + 1)
                raise Divergent(str(exc), trace) from exc
            out[(i, j)] = out[(i, j)] + p if (i, j) in out else p
    return RingMatrix(a.dim, out, a.legs or b.legs)


def mat_product(mats: Iterable[RingMatrix]) -> RingMatrix:
    mats = list(mats)
    out = mats[0]
    for m in mats[1:]:
        out = matmul(out, m)
    return out


def kron(a: RingMatrix, b: RingMatrix) -> RingMatrix:
    out = {}
    for (i, j), x in a.entries.items():
        for (k, l), y in b.entries.items():
            out[(i * b.dim + k, j * b.dim + l)] = x * y
    legs = None
    if a.legs and b.legs and a.legs[0] == b.legs[0]:
        legs = (a.legs[0], a.legs[1] + b.legs[1])
    return RingMatrix(a.dim * b.dim, out, legs)


def permute_legs(a: RingMatrix, perm: tuple[int, ...]) -> RingMatrix:
    """Move leg ``i`` to position ``perm[i]`` (0-based)."""
    n, m = a.legs
    out = {}
    for (r, c), v in a.entries.items():
        ri, ci = a.unflatten(r), a.unflatten(c)
        nr, nc = [0] * m, [0] * m
        for i in range(m):
            nr[perm[i]] = ri[i]
            nc[perm[i]] = ci[i]
        out[(a.index(tuple(nr)), a.index(tuple(nc)))] = v
    return RingMatrix(a.dim, out, a.legs)


def swap_legs(a: RingMatrix) -> RingMatrix:
    if a.legs is None or a.legs[1] != 2:
        raise ValueError("swap_legs needs a two-leg matrix")
    return permute_legs(a, (1, 0))


def embed(r: RingMatrix, legs: tuple[int, int], total: int) -> RingMatrix:
    """Act with the two-leg ``r`` on legs ``legs`` (1-based) of ``total`` legs."""
    i, j = legs
    if not (1 <= i < j <= total):
        raise IndexError(f"leg pair {legs} out of range for {total} legs")
    if r.legs is None or r.legs[1] != 2:
        raise ValueError("embed needs a two-leg matrix")
    n = r.legs[0]
    others = [k for k in range(1, total + 1) if k not in legs]
    out = {}
    tmp = RingMatrix(n ** total, {}, (n, total))
    for (rr, cc), v in r.entries.items():
        (a1, a2), (b1, b2) = r.unflatten(rr), r.unflatten(cc)
        for rest in iproduct(range(1, n + 1), repeat=len(others)):
            row = dict(zip(others, rest))
            col = dict(row)
            row[i], row[j], col[i], col[j] = a1, a2, b1, b2
            ri = tmp.index(tuple(row[k] for k in range(1, total + 1)))
            ci = tmp.index(tuple(col[k] for k in range(1, total + 1)))
            out[(ri, ci)] = v
    return RingMatrix(n ** total, out, (n, total))


# -- predicates -------------------------------------------------------------

def is_diagonal(a: RingMatrix) -> bool:
    return all(v.is_zero() for (i, j), v in a.entries.items() if i != j)


def _unit_diag(a: RingMatrix) -> bool:
    for i in range(a.dim):
        v = a.entries.get((i, i))
        if v is None or not (v - one_like(v)).is_zero():
            return False
    return True


def is_unit_lower(a: RingMatrix) -> bool:
    return _unit_diag(a) and all(v.is_zero() for (i, j), v in a.entries.items() if i < j)


def is_unit_upper(a: RingMatrix) -> bool:
    return _unit_diag(a) and all(v.is_zero() for (i, j), v in a.entries.items() if i > j)


def off_diagonal(a: RingMatrix) -> list:
    return sorted(k for k, v in a.entries.items() if k[0] != k[1] and not v.is_zero())


# -- Gauss decomposition --------------------------------------------------

@dataclass
class GaussFactors:
    """``M = lower * diag * upper`` (order "ldu") or ``upper * diag * lower`` ("udl")."""

    lower: RingMatrix
    diag: RingMatrix
    upper: RingMatrix
    order: str = "ldu"

    def factors(self) -> list[RingMatrix]:
        if self.order == "ldu":
            return [self.lower, self.diag, self.upper]
        return [self.upper, self.diag, self.lower]

    def product(self) -> RingMatrix:
        return mat_product(self.factors())

    def inverse(self) -> RingMatrix:
        return mat_product([unitriangular_inverse(f) if f is not self.diag else self.diag.inverse()
                            for f in reversed(self.factors())])


def unitriangular_inverse(a: RingMatrix) -> RingMatrix:
    """Invert ``1 + N`` with ``N`` nilpotent by the finite series ``sum (-N)^k``."""
    one = a.one_like()
    nil = a - one
    out = one
    term = one
    for _ in range(a.dim):
        term = matmul(term, -nil)
        if term.is_zero():
            break
        out = out + term
    return out


def _reverse(a: RingMatrix) -> RingMatrix:
    d = a.dim - 1
    return RingMatrix(a.dim, {(d - i, d - j): v for (i, j), v in a.entries.items()}, a.legs)


def _invert_pivot(p, k: int):
    if p is None or p.is_zero():
        raise SingularPivot(f"zero pivot at position {k}")
    try:
        return p.inverse()
    except QcvError as exc:
        raise SingularPivot(f"pivot at position {k} is not invertible: {exc}") from exc


def _ldu(m: RingMatrix) -> GaussFactors:
    d = m.dim
    one = one_like(next(iter(m.entries.values()), ONE))
    L: dict = {}
    U: dict = {}
    D: dict = {}
    Dinv: dict = {}

    def acc(i, j, upto):
        # sum_{l < upto} L[i,l] D[l] U[l,j]
        s = None
        for l in range(upto):
            a = L.get((i, l)) if i != l else one
            b = U.get((l, j)) if j != l else one
            if a is None or b is None or l not in D:
                continue
            t = a * D[l] * b
            s = t if s is None else s + t
        return s

    for k in range(d):
        s = acc(k, k, k)
        p = m.entries.get((k, k))
        piv = _sub(p, s)
        Dinv[k] = _invert_pivot(piv, k)
        D[k] = piv
        for i in range(k + 1, d):
            x = _sub(m.entries.get((i, k)), acc(i, k, k))
            if x is not None and not x.is_zero():
                L[(i, k)] = x * Dinv[k]
            y = _sub(m.entries.get((k, i)), acc(k, i, k))
            if y is not None and not y.is_zero():
                U[(k, i)] = Dinv[k] * y
    lower = RingMatrix(d, {**L, **{(i, i): one for i in range(d)}}, m.legs)
    upper = RingMatrix(d, {**U, **{(i, i): one for i in range(d)}}, m.legs)
    diag = RingMatrix(d, {(k, k): v for k, v in D.items()}, m.legs)
    return GaussFactors(lower, diag, upper, "ldu")


def _sub(a, b):
    if b is None:
        return a
    if a is None:
        return -b
    return a - b


def gauss_decompose(m: RingMatrix, order: str = "ldu") -> GaussFactors:
    """Unitriangular-diagonal-unitriangular factorisation.

    ``order="udl"`` gives ``M = upper * diag * lower`` by running the
    ``ldu`` algorithm on the index-reversed matrix.
    """
    if order == "ldu":
        return _ldu(m)
    if order != "udl":
        raise ValueError(f"unknown Gauss order {order!r}")
    g = _ldu(_reverse(m))
    return GaussFactors(_reverse(g.upper), _reverse(g.diag), _reverse(g.lower), "udl")
