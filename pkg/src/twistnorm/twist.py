"""Twist-matrix families, Frobenius unit roots, and their cokernels.

A twist family is a finite list of labels, each carrying one invertible
d x d matrix over truncated Z_p.  Labels act on independent summands, so
cokernels aggregate blockwise across the family.  For the one-dimensional
elliptic pipeline the twist parameter is the unit root of the Frobenius
characteristic polynomial x^2 - a*x + q of an ordinary curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import SupersingularError
from .padic import INF, Zp, ZpMatrix, ZpPoly, hensel_root, smith_normal_form


@dataclass(frozen=True)
class AbGroupStructure:
    """A finite abelian p-group plus free rank: the common verdict currency.

    cyclic_orders is a nonincreasing tuple of prime powers > 1.
    """

    cyclic_orders: tuple[int, ...]
    free_rank: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "cyclic_orders", tuple(sorted((o for o in self.cyclic_orders if o > 1), reverse=True))
        )
        if any(o < 2 for o in self.cyclic_orders):
            raise ValueError("cyclic orders must be >= 2")
        if self.free_rank < 0:
            raise ValueError("negative free rank")

    @classmethod
    def trivial(cls) -> AbGroupStructure:
        return cls((), 0)

    def order(self) -> int:
        if self.free_rank:
            raise ValueError("infinite group has no order")
        out = 1
        for o in self.cyclic_orders:
            out *= o
        return out

    def direct_sum(self, other: AbGroupStructure) -> AbGroupStructure:
        return AbGroupStructure(self.cyclic_orders + other.cyclic_orders, self.free_rank + other.free_rank)

    def is_trivial(self) -> bool:
        return not self.cyclic_orders and self.free_rank == 0

    def describe(self) -> str:
        parts = [f"Z/{o}" for o in self.cyclic_orders] + ["Z"] * self.free_rank
        return " x ".join(parts) if parts else "0"


@dataclass(frozen=True)
class TwistFamily:
    """Labelled family of invertible twist matrices over Z_p."""

    dimension: int
    labels: tuple[str, ...]
    matrices: tuple[ZpMatrix, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("twist family needs at least one label")
        if len(self.labels) != len(self.matrices):
            raise ValueError("one matrix per label required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels")
        for mat in self.matrices:
            if mat.rows != self.dimension or mat.cols != self.dimension:
                raise ValueError("twist matrix has wrong shape")
            if not mat.det().is_unit():
                raise ValueError("twist matrix is not invertible over Z_p")

    @property
    def p(self) -> int:
        return self.matrices[0].p

    @property
    def prec(self) -> int:
        return self.matrices[0].n

    @classmethod
    def from_units(cls, p: int, prec: int, units: Sequence[int], labels: Sequence[str] | None = None) -> TwistFamily:
        """d = 1 family from plain unit integers."""
        labels = tuple(labels) if labels is not None else tuple(f"j{i}" for i in range(len(units)))
        mats = tuple(ZpMatrix.from_ints(p, prec, [[u]]) for u in units)
        return cls(1, labels, mats)

    def matrix(self, label: str) -> ZpMatrix:
        return self.matrices[self.labels.index(label)]


def unit_root(a_q: int, q: int, prec: int) -> Zp:
    """The unit root of x^2 - a_q*x + q for an ordinary trace a_q.

    Hensel lifting from the residue root a_q mod p; the complementary root
    q/u has valuation log_p(q).
    """
    p = _smallest_prime_factor(q)
    s = 0
    qq = q
    while qq > 1:
        if qq % p:
            raise ValueError(f"{q} is not a prime power")
        qq //= p
        s += 1
    if a_q % p == 0:
        raise SupersingularError(f"trace {a_q} is divisible by {p}: no unit root")
    f = ZpPoly.from_ints(p, prec, [q, -a_q, 1])
    u = hensel_root(f, a_q % p)
    if u.valuation() != 0:
        raise ArithmeticError("unit root has positive valuation")
    comp = Zp(p, prec, q) * u.inv()
    if comp.valuation() != min(s, prec):
        raise ArithmeticError("complementary root has wrong valuation")
    return u


def _smallest_prime_factor(q: int) -> int:
    if q < 2:
        raise ValueError("q must be >= 2")
    f = 2
    while f * f <= q:
        if q % f == 0:
            return f
        f += 1
    return q


def _identity_minus(mat: ZpMatrix) -> ZpMatrix:
    return ZpMatrix.identity(mat.p, mat.n, mat.rows) - mat


def coker(family: TwistFamily) -> AbGroupStructure:
    """Structure of the direct sum over labels of Z_p^d/(I - u_j)Z_p^d.

    Divisors at the precision cap are free summands; rerun at higher
    precision to pin them down.
    """
    total = AbGroupStructure.trivial()
    p = family.p
    for mat in family.matrices:
        snf = smith_normal_form(_identity_minus(mat))
        orders = []
        free = 0
        for v in snf.divisor_valuations:
            if v == INF:
                free += 1
            elif v >= 1:
                orders.append(p**int(v))
        total = total.direct_sum(AbGroupStructure(tuple(orders), free))
    return total


def coker_mod(family: TwistFamily, exponent: int) -> AbGroupStructure:
    """Structure of the direct sum over labels of (Z/p^n)^d/(I - u_j)(Z/p^n)^d."""
    if exponent < 1:
        raise ValueError("exponent must be >= 1")
    p = family.p
    total = AbGroupStructure.trivial()
    for mat in family.matrices:
        capped = ZpMatrix.from_ints(p, exponent, mat.to_ints())
        snf = smith_normal_form(_identity_minus(capped))
        orders = []
        for v in snf.divisor_valuations:
            k = exponent if v == INF else min(exponent, int(v))
            if k >= 1:
                orders.append(p**k)
        total = total.direct_sum(AbGroupStructure(tuple(orders), 0))
    return total
