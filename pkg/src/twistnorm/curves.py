"""Weierstrass curves over small finite fields, counted exhaustively.

Point counting is pure enumeration (the desk bound keeps every field below
3^9 elements), which makes this module trustworthy enough to serve as the
oracle side of the twist-cokernel coherence checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DeskBoundError
from .gf import DESK_BOUND, GFElem, GFField, enumerate_field
from .twist import AbGroupStructure


@dataclass(frozen=True)
class Point:
    """Affine point or the point at infinity (x = y = None)."""

    x: GFElem | None
    y: GFElem | None

    @classmethod
    def infinity(cls) -> Point:
        return cls(None, None)

    def is_infinity(self) -> bool:
        return self.x is None


@dataclass(frozen=True)
class Curve:
    """y^2 + a1*x*y + a3*y = x^3 + a2*x^2 + a4*x + a6 over a small field."""

    field: GFField
    a1: GFElem
    a2: GFElem
    a3: GFElem
    a4: GFElem
    a6: GFElem

    def __post_init__(self):
        if self.field.order > DESK_BOUND:
            raise DeskBoundError("curve field exceeds the desk bound")
        if self.discriminant().is_zero():
            raise ValueError("singular curve: discriminant is zero")

    @classmethod
    def from_ints(cls, field: GFField, coeffs: tuple[int, int, int, int, int]) -> Curve:
        a1, a2, a3, a4, a6 = (field.from_int(c) for c in coeffs)
        return cls(field, a1, a2, a3, a4, a6)

    def discriminant(self) -> GFElem:
        f = self.field
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        b2 = a1 * a1 + a2.scale(4)
        b4 = a4.scale(2) + a1 * a3
        b6 = a3 * a3 + a6.scale(4)
        b8 = a1 * a1 * a6 + (a2 * a6).scale(4) - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return (
            -(b2 * b2 * b8)
            - (b4 * b4 * b4).scale(8)
            - (b6 * b6).scale(27)
            + (b2 * b4 * b6).scale(9)
        )

    def rhs(self, x: GFElem) -> GFElem:
        return x * x * x + self.a2 * x * x + self.a4 * x + self.a6

    def contains(self, pt: Point) -> bool:
        if pt.is_infinity():
            return True
        x, y = pt.x, pt.y
        return (y * y + self.a1 * x * y + self.a3 * y) == self.rhs(x)

    def negate(self, pt: Point) -> Point:
        if pt.is_infinity():
            return pt
        return Point(pt.x, -pt.y - self.a1 * pt.x - self.a3)

    def add(self, pt1: Point, pt2: Point) -> Point:
        if pt1.is_infinity():
            return pt2
        if pt2.is_infinity():
            return pt1
        x1, y1, x2, y2 = pt1.x, pt1.y, pt2.x, pt2.y
        if x1 == x2:
            if pt2 == self.negate(pt1):
                return Point.infinity()
            num = x1 * x1
            num = num.scale(3) + self.a2 * x1.scale(2) + self.a4 - self.a1 * y1
            den = y1.scale(2) + self.a1 * x1 + self.a3
            lam = num * den.inv()
        else:
            lam = (y2 - y1) * (x2 - x1).inv()
        x3 = lam * lam + self.a1 * lam - self.a2 - x1 - x2
        y3 = lam * (x1 - x3) - y1 - self.a1 * x3 - self.a3
        return Point(x3, y3)

    def scalar_mul(self, k: int, pt: Point) -> Point:
        if k < 0:
            return self.scalar_mul(-k, self.negate(pt))
        out = Point.infinity()
        base = pt
        while k:
            if k & 1:
                out = self.add(out, base)
            base = self.add(base, base)
            k >>= 1
        return out


@lru_cache(maxsize=None)
def _sqrt_table(field: GFField) -> dict[tuple[int, ...], GFElem]:
    table: dict[tuple[int, ...], GFElem] = {}
    for el in enumerate_field(field):
        table.setdefault((el * el).coeffs, el)
    return table


def points(curve: Curve) -> list[Point]:
    """Every point on the curve, the point at infinity first."""
    f = curve.field
    sqrt = _sqrt_table(f)
    inv2 = f.from_int(2).inv()
    out = [Point.infinity()]
    for x in enumerate_field(f):
        b = curve.a1 * x + curve.a3
        disc = b * b + curve.rhs(x).scale(4)
        root = sqrt.get(disc.coeffs)
        if root is None:
            continue
        if root.is_zero():
            out.append(Point(x, (-b) * inv2))
        else:
            out.append(Point(x, (-b + root) * inv2))
            out.append(Point(x, (-b - root) * inv2))
    return out


def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _point_order(curve: Curve, pt: Point, group_order: int, factors: dict[int, int]) -> int:
    order = group_order
    for ell in factors:
        while order % ell == 0 and curve.scalar_mul(order // ell, pt).is_infinity():
            order //= ell
    return order


def count_and_structure(curve: Curve) -> tuple[int, AbGroupStructure]:
    """Exact order by enumeration plus the Z/m x Z/n (n | m) shape.

    The exponent is the lcm of point orders; the rank-2 cofactor follows
    from the order.  The Hasse bound is asserted as a sanity check.
    """
    pts = points(curve)
    n = len(pts)
    q = curve.field.order
    if abs(q + 1 - n) > 2 * math.isqrt(q) + 1:
        raise ArithmeticError("point count violates the Hasse bound")
    factors = _factorize(n)
    exponent = 1
    for pt in pts:
        if pt.is_infinity():
            continue
        ordp = _point_order(curve, pt, n, factors)
        exponent = exponent * ordp // math.gcd(exponent, ordp)
        if exponent == n:
            break
    cof = n // exponent
    if exponent % cof or (cof > 1 and (q - 1) % cof):
        raise ArithmeticError("group structure inconsistent with a rank-2 abelian group")
    orders = tuple(o for o in (exponent, cof) if o > 1)
    return n, AbGroupStructure(orders, 0)


def trace_and_ordinary(curve: Curve) -> tuple[int, bool]:
    """Frobenius trace a_q = q + 1 - #E and the ordinariness flag."""
    n, _ = count_and_structure(curve)
    q = curve.field.order
    a = q + 1 - n
    return a, a % curve.field.p != 0


def _p_part(n: int, p: int) -> int:
    out = 1
    while n % p == 0:
        out *= p
        n //= p
    return out


def p_primary(curve: Curve) -> AbGroupStructure:
    """Sylow p-subgroup of the point group, p the field characteristic."""
    _, structure = count_and_structure(curve)
    p = curve.field.p
    orders = tuple(_p_part(o, p) for o in structure.cyclic_orders)
    return AbGroupStructure(orders, 0)


def quotient_mod_pn(curve: Curve, n_exp: int) -> AbGroupStructure:
    """Cokernel of multiplication by p^n on the point group.

    For G = Z/m1 x Z/m2 this is the direct sum of Z/gcd(p^n, m_i); it
    stabilizes to the p-primary part as n grows.
    """
    if n_exp < 0:
        raise ValueError("exponent must be >= 0")
    _, structure = count_and_structure(curve)
    p = curve.field.p
    orders = tuple(math.gcd(p**n_exp, o) for o in structure.cyclic_orders)
    return AbGroupStructure(orders, 0)


def smooth_curves(field: GFField):
    """All smooth Weierstrass curves over the field, coefficient order fixed."""
    import itertools

    for coeffs in itertools.product(range(field.p), repeat=5):
        try:
            yield Curve.from_ints(field, coeffs)
        except ValueError:
            continue
