"""Finite abelian p-group computations on principal units modulo U^(M).

U^1/U^(M) is generated by the elementary units 1 + b*w_i along the unit
filtration (b running over a residue-field basis, w_i the canonical
valuation-i scale).  Digit decomposition against these generators gives a
bijective coordinate system, the p-th power relations present the group as
Z^k modulo a full-rank lattice, and one Smith normal form turns that into
canonical coordinates in a direct sum of cyclic groups.  All subgroup,
quotient, and membership questions are then integer SNF on small exponent
matrices.
"""

from __future__ import annotations

from .errors import PrecisionExhausted
from .padic import INF, ZpMatrix, smith_normal_form
from .twist import AbGroupStructure
from .towers import (
    Elem,
    RamLayer,
    UnramLevel,
    elementary_unit,
    residue_field_of,
    unit_component,
    unit_filtration_level,
    val_cap_of,
)


class UnitGroupModM:
    """U^1(ambient)/U^(depth) with digit generators and cyclic coordinates."""

    def __init__(self, ambient: UnramLevel | RamLayer, depth: int):
        if depth < 2:
            raise ValueError("depth must be >= 2")
        if depth > val_cap_of(ambient):
            raise PrecisionExhausted("depth exceeds the precision cap")
        self.ambient = ambient
        self.depth = depth
        self.res_field = residue_field_of(ambient)
        self.p = self.res_field.p
        m = self.res_field.m
        self.basis = [
            self.res_field.from_coeffs([1 if t == i else 0 for t in range(m)])
            for i in range(m)
        ]
        self.positions = [(i, t) for i in range(1, depth) for t in range(m)]
        self.k = len(self.positions)
        self.generators = [
            elementary_unit(ambient, i, self.basis[t]) for (i, t) in self.positions
        ]
        self._index = {pos: idx for idx, pos in enumerate(self.positions)}
        relations = []
        for idx, gen in enumerate(self.generators):
            row = [0] * self.k
            row[idx] = self.p
            for col, digit in enumerate(self.dlog(gen**self.p)):
                row[col] -= digit
            relations.append(row)
        snf_prec = depth + 4
        snf = smith_normal_form(ZpMatrix.from_ints(self.p, snf_prec, relations))
        self._coord_transform = snf.right.to_ints()
        vals = []
        for v in snf.divisor_valuations:
            if v == INF:
                raise PrecisionExhausted("unit group relations degenerate at this precision")
            vals.append(int(v))
        self.moduli = tuple(self.p**v for v in vals if v >= 1)
        self._keep = [i for i, v in enumerate(vals) if v >= 1]
        self.exponent_cap = max(vals) if vals else 0

    def structure(self) -> AbGroupStructure:
        return AbGroupStructure(self.moduli, 0)

    def dlog(self, x: Elem) -> list[int]:
        """Digit vector of x against the elementary-unit generators."""
        digits = [0] * self.k
        cur = x
        for i in range(1, self.depth):
            if unit_filtration_level(cur) > i:
                continue
            comp = unit_component(cur, i)
            if comp.is_zero():
                continue
            corr = None
            for t, digit in enumerate(comp.coeffs):
                if digit:
                    digits[self._index[(i, t)]] = digit
                    g = self.generators[self._index[(i, t)]] ** digit
                    corr = g if corr is None else corr * g
            if corr is not None:
                cur = cur * corr.inv()
        if unit_filtration_level(cur) < self.depth:
            raise ArithmeticError("digit decomposition failed to terminate")
        return digits

    def coords(self, x: Elem) -> tuple[int, ...]:
        """Coordinates of x in the canonical direct sum of cyclic groups."""
        v = self.dlog(x)
        out = []
        for pos, j in enumerate(self._keep):
            acc = 0
            for i in range(self.k):
                acc += v[i] * self._coord_transform[i][j]
            out.append(acc % self.moduli[pos])
        return tuple(out)


# ---------------------------------------------------------------------------
# structure computations in a direct sum of cyclic p-groups
# ---------------------------------------------------------------------------


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0 and n > 1:
        n //= p
        v += 1
    return v


def _scaled(rows: list[tuple[int, ...]], moduli: tuple[int, ...], p: int, cap: int):
    """Rescale columns so every congruence is modulo p^cap."""
    scales = [p ** (cap - _vp(mod, p)) for mod in moduli]
    return [[r[j] * scales[j] for j in range(len(moduli))] for r in rows]


def subgroup_structure(
    rows: list[tuple[int, ...]], moduli: tuple[int, ...], p: int
) -> AbGroupStructure:
    """Structure of the subgroup of ⊕ Z/moduli generated by the rows."""
    if not rows or not moduli:
        return AbGroupStructure.trivial()
    cap = max(_vp(m, p) for m in moduli)
    mat = _scaled(list(rows), moduli, p, cap)
    snf = smith_normal_form(ZpMatrix.from_ints(p, cap + 2, mat))
    orders = []
    for v in snf.divisor_valuations:
        k = cap if v == INF else min(cap, int(v))
        if cap - k >= 1:
            orders.append(p ** (cap - k))
    return AbGroupStructure(tuple(orders), 0)


def _kernel_rows(
    stacked: list[list[int]], p: int, cap: int
) -> list[list[int]]:
    """Generators of {z : z @ stacked == 0 mod p^cap} (left kernel lattice)."""
    n = len(stacked)
    snf = smith_normal_form(ZpMatrix.from_ints(p, cap + 2, stacked))
    left = snf.left.to_ints()
    out = []
    for i, v in enumerate(snf.divisor_valuations):
        shift = 0 if v == INF else max(0, cap - int(v))
        out.append([(p**shift) * c for c in left[i]])
    for i in range(len(snf.divisor_valuations), n):
        out.append(list(left[i]))
    for i in range(n):
        row = [0] * n
        row[i] = p**cap
        out.append(row)
    return out


def quotient_structure(
    num_rows: list[tuple[int, ...]],
    den_rows: list[tuple[int, ...]],
    moduli: tuple[int, ...],
    p: int,
) -> AbGroupStructure:
    """Structure of (<num> + 0)/(<den> + 0) inside ⊕ Z/moduli.

    Requires every denominator generator to lie in the numerator subgroup;
    that containment is checked and violations raise.
    """
    if not moduli:
        return AbGroupStructure.trivial()
    for row in den_rows:
        if not in_span(row, num_rows, moduli, p):
            raise ArithmeticError("denominator subgroup is not contained in the numerator")
    if not num_rows:
        return AbGroupStructure.trivial()
    cap = max(_vp(m, p) for m in moduli)
    lat = [[moduli[i] if j == i else 0 for j in range(len(moduli))] for i in range(len(moduli))]
    stacked = (
        _scaled(num_rows, moduli, p, cap)
        + _scaled(den_rows, moduli, p, cap)
        + _scaled(lat, moduli, p, cap)
    )
    kernel = _kernel_rows(stacked, p, cap)
    r_num = len(num_rows)
    proj = [row[:r_num] for row in kernel]
    snf = smith_normal_form(ZpMatrix.from_ints(p, cap + 2, proj))
    orders = []
    for v in snf.divisor_valuations:
        if v == INF:
            raise ArithmeticError("quotient came out infinite: relation rows missing")
        if int(v) >= 1:
            orders.append(p ** int(v))
    return AbGroupStructure(tuple(orders), 0)


def full_quotient_structure(
    rows: list[tuple[int, ...]], moduli: tuple[int, ...], p: int
) -> AbGroupStructure:
    """Structure of (⊕ Z/moduli)/<rows>."""
    if not moduli:
        return AbGroupStructure.trivial()
    lat = [[moduli[i] if j == i else 0 for j in range(len(moduli))] for i in range(len(moduli))]
    stacked = list(rows) + lat
    cap = max(_vp(m, p) for m in moduli)
    snf = smith_normal_form(ZpMatrix.from_ints(p, cap + 2, stacked))
    orders = []
    for v in snf.divisor_valuations:
        if v == INF:
            raise ArithmeticError("full quotient came out infinite")
        if int(v) >= 1:
            orders.append(p ** int(v))
    return AbGroupStructure(tuple(orders), 0)


def in_span(
    row: tuple[int, ...], rows: list[tuple[int, ...]], moduli: tuple[int, ...], p: int
) -> bool:
    """Whether row lies in the subgroup of ⊕ Z/moduli generated by rows.

    Solvability of z @ M = row modulo p^cap, read off the Smith form of M:
    in diagonal coordinates each congruence w_j * d_j = t_j mod p^cap is
    solvable iff p^min(v(d_j), cap) divides t_j.
    """
    if not moduli:
        return True
    cap = max(_vp(m, p) for m in moduli)
    lat = [[moduli[i] if j == i else 0 for j in range(len(moduli))] for i in range(len(moduli))]
    mat = _scaled(list(rows), moduli, p, cap) + _scaled(lat, moduli, p, cap)
    target = _scaled([list(row)], moduli, p, cap)[0]
    snf = smith_normal_form(ZpMatrix.from_ints(p, cap + 2, mat))
    right = snf.right.to_ints()
    size = len(moduli)
    transformed = [
        sum(target[i] * right[i][j] for i in range(size)) % p**cap for j in range(size)
    ]
    for j, comp in enumerate(transformed):
        if comp == 0:
            continue
        v = snf.divisor_valuations[j] if j < len(snf.divisor_valuations) else INF
        need = cap if v == INF else min(cap, int(v))
        if _vp(comp, p) < need:
            return False
    return True


def class_order(
    row: tuple[int, ...], den_rows: list[tuple[int, ...]], moduli: tuple[int, ...], p: int
) -> int:
    """Order of the class of row in (⊕ Z/moduli)/<den_rows>."""
    cap = max(_vp(m, p) for m in moduli) if moduli else 0
    cur = tuple(row)
    k = 1
    for _ in range(cap + 1):
        if in_span(cur, den_rows, moduli, p):
            return k
        cur = tuple((p * c) for c in cur)
        k *= p
    raise ArithmeticError("class order exceeds the exponent cap")
