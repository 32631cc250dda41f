"""Small finite fields F_{p^m}, Frobenius, and brute-force linear oracles.

Tower levels are restricted to degrees p^s, the degrees that occur in the
maximal p-extension of F_p, and each valid (p, s) ships a fixed modulus so
results are reproducible bit for bit.  Everything is bounded by DESK_BOUND
elements; these fields exist to drive exhaustive checks, not cryptography.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

DESK_BOUND = 3**9

# fixed moduli, low-degree coefficients first, per (p, s) with field degree p^s
FIXED_MODULI: dict[tuple[int, int], tuple[int, ...]] = {
    (3, 0): (0, 1),                      # x
    (3, 1): (1, 2, 0, 1),                # x^3 - x + 1: theta^3 = theta - 1
    (3, 2): (2, 0, 0, 0, 1, 0, 0, 0, 0, 1),  # x^9 + x^4 + 2
    (5, 0): (0, 1),                      # x
    (5, 1): (1, 4, 0, 0, 0, 1),          # x^5 - x + 1
}


def _poly_trim(a: list[int]) -> list[int]:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _poly_mulmod(a: Sequence[int], b: Sequence[int], mod: Sequence[int], p: int) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_divmod(out, mod, p)[1]


def _poly_divmod(a: Sequence[int], b: Sequence[int], p: int) -> tuple[list[int], list[int]]:
    a = list(a)
    b = _poly_trim(list(b))
    db = len(b) - 1
    lead_inv = pow(b[-1], -1, p)
    quot = [0] * max(1, len(a) - db)
    while len(_poly_trim(a)) - 1 >= db and any(a):
        a = _poly_trim(a)
        da = len(a) - 1
        if da < db:
            break
        f = (a[-1] * lead_inv) % p
        quot[da - db] = f
        for i in range(db + 1):
            a[da - db + i] = (a[da - db + i] - f * b[i]) % p
    return quot, _poly_trim(a)


def _poly_gcd(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a, b = _poly_trim(list(a)), _poly_trim(list(b))
    while any(b):
        a, b = b, _poly_divmod(a, b, p)[1]
    return a


@dataclass(frozen=True)
class GFField:
    """F_{p^m} presented as F_p[x]/(modulus)."""

    p: int
    m: int
    modulus: tuple[int, ...]

    def __post_init__(self):
        if len(self.modulus) != self.m + 1 or self.modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree m")
        if self.m > 1 and not _is_irreducible(self.modulus, self.p, self.m):
            raise ValueError("modulus is reducible")

    @property
    def order(self) -> int:
        return self.p**self.m

    def zero(self) -> GFElem:
        return GFElem(self, (0,) * self.m)

    def one(self) -> GFElem:
        return self.from_int(1)

    def gen(self) -> GFElem:
        """The residue class of x (zero in the degree-1 field)."""
        if self.m == 1:
            return self.zero()
        return GFElem(self, tuple(1 if i == 1 else 0 for i in range(self.m)))

    def from_int(self, c: int) -> GFElem:
        return GFElem(self, (c % self.p,) + (0,) * (self.m - 1))

    def from_coeffs(self, coeffs: Sequence[int]) -> GFElem:
        c = [v % self.p for v in coeffs]
        if len(c) > self.m:
            c = _poly_divmod(c, list(self.modulus), self.p)[1]
        c += [0] * (self.m - len(c))
        return GFElem(self, tuple(c[: self.m]))


def _is_irreducible(modulus: Sequence[int], p: int, m: int) -> bool:
    # reducible <=> some factor of degree <= m/2 <=> gcd(f, x^{p^i} - x) != 1
    g = [0, 1]
    for _ in range(m // 2):
        g = _poly_powmod(g, p, modulus, p)
        diff = list(g)
        while len(diff) < 2:
            diff.append(0)
        diff[1] = (diff[1] - 1) % p
        if len(_poly_trim(_poly_gcd(modulus, diff, p))) > 1:
            return False
    return True


def _poly_powmod(a: Sequence[int], k: int, mod: Sequence[int], p: int) -> list[int]:
    result = [1]
    base = list(a)
    while k:
        if k & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        k >>= 1
    return result


@lru_cache(maxsize=None)
def field_level(p: int, s: int) -> GFField:
    """The fixed degree-p^s field in the p-tower over F_p."""
    if (p, s) not in FIXED_MODULI:
        if p**(p**s) > DESK_BOUND:
            raise ValueError(f"field F_{p}^{p**s} exceeds the desk bound")
        raise ValueError(f"no fixed modulus for (p={p}, s={s})")
    return GFField(p, p**s, FIXED_MODULI[(p, s)])


def level_of(field: GFField) -> int:
    """Inverse of field_level; errors on degrees that are not p-powers."""
    s, deg = 0, 1
    while deg < field.m:
        deg *= field.p
        s += 1
    if deg != field.m:
        raise ValueError(f"degree {field.m} is not a power of {field.p}")
    return s


@dataclass(frozen=True)
class GFElem:
    field: GFField
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.field.m:
            raise ValueError("coefficient length does not match field degree")

    def _check(self, other: GFElem) -> None:
        if self.field != other.field:
            raise ValueError("elements of different fields")

    def __add__(self, other: GFElem) -> GFElem:
        self._check(other)
        p = self.field.p
        return GFElem(self.field, tuple((a + b) % p for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: GFElem) -> GFElem:
        self._check(other)
        p = self.field.p
        return GFElem(self.field, tuple((a - b) % p for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> GFElem:
        return GFElem(self.field, tuple(-a % self.field.p for a in self.coeffs))

    def __mul__(self, other: GFElem) -> GFElem:
        self._check(other)
        c = _poly_mulmod(self.coeffs, other.coeffs, self.field.modulus, self.field.p)
        c += [0] * (self.field.m - len(c))
        return GFElem(self.field, tuple(c))

    def scale(self, c: int) -> GFElem:
        p = self.field.p
        return GFElem(self.field, tuple((a * c) % p for a in self.coeffs))

    def __pow__(self, k: int) -> GFElem:
        if k < 0:
            return self.inv() ** (-k)
        result = self.field.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def inv(self) -> GFElem:
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return self ** (self.field.order - 2)

    def trace(self) -> int:
        """Absolute trace down to F_p."""
        acc = self
        x = self
        for _ in range(self.field.m - 1):
            x = frobenius(x, 1)
            acc = acc + x
        return acc.coeffs[0]

    def __repr__(self):
        return f"GFElem{self.coeffs}@F_{self.field.p}^{self.field.m}"


def frobenius(a: GFElem, iterations: int = 1) -> GFElem:
    """a ** (p^iterations); the identity once iterations hits the degree."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    out = a
    for _ in range(iterations % a.field.m if a.field.m > 1 else 0):
        out = out**a.field.p
    return out


def enumerate_field(field: GFField) -> Iterator[GFElem]:
    """All elements exactly once, lexicographic on coefficient vectors."""
    if field.order > DESK_BOUND:
        raise ValueError("field exceeds the desk bound")
    for coeffs in itertools.product(range(field.p), repeat=field.m):
        yield GFElem(field, coeffs)


@lru_cache(maxsize=None)
def _embedding_root(src: GFField, dst: GFField) -> GFElem:
    if dst.m % src.m != 0:
        raise ValueError(f"no embedding F_{src.p}^{src.m} -> F_{dst.p}^{dst.m}")
    for cand in enumerate_field(dst):
        acc = dst.zero()
        for c in reversed(src.modulus):
            acc = acc * cand + dst.from_int(c)
        if acc.is_zero():
            return cand
    raise ValueError("embedding root not found")  # unreachable for subfields


def embed(a: GFElem, dst: GFField) -> GFElem:
    """Field embedding along the first root of the source modulus in dst."""
    if a.field == dst:
        return a
    if a.field.m == 1:
        return dst.from_int(a.coeffs[0])
    root = _embedding_root(a.field, dst)
    acc = dst.zero()
    for c in reversed(a.coeffs):
        acc = acc * root + dst.from_int(c)
    return acc


# ---------------------------------------------------------------------------
# F_p linear algebra (dense, deterministic)
# ---------------------------------------------------------------------------


def rref(rows: list[list[int]], p: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form mod p; returns (matrix, pivot column list)."""
    a = [[v % p for v in row] for row in rows]
    if not a:
        return a, []
    ncols = len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [(v * inv) % p for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(v - f * w) % p for v, w in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a, pivots


def solve_mod_p(a: list[list[int]], b: list[int], p: int) -> list[int] | None:
    """One solution of a @ x = b mod p (free variables zero), or None."""
    if not a:
        return []
    aug = [row[:] + [bv] for row, bv in zip(a, b)]
    red, pivots = rref(aug, p)
    ncols = len(a[0])
    if ncols in pivots:
        return None
    x = [0] * ncols
    for r, c in enumerate(pivots):
        x[c] = red[r][ncols]
    return x


def kernel_mod_p(a: list[list[int]], p: int) -> list[list[int]]:
    """Basis of the right kernel of a mod p."""
    if not a:
        return []
    ncols = len(a[0])
    red, pivots = rref(a, p)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for r, c in enumerate(pivots):
            v[c] = (-red[r][fc]) % p
        basis.append(v)
    return basis


def mat_mul_mod_p(a: list[list[int]], b: list[list[int]], p: int) -> list[list[int]]:
    return [
        [sum(a[i][k] * b[k][j] for k in range(len(b))) % p for j in range(len(b[0]))]
        for i in range(len(a))
    ]


def mat_pow_mod_p(a: list[list[int]], k: int, p: int) -> list[list[int]]:
    d = len(a)
    result = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
    base = [row[:] for row in a]
    while k:
        if k & 1:
            result = mat_mul_mod_p(result, base, p)
        base = mat_mul_mod_p(base, base, p)
        k >>= 1
    return result


def mat_inv_mod_p(a: list[list[int]], p: int) -> list[list[int]]:
    d = len(a)
    aug = [row[:] + [1 if i == j else 0 for j in range(d)] for i, row in enumerate(a)]
    red, pivots = rref(aug, p)
    if pivots[:d] != list(range(d)):
        raise ValueError("matrix not invertible mod p")
    return [row[d:] for row in red[:d]]


# ---------------------------------------------------------------------------
# brute-force oracle for the twisted residue equation
# ---------------------------------------------------------------------------


def twist_residue_matrix(field: GFField, u_bar: list[list[int]]) -> list[list[int]]:
    """Matrix of beta -> frobenius(beta) - u_bar @ beta on F_p coordinates."""
    p, m = field.p, field.m
    d = len(u_bar)
    size = d * m
    cols = []
    for j in range(d):
        for t in range(m):
            basis = GFElem(field, tuple(1 if i == t else 0 for i in range(m)))
            fb = frobenius(basis, 1)
            col = [0] * size
            for i in range(d):
                contrib = fb if i == j else field.zero()
                contrib = contrib - basis.scale(u_bar[i][j])
                for tt in range(m):
                    col[i * m + tt] = contrib.coeffs[tt]
            cols.append(col)
    return [[cols[c][r] for c in range(size)] for r in range(size)]


def brute_twist_solve(
    alpha: Sequence[GFElem], u_bar: list[list[int]]
) -> list[GFElem] | None:
    """Solve (frobenius - u_bar)(beta) = alpha by exhaustive linear algebra.

    The d*m unknown F_p coefficients of beta are treated as one flat linear
    system.  Returns the canonical solution (free variables zero) or None as
    the no-solution certificate at this field level.
    """
    field = alpha[0].field
    if field.order > DESK_BOUND:
        raise ValueError("field exceeds the desk bound")
    d = len(alpha)
    if len(u_bar) != d or any(len(r) != d for r in u_bar):
        raise ValueError("u_bar shape does not match alpha length")
    mat = twist_residue_matrix(field, u_bar)
    rhs = [c for a in alpha for c in a.coeffs]
    sol = solve_mod_p(mat, rhs, field.p)
    if sol is None:
        return None
    m = field.m
    return [GFElem(field, tuple(sol[j * m : (j + 1) * m])) for j in range(d)]
