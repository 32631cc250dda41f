"""Truncated p-adic integers, Hensel lifting, and Smith normal form.

Everything here is exact arithmetic in Z/p^N viewed as Z_p cut off at a
working precision of N digits.  Precision is a per-value attribute and
binary operations insist on matching (p, N) pairs: silent coercion is how
precision bugs hide, so there is none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

INF = math.inf


def pval(r: int, p: int, cap: int) -> int | float:
    """p-adic valuation of the residue r, capped at the precision.

    Returns ``cap`` for r == 0; the cap is where "zero at this precision"
    lives.
    """
    if r == 0:
        return cap
    v = 0
    while r % p == 0 and v < cap:
        r //= p
        v += 1
    return v


@dataclass(frozen=True, slots=True)
class Zp:
    """An element of Z_p known modulo p^n."""

    p: int
    n: int
    r: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"precision must be >= 1, got {self.n}")
        object.__setattr__(self, "r", self.r % self.p**self.n)

    def _check(self, other: Zp) -> None:
        if self.p != other.p:
            raise ValueError(f"prime mismatch: {self.p} vs {other.p}")
        if self.n != other.n:
            raise ValueError(f"precision mismatch: {self.n} vs {other.n}")

    def __add__(self, other: Zp) -> Zp:
        self._check(other)
        return Zp(self.p, self.n, self.r + other.r)

    def __sub__(self, other: Zp) -> Zp:
        self._check(other)
        return Zp(self.p, self.n, self.r - other.r)

    def __mul__(self, other: Zp) -> Zp:
        self._check(other)
        return Zp(self.p, self.n, self.r * other.r)

    def __neg__(self) -> Zp:
        return Zp(self.p, self.n, -self.r)

    def valuation(self) -> int | float:
        """v_p of this element; equals n exactly when the residue is 0."""
        return pval(self.r, self.p, self.n)

    def is_unit(self) -> bool:
        return self.r % self.p != 0

    def inv(self) -> Zp:
        if not self.is_unit():
            raise ValueError(f"not a unit: valuation {self.valuation()} > 0")
        return Zp(self.p, self.n, pow(self.r, -1, self.p**self.n))

    def __pow__(self, k: int) -> Zp:
        if k < 0:
            return self.inv() ** (-k)
        return Zp(self.p, self.n, pow(self.r, k, self.p**self.n))

    def truncate(self, n: int) -> Zp:
        """Re-read this value at a lower precision."""
        if n > self.n:
            raise ValueError(f"cannot raise precision {self.n} to {n}")
        return Zp(self.p, n, self.r)

    def __repr__(self):
        return f"Zp({self.r} mod {self.p}^{self.n})"


def zp(p: int, n: int, value: int) -> Zp:
    return Zp(p, n, value)


@dataclass(frozen=True, slots=True)
class ZpPoly:
    """Polynomial with Zp coefficients, low degree first."""

    coeffs: tuple[Zp, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("empty polynomial")
        c0 = self.coeffs[0]
        for c in self.coeffs[1:]:
            c0._check(c)

    @classmethod
    def from_ints(cls, p: int, n: int, coeffs: Sequence[int]) -> ZpPoly:
        return cls(tuple(Zp(p, n, c) for c in coeffs))

    @property
    def p(self) -> int:
        return self.coeffs[0].p

    @property
    def n(self) -> int:
        return self.coeffs[0].n

    def degree(self) -> int:
        d = len(self.coeffs) - 1
        while d > 0 and self.coeffs[d].r == 0:
            d -= 1
        return d

    def is_monic(self) -> bool:
        return self.coeffs[self.degree()].r == 1

    def __call__(self, x: Zp) -> Zp:
        acc = Zp(x.p, x.n, 0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> ZpPoly:
        if len(self.coeffs) == 1:
            return ZpPoly((Zp(self.p, self.n, 0),))
        return ZpPoly(
            tuple(Zp(self.p, self.n, i * c.r) for i, c in enumerate(self.coeffs) if i > 0)
        )


def hensel_root(f: ZpPoly, seed: int) -> Zp:
    """Lift a simple residue root of f to full precision by Newton iteration.

    Requires f(seed) == 0 mod p and f'(seed) a unit mod p; each step doubles
    the number of correct digits.
    """
    p, n = f.p, f.n
    x = Zp(p, n, seed % p)
    if f(x).r % p != 0:
        raise ValueError(f"seed {seed} is not a root of f mod {p}")
    if f.derivative()(x).r % p == 0:
        raise ValueError(f"seed {seed} is not a simple root (f' vanishes mod {p})")
    steps = max(1, math.ceil(math.log2(n))) + 1
    for _ in range(steps):
        x = x - f(x) * f.derivative()(x).inv()
    if f(x).r != 0:
        raise ValueError("Newton iteration failed to converge")
    return x


def teichmuller(p: int, a: int, n: int) -> Zp:
    """The (p-1)-st root of unity congruent to a mod p."""
    if a % p == 0:
        raise ValueError("no Teichmuller representative for residue 0")
    q = p**n
    x = a % q
    prev = None
    while x != prev:
        prev = x
        x = pow(x, p, q)
    return Zp(p, n, x)


@dataclass(frozen=True, slots=True)
class ZpMatrix:
    """Rectangular matrix over truncated Z_p."""

    rows: int
    cols: int
    entries: tuple[tuple[Zp, ...], ...]

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("ragged matrix")
        if self.rows and self.cols:
            e0 = self.entries[0][0]
            for row in self.entries:
                for e in row:
                    e0._check(e)

    @classmethod
    def from_ints(cls, p: int, n: int, rows: Sequence[Sequence[int]]) -> ZpMatrix:
        ents = tuple(tuple(Zp(p, n, v) for v in row) for row in rows)
        return cls(len(ents), len(ents[0]) if ents else 0, ents)

    @classmethod
    def identity(cls, p: int, n: int, size: int) -> ZpMatrix:
        return cls.from_ints(p, n, [[1 if i == j else 0 for j in range(size)] for i in range(size)])

    @property
    def p(self) -> int:
        return self.entries[0][0].p

    @property
    def n(self) -> int:
        return self.entries[0][0].n

    def to_ints(self) -> list[list[int]]:
        return [[e.r for e in row] for row in self.entries]

    def __matmul__(self, other: ZpMatrix) -> ZpMatrix:
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        self.entries[0][0]._check(other.entries[0][0])
        p, n = self.p, self.n
        q = p**n
        a, b = self.to_ints(), other.to_ints()
        out = [
            [sum(a[i][k] * b[k][j] for k in range(self.cols)) % q for j in range(other.cols)]
            for i in range(self.rows)
        ]
        return ZpMatrix.from_ints(p, n, out)

    def __sub__(self, other: ZpMatrix) -> ZpMatrix:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return ZpMatrix(
            self.rows,
            self.cols,
            tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries)),
        )

    def det(self) -> Zp:
        """Determinant, computed exactly over Z then reduced."""
        if self.rows != self.cols:
            raise ValueError("determinant of non-square matrix")
        return Zp(self.p, self.n, _int_det(self.to_ints()))


def _int_det(a: list[list[int]]) -> int:
    """Fraction-free (Bareiss) determinant over Z."""
    m = [row[:] for row in a]
    size = len(m)
    if size == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(size - 1):
        if m[k][k] == 0:
            for i in range(k + 1, size):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[-1][-1]


@dataclass(frozen=True, slots=True)
class SnfResult:
    """Diagonalization L @ M @ R = diag(p^v) mod p^N.

    divisor_valuations is nondecreasing; a slot reported as INF is a divisor
    indistinguishable from zero at this precision, and consumers must treat
    it as a free summand.
    """

    divisor_valuations: tuple[int | float, ...]
    left: ZpMatrix
    right: ZpMatrix


def smith_normal_form(m: ZpMatrix) -> SnfResult:
    """SNF over Z/p^N by minimal-valuation pivoting.

    Pivot ties break at the lowest row index, then column index, so the
    output is deterministic.  A finite reported valuation v is reliable
    whenever v < N.
    """
    rows, cols = m.rows, m.cols
    if rows == 0 or cols == 0:
        empty = ZpMatrix(0, 0, ())
        return SnfResult((), empty, empty)
    p, n = m.p, m.n
    q = p**n
    a = m.to_ints()
    left = [[1 if i == j else 0 for j in range(rows)] for i in range(rows)]
    right = [[1 if i == j else 0 for j in range(cols)] for i in range(cols)]
    vals: list[int | float] = []
    size = min(rows, cols)
    for k in range(size):
        piv, pv = None, n
        for i in range(k, rows):
            for j in range(k, cols):
                v = pval(a[i][j], p, n)
                if v < pv:
                    piv, pv = (i, j), v
        if piv is None:
            break
        pi, pj = piv
        if pi != k:
            a[k], a[pi] = a[pi], a[k]
            left[k], left[pi] = left[pi], left[k]
        if pj != k:
            for row in a:
                row[k], row[pj] = row[pj], row[k]
            for row in right:
                row[k], row[pj] = row[pj], row[k]
        unit_inv = pow(a[k][k] // p**pv, -1, q)
        a[k] = [(x * unit_inv) % q for x in a[k]]
        left[k] = [(x * unit_inv) % q for x in left[k]]
        pivot = p**pv
        for i in range(k + 1, rows):
            if a[i][k]:
                f = a[i][k] // pivot
                a[i] = [(x - f * y) % q for x, y in zip(a[i], a[k])]
                left[i] = [(x - f * y) % q for x, y in zip(left[i], left[k])]
        for j in range(k + 1, cols):
            if a[k][j]:
                f = a[k][j] // pivot
                for row in a:
                    row[j] = (row[j] - f * row[k]) % q
                for row in right:
                    row[j] = (row[j] - f * row[k]) % q
        vals.append(pv)
    while len(vals) < size:
        vals.append(INF)
    return SnfResult(
        tuple(vals),
        ZpMatrix.from_ints(p, n, left),
        ZpMatrix.from_ints(p, n, right),
    )
