"""Finite-precision unramified levels, ramified cyclotomic layers, and norms.

An UnramLevel models one finite layer of the maximal unramified p-extension
of Q_p: the ring Z_p[x]/(h) at working precision, h a fixed lift of the
residue-field modulus, with the Frobenius realized by Hensel-lifting the
root of h congruent to x^p.  A RamLayer stacks a totally ramified degree-p^n
extension on top, presented by an Eisenstein polynomial; the shipped family
comes from real cyclotomic fields so every constant is reproducible.  Galois
conjugation is substitution of roots of the Eisenstein polynomial, found by
certified digit-by-digit search; the norm is the product of conjugates.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

from .errors import DeskBoundError, NonGaloisLayer, PrecisionExhausted
from .gf import GFElem, GFField, field_level
from .padic import Zp

DESK_LEVELS = {3: (0, 1, 2), 5: (0, 1)}
DESK_RAM = {3: (1, 2), 5: (1,)}

# Eisenstein polynomials (low degree first) for the degree-p^n piece of the
# p^(n+1)-th cyclotomic field, written in the uniformizer 2cos(2*pi/p^(n+1))-2.
CYCLOTOMIC_EISENSTEIN: dict[tuple[int, int], tuple[int, ...]] = {
    (3, 1): (3, 9, 6, 1),
    (3, 2): (3, 81, 540, 1386, 1782, 1287, 546, 135, 18, 1),
    (5, 1): (505, 850, 525, 150, 20, 1),
}

# Uniformizer of the (p, n-1) layer as a polynomial in the (p, n) uniformizer:
# the image of y under y -> (y+2)^p - p*(y+2)-ish Dickson descent, shifted.
SUBLAYER_UNIFORMIZER: dict[tuple[int, int], tuple[int, ...]] = {
    (3, 2): (0, 9, 6, 1),  # pi_1 = pi_2^3 + 6*pi_2^2 + 9*pi_2
}


class UnramLevel:
    """Finite unramified level O(T_s) = Z_p[x]/(h) at precision `prec`."""

    __slots__ = (
        "p", "s", "m", "prec", "q", "modulus", "gffield",
        "_red", "frobenius_image", "_frob_matrix",
    )

    def __init__(self, p: int, s: int, prec: int):
        if p not in DESK_LEVELS or s not in DESK_LEVELS[p]:
            raise DeskBoundError(f"unramified level (p={p}, s={s}) outside desk bounds")
        if prec < 1:
            raise ValueError("precision must be >= 1")
        self.p = p
        self.s = s
        self.m = p**s
        self.prec = prec
        self.q = p**prec
        self.gffield = field_level(p, s)
        self.modulus = tuple(c % p for c in self.gffield.modulus)
        self._red = self._reduction_table()
        self.frobenius_image = self._lift_frobenius()
        self._frob_matrix = self._frobenius_matrix()

    def _reduction_table(self) -> list[tuple[int, ...]]:
        # x^(m+t) mod h for t in [0, m-1), as integer coefficient vectors
        m, q = self.m, self.q
        table = []
        cur = [(-c) % q for c in self.modulus[:m]]  # x^m
        table.append(tuple(cur))
        for _ in range(m - 2):
            nxt = [0] + cur[:-1]
            lead = cur[-1]
            if lead:
                for i in range(m):
                    nxt[i] = (nxt[i] - lead * self.modulus[i]) % q
            cur = nxt
            table.append(tuple(cur))
        return table

    def _mul_vec(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        m, q = self.m, self.q
        if m == 1:
            return ((a[0] * b[0]) % q,)
        out = [0] * (2 * m - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
        for t in range(2 * m - 2, m - 1, -1):
            c = out[t] % q
            if c:
                red = self._red[t - m]
                for i in range(m):
                    out[i] += c * red[i]
        return tuple(v % q for v in out[:m])

    def _inv_vec(self, a: Sequence[int]) -> tuple[int, ...]:
        res = self.residue_vec(a)
        inv0 = GFElem(self.gffield, res).inv()
        y = tuple(c % self.q for c in inv0.coeffs)
        two = self.scalar_vec(2)
        steps = max(1, math.ceil(math.log2(self.prec))) + 1
        for _ in range(steps):
            ay = self._mul_vec(a, y)
            corr = tuple((t - v) % self.q for t, v in zip(two, ay))
            y = self._mul_vec(y, corr)
        if self._mul_vec(a, y) != self.scalar_vec(1):
            raise ValueError("inverse of a non-unit")
        return y

    def residue_vec(self, a: Sequence[int]) -> tuple[int, ...]:
        return tuple(c % self.p for c in a)

    def scalar_vec(self, v: int) -> tuple[int, ...]:
        return (v % self.q,) + (0,) * (self.m - 1)

    def _lift_frobenius(self) -> "UnramElem":
        if self.m == 1:
            return UnramElem(self, (0,))
        gen_p = self.gffield.gen() ** self.p
        xi = tuple(c % self.q for c in gen_p.coeffs)
        h = list(self.modulus)
        hp = [(i * c) % self.q for i, c in enumerate(h)][1:]
        steps = max(1, math.ceil(math.log2(self.prec))) + 1
        for _ in range(steps):
            fx = self._eval_vec(h, xi)
            dfx = self._eval_vec(hp, xi)
            xi = tuple(
                (a - b) % self.q
                for a, b in zip(xi, self._mul_vec(fx, self._inv_vec(dfx)))
            )
        if any(self._eval_vec(h, xi)):
            raise PrecisionExhausted("Frobenius lift did not converge")
        return UnramElem(self, xi)

    def _eval_vec(self, poly: Sequence[int], x: Sequence[int]) -> tuple[int, ...]:
        acc = self.scalar_vec(0)
        for c in reversed(poly):
            acc = self._mul_vec(acc, x)
            acc = (acc[0] + c,) + acc[1:]
        return tuple(v % self.q for v in acc)

    def _frobenius_matrix(self) -> list[tuple[int, ...]]:
        # column t = coefficients of xi^t; frobenius acts linearly on coords
        cols = [self.scalar_vec(1)]
        xi = self.frobenius_image.coeffs
        for _ in range(self.m - 1):
            cols.append(self._mul_vec(cols[-1], xi))
        return cols

    def frobenius_vec(self, a: Sequence[int]) -> tuple[int, ...]:
        m, q = self.m, self.q
        if m == 1:
            return (a[0] % q,)
        out = [0] * m
        for t, at in enumerate(a):
            if at:
                col = self._frob_matrix[t]
                for i in range(m):
                    out[i] += at * col[i]
        return tuple(v % q for v in out)

    # -- element constructors ------------------------------------------------

    def zero(self) -> UnramElem:
        return UnramElem(self, (0,) * self.m)

    def one(self) -> UnramElem:
        return UnramElem(self, self.scalar_vec(1))

    def from_int(self, v: int) -> UnramElem:
        return UnramElem(self, self.scalar_vec(v))

    def from_zp(self, v: Zp) -> UnramElem:
        if v.p != self.p or v.n != self.prec:
            raise ValueError("scalar prime/precision mismatch")
        return self.from_int(v.r)

    def lift_residue(self, a: GFElem) -> UnramElem:
        if a.field != self.gffield:
            raise ValueError("residue from a different field")
        return UnramElem(self, tuple(c % self.q for c in a.coeffs))

    def generator(self) -> UnramElem:
        if self.m == 1:
            return self.zero()
        return UnramElem(self, (0, 1) + (0,) * (self.m - 2))

    def __repr__(self):
        return f"UnramLevel(p={self.p}, s={self.s}, prec={self.prec})"


class UnramElem:
    """Element of an unramified level, coefficients in the power basis."""

    __slots__ = ("level", "coeffs")

    def __init__(self, level: UnramLevel, coeffs: Sequence[int]):
        if len(coeffs) != level.m:
            raise ValueError("coefficient length does not match level degree")
        self.level = level
        self.coeffs = tuple(c % level.q for c in coeffs)

    def _check(self, other: UnramElem) -> None:
        if self.level is not other.level:
            raise ValueError("elements of different levels")

    def __add__(self, other: UnramElem) -> UnramElem:
        self._check(other)
        q = self.level.q
        return UnramElem(self.level, tuple((a + b) % q for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: UnramElem) -> UnramElem:
        self._check(other)
        q = self.level.q
        return UnramElem(self.level, tuple((a - b) % q for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> UnramElem:
        q = self.level.q
        return UnramElem(self.level, tuple(-a % q for a in self.coeffs))

    def __mul__(self, other: UnramElem) -> UnramElem:
        self._check(other)
        return UnramElem(self.level, self.level._mul_vec(self.coeffs, other.coeffs))

    def __pow__(self, k: int) -> UnramElem:
        if k < 0:
            return self.inv() ** (-k)
        result = self.level.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, UnramElem)
            and self.level is other.level
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((id(self.level), self.coeffs))

    def inv(self) -> UnramElem:
        return UnramElem(self.level, self.level._inv_vec(self.coeffs))

    def frobenius(self, iterations: int = 1) -> UnramElem:
        out = self.coeffs
        for _ in range(iterations):
            out = self.level.frobenius_vec(out)
        return UnramElem(self.level, out)

    def valuation(self) -> int:
        """p-adic valuation, capped at the precision."""
        p, cap = self.level.p, self.level.prec
        best = cap
        for c in self.coeffs:
            if c:
                v = 0
                while c % p == 0 and v < best:
                    c //= p
                    v += 1
                if v < best:
                    best = v
                if best == 0:
                    return 0
        return best

    def is_unit(self) -> bool:
        return any(c % self.level.p for c in self.coeffs)

    def residue(self) -> GFElem:
        return GFElem(self.level.gffield, self.level.residue_vec(self.coeffs))

    def zp_coeffs(self) -> tuple[Zp, ...]:
        return tuple(Zp(self.level.p, self.level.prec, c) for c in self.coeffs)

    def truncate_to(self, target: UnramLevel) -> UnramElem:
        if target.p != self.level.p or target.s != self.level.s or target.prec > self.level.prec:
            raise ValueError("can only truncate to lower precision of the same level")
        return UnramElem(target, tuple(c % target.q for c in self.coeffs))

    def __repr__(self):
        return f"UnramElem{self.coeffs}"


class RamLayer:
    """Totally ramified layer O(base)[y]/(eisenstein) with stored conjugates."""

    __slots__ = (
        "base", "n_exp", "e", "eis_ints", "eisenstein", "galois_roots",
        "_red", "_root_powers", "val_cap",
    )

    def __init__(
        self,
        base: UnramLevel,
        n_exp: int,
        eis_ints: Sequence[int],
        galois_roots: tuple["RamElem", ...] | None,
    ):
        e = len(eis_ints) - 1
        if eis_ints[-1] % base.q != 1:
            raise ValueError("Eisenstein polynomial must be monic")
        p = base.p
        if any(c % p for c in eis_ints[:-1]):
            raise ValueError("Eisenstein criterion fails: lower coefficient not divisible by p")
        if eis_ints[0] % p**2 == 0:
            raise ValueError("Eisenstein criterion fails: constant term divisible by p^2")
        self.base = base
        self.n_exp = n_exp
        self.e = e
        self.eis_ints = tuple(c % base.q for c in eis_ints)
        self.eisenstein = tuple(base.from_int(c) for c in eis_ints)
        self.val_cap = e * base.prec
        self._red = self._reduction_table()
        self.galois_roots = None
        self._root_powers = None
        if galois_roots is not None:
            self._attach_roots(galois_roots)

    def _attach_roots(self, roots: tuple["RamElem", ...]) -> None:
        # construction-time only; layers are immutable once built
        self.galois_roots = tuple(roots)
        self._root_powers = [self._powers(r) for r in roots]

    def _reduction_table(self) -> list[tuple[UnramElem, ...]]:
        e = self.e
        base = self.base
        cur = tuple(-self.eisenstein[i] for i in range(e))  # y^e
        table = [cur]
        for _ in range(e - 2):
            lead = cur[-1]
            nxt = [base.zero()] + list(cur[:-1])
            for i in range(e):
                nxt[i] = nxt[i] - lead * self.eisenstein[i]
            cur = tuple(nxt)
            table.append(cur)
        return table

    def _powers(self, r: RamElem) -> list[RamElem]:
        out = [self.one()]
        for _ in range(self.e - 1):
            out.append(out[-1] * r)
        return out

    # -- constructors ----------------------------------------------------------

    def zero(self) -> RamElem:
        return RamElem(self, (self.base.zero(),) * self.e)

    def one(self) -> RamElem:
        return RamElem(self, (self.base.one(),) + (self.base.zero(),) * (self.e - 1))

    def from_base(self, c: UnramElem) -> RamElem:
        if c.level is not self.base:
            raise ValueError("coefficient from a different base level")
        return RamElem(self, (c,) + (self.base.zero(),) * (self.e - 1))

    def from_int(self, v: int) -> RamElem:
        return self.from_base(self.base.from_int(v))

    def uniformizer(self) -> RamElem:
        z = self.base.zero()
        return RamElem(self, (z, self.base.one()) + (z,) * (self.e - 2))

    def conjugates(self, x: RamElem) -> list[RamElem]:
        if self.galois_roots is None:
            raise NonGaloisLayer("layer has no verified Galois conjugates")
        return [x.substitute_uniformizer(powers) for powers in self._root_powers]

    def __repr__(self):
        return f"RamLayer(e={self.e} over {self.base!r})"


class RamElem:
    """Element of a ramified layer: polynomial in the uniformizer."""

    __slots__ = ("layer", "coeffs")

    def __init__(self, layer: RamLayer, coeffs: Sequence[UnramElem]):
        if len(coeffs) != layer.e:
            raise ValueError("coefficient length does not match ramification degree")
        self.layer = layer
        self.coeffs = tuple(coeffs)

    def _check(self, other: RamElem) -> None:
        if self.layer is not other.layer:
            raise ValueError("elements of different layers")

    def __add__(self, other: RamElem) -> RamElem:
        self._check(other)
        return RamElem(self.layer, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: RamElem) -> RamElem:
        self._check(other)
        return RamElem(self.layer, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> RamElem:
        return RamElem(self.layer, tuple(-a for a in self.coeffs))

    def __mul__(self, other: RamElem) -> RamElem:
        self._check(other)
        layer = self.layer
        e = layer.e
        base = layer.base
        zero = base.zero()
        out = [zero] * (2 * e - 1)
        for i, ai in enumerate(self.coeffs):
            if any(ai.coeffs):
                for j, bj in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + ai * bj
        for t in range(2 * e - 2, e - 1, -1):
            c = out[t]
            if any(c.coeffs):
                red = layer._red[t - e]
                for i in range(e):
                    out[i] = out[i] + c * red[i]
        return RamElem(layer, tuple(out[:e]))

    def scale(self, c: UnramElem) -> RamElem:
        return RamElem(self.layer, tuple(c * a for a in self.coeffs))

    def shift_up(self, k: int = 1) -> RamElem:
        """Multiply by the k-th power of the uniformizer."""
        out = self
        layer = self.layer
        zero = layer.base.zero()
        for _ in range(k):
            lead = out.coeffs[-1]
            vec = [zero] + list(out.coeffs[:-1])
            if any(lead.coeffs):
                for i in range(layer.e):
                    vec[i] = vec[i] - lead * layer.eisenstein[i]
            out = RamElem(layer, vec)
        return out

    def __pow__(self, k: int) -> RamElem:
        if k < 0:
            return self.inv() ** (-k)
        result = self.layer.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RamElem)
            and self.layer is other.layer
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((id(self.layer), self.coeffs))

    def inv(self) -> RamElem:
        res = self.residue()
        if res.is_zero():
            raise ValueError("inverse of a non-unit")
        y = self.layer.from_base(self.layer.base.lift_residue(res.inv()))
        one = self.layer.one()
        two = one + one
        steps = max(1, math.ceil(math.log2(self.layer.val_cap))) + 1
        for _ in range(steps):
            y = y * (two - self * y)
        return y

    def frobenius(self, iterations: int = 1) -> RamElem:
        return RamElem(self.layer, tuple(c.frobenius(iterations) for c in self.coeffs))

    def valuation(self) -> int:
        """Valuation in the layer (uniformizer has valuation 1), capped."""
        layer = self.layer
        e, cap = layer.e, layer.val_cap
        best = cap
        for j, c in enumerate(self.coeffs):
            v = j + e * c.valuation()
            if v < best:
                best = v
        return best

    def residue(self) -> GFElem:
        return self.coeffs[0].residue()

    def substitute_uniformizer(self, powers: list[RamElem]) -> RamElem:
        out = self.layer.zero()
        for j, c in enumerate(self.coeffs):
            if any(c.coeffs):
                out = out + powers[j].scale(c)
        return out

    def truncate_to(self, target: RamLayer) -> RamElem:
        return RamElem(target, tuple(c.truncate_to(target.base) for c in self.coeffs))

    def __repr__(self):
        return f"RamElem{tuple(c.coeffs for c in self.coeffs)}"


Elem = Union[UnramElem, RamElem]


# ---------------------------------------------------------------------------
# level / layer construction
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def build_unram(p: int, s: int, prec: int) -> UnramLevel:
    """Unramified level of degree p^s with a verified Frobenius lift."""
    level = UnramLevel(p, s, prec)
    if s > 0:
        g = level.generator()
        if g.frobenius(p**s) != g:
            raise PrecisionExhausted("Frobenius lift has wrong order")
        expected = level.gffield.gen() ** p
        if level.frobenius_image.residue() != expected:
            raise PrecisionExhausted("Frobenius lift has wrong residue")
    return level


def _eval_ram(coeffs_int: Sequence[int], x: RamElem) -> RamElem:
    acc = x.layer.zero()
    one = x.layer.base.one()
    for c in reversed(coeffs_int):
        acc = acc * x
        acc = RamElem(acc.layer, (acc.coeffs[0] + one.level.from_int(c),) + acc.coeffs[1:])
    return acc


def _newton_polygon_valuations(vals: list[tuple[int, int | float]]) -> list[Fraction]:
    """Root valuations of a monic polynomial from its coefficient valuations.

    vals is [(degree, valuation)] including the leading term.  Returns one
    valuation per root (with multiplicity), largest first.
    """
    pts = sorted(vals)
    hull: list[tuple[int, int | float]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x2) >= (pt[1] - y2) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    out: list[Fraction] = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if math.isinf(y1) or math.isinf(y2):
            raise PrecisionExhausted("Newton polygon hit the precision cap")
        slope = Fraction(y1 - y2, x2 - x1)
        out.extend([slope] * (x2 - x1))
    out.sort(reverse=True)
    return out


def _find_layer_roots(layer: RamLayer, target_prec: int) -> list[RamElem]:
    """All roots of the Eisenstein polynomial inside the layer.

    Digit-by-digit search: a prefix known modulo m^j extends a genuine root
    iff v(g(prefix)) >= T(j) with T(j) = j + sum_i min(j, m_i), where m_i are
    the valuations of the nonzero differences of roots (from the Newton
    polygon of g(pi + z)/z).  The test is exact, so the survivor set at each
    depth is exactly the set of root prefixes.
    """
    e = layer.e
    p = layer.base.p
    g = list(layer.eis_ints)
    pi = layer.uniformizer()
    pi_pows = [layer.one()]
    for _ in range(e):
        pi_pows.append(pi_pows[-1] * pi)
    if _eval_ram(g, pi).valuation() < layer.val_cap:
        raise PrecisionExhausted("generator is not a root of its own Eisenstein polynomial")
    # h(z) = g(pi + z)/z expanded with binomials; its roots are the nonzero
    # differences conjugate - pi, so its Newton polygon gives the distances
    hs: list[RamElem] = []
    for t in range(1, e + 1):
        acc = layer.zero()
        for k in range(t, e + 1):
            coeff = math.comb(k, t) * g[k]
            if coeff:
                acc = acc + pi_pows[k - t].scale(layer.base.from_int(coeff))
        hs.append(acc)
    np_pts = [(t, hs[t].valuation()) for t in range(e)]
    distances = _newton_polygon_valuations(np_pts)
    delta = sum(distances)

    def threshold(j: int) -> int:
        # exact acceptance bound for "some root agrees with x modulo m^j"
        t = j + sum(min(Fraction(j), d) for d in distances)
        return math.ceil(t)

    full_depth = e * target_prec
    if threshold(full_depth) > layer.val_cap:
        raise PrecisionExhausted(
            f"root search needs working precision >= {target_prec + math.ceil(delta / e) + 1}"
        )
    survivors = [layer.zero()]
    for j in range(1, full_depth):
        w = _weight_elem(layer, j)
        thr = threshold(j + 1)
        nxt = []
        for x in survivors:
            for c in range(p):
                cand = x + w.scale(layer.base.from_int(c)) if c else x
                if _eval_ram(g, cand).valuation() >= thr:
                    nxt.append(cand)
        survivors = nxt
        if not survivors:
            break
    return survivors


def _weight_elem(layer: RamLayer, i: int) -> RamElem:
    """The canonical valuation-i element p^(i//e) * pi^(i%e)."""
    quo, rem = divmod(i, layer.e)
    coeffs = [layer.base.zero()] * layer.e
    coeffs[rem] = layer.base.from_int(layer.base.p**quo)
    return RamElem(layer, coeffs)


@lru_cache(maxsize=None)
def _searched_roots(
    p: int, n_exp: int, eis: tuple[int, ...], prec: int
) -> tuple[tuple[int, ...], ...]:
    """Roots of an integer Eisenstein polynomial over the rank-one base,
    found at raised working precision, as scalar coefficient vectors."""
    e = len(eis) - 1
    # estimate the different from g'(pi) to size the working precision
    probe = RamLayer(build_unram(p, 0, prec + 2), n_exp, eis, None)
    gprime = [(k * c) % probe.base.q for k, c in enumerate(eis)][1:]
    delta = _eval_ram(gprime, probe.uniformizer()).valuation()
    work = prec + math.ceil(delta / e) + 2
    search_layer = RamLayer(build_unram(p, 0, work), n_exp, eis, None)
    roots = _find_layer_roots(search_layer, prec)
    if len(roots) != e:
        raise NonGaloisLayer(
            f"expected {e} roots in the layer, found {len(roots)}: not Galois at this precision"
        )
    qq = p**prec
    return tuple(tuple(c.coeffs[0] % qq for c in r.coeffs) for r in roots)


@lru_cache(maxsize=None)
def build_cyclotomic_layer(p: int, n: int, base: UnramLevel) -> RamLayer:
    """The degree-p^n real-cyclotomic layer over `base`, conjugates verified.

    The composite over a bigger unramified level reuses the roots found over
    the rank-one base: their coefficients are plain p-adic scalars.
    """
    if p % 2 == 0:
        raise DeskBoundError("ramified layers require odd p")
    if p not in DESK_RAM or n not in DESK_RAM[p]:
        raise DeskBoundError(f"ramified exponent (p={p}, n={n}) outside desk bounds")
    if base.p != p:
        raise ValueError("base level has a different prime")
    eis = CYCLOTOMIC_EISENSTEIN[(p, n)]
    raw_roots = _searched_roots(p, n, eis, base.prec)
    return _layer_with_roots(base, n, eis, raw_roots)


def _layer_with_roots(
    base: UnramLevel, n_exp: int, eis: tuple[int, ...], raw_roots
) -> RamLayer:
    layer = RamLayer(base, n_exp, eis, None)
    roots = []
    for raw in raw_roots:
        root = RamElem(layer, tuple(base.from_int(c) for c in raw))
        if _eval_ram(list(eis), root).valuation() < layer.val_cap:
            raise NonGaloisLayer("embedded root fails to satisfy the Eisenstein polynomial")
        roots.append(root)
    layer._attach_roots(tuple(roots))
    return layer


def build_eisenstein_layer(base: UnramLevel, coeffs: Sequence[int]) -> RamLayer:
    """A layer from a user-supplied Eisenstein polynomial over Z_p.

    Galois verification is attempted; if the conjugates are not all present
    the layer is still returned but carries no conjugation data, and norm
    computations on it are refused.
    """
    e = len(coeffs) - 1
    n_exp = round(math.log(e, base.p))
    if base.p**n_exp != e:
        raise DeskBoundError(f"ramification degree {e} is not a power of {base.p}")
    eis = tuple(int(c) for c in coeffs)
    try:
        raw_roots = _searched_roots(base.p, n_exp, eis, base.prec)
        return _layer_with_roots(base, n_exp, eis, raw_roots)
    except (NonGaloisLayer, PrecisionExhausted):
        return RamLayer(base, n_exp, eis, None)


# ---------------------------------------------------------------------------
# norms, filtration, embeddings
# ---------------------------------------------------------------------------


def norm(x: RamElem) -> UnramElem:
    """Norm to the base: the product of all Galois conjugates.

    The product is Galois-invariant, so its coefficients above degree zero
    must vanish at working precision; anything else signals precision
    exhaustion or a broken layer.
    """
    layer = x.layer
    conjs = layer.conjugates(x)
    prod = layer.one()
    for c in conjs:
        prod = prod * c
    zero = layer.base.zero()
    for c in prod.coeffs[1:]:
        if c != zero:
            raise PrecisionExhausted("norm failed to descend to the base level")
    return prod.coeffs[0]


def elem_one(ambient: UnramLevel | RamLayer):
    return ambient.one()


def ram_degree(ambient: UnramLevel | RamLayer) -> int:
    return ambient.e if isinstance(ambient, RamLayer) else 1


def residue_field_of(ambient: UnramLevel | RamLayer) -> GFField:
    return ambient.base.gffield if isinstance(ambient, RamLayer) else ambient.gffield


def val_cap_of(ambient: UnramLevel | RamLayer) -> int:
    return ambient.val_cap if isinstance(ambient, RamLayer) else ambient.prec


def unit_weight(ambient: UnramLevel | RamLayer, i: int):
    """Canonical valuation-i scaling element used for filtration coordinates."""
    if isinstance(ambient, RamLayer):
        return _weight_elem(ambient, i)
    return ambient.from_int(ambient.p**i)


def elementary_unit(ambient: UnramLevel | RamLayer, i: int, component: GFElem):
    """1 + lift(component) * weight(i)."""
    if isinstance(ambient, RamLayer):
        lift = ambient.base.lift_residue(component)
        return ambient.one() + _weight_elem(ambient, i).scale(lift)
    return ambient.one() + ambient.lift_residue(component) * unit_weight(ambient, i)


def unit_component(x: Elem, i: int) -> GFElem:
    """Residue coordinate of x at filtration level i, relative to weight(i).

    Requires x == 1 mod m^i; returns the class of (x - 1)/weight(i).
    """
    if isinstance(x, RamElem):
        layer = x.layer
        e = layer.e
        quo, rem = divmod(i, e)
        delta = x - layer.one()
        if delta.valuation() < i:
            raise ValueError(f"unit is not 1 modulo m^{i}")
        c = delta.coeffs[rem]
        p, prec = layer.base.p, layer.base.prec
        if prec - quo < 1:
            raise PrecisionExhausted("filtration level exceeds precision")
        return GFElem(layer.base.gffield, tuple((v // p**quo) % p for v in c.coeffs))
    level = x.level
    delta = x - level.one()
    if delta.valuation() < i:
        raise ValueError(f"unit is not 1 modulo p^{i}")
    if level.prec - i < 1:
        raise PrecisionExhausted("filtration level exceeds precision")
    p = level.p
    return GFElem(level.gffield, tuple((v // p**i) % p for v in delta.coeffs))


def unit_filtration_level(x: Elem) -> int:
    one = x.layer.one() if isinstance(x, RamElem) else x.level.one()
    return (x - one).valuation()


class PrincipalUnit:
    """A unit congruent to 1 modulo the maximal ideal."""

    __slots__ = ("value", "filtration_level")

    def __init__(self, value: Elem):
        lvl = unit_filtration_level(value)
        if lvl < 1:
            raise ValueError("not a principal unit")
        self.value = value
        self.filtration_level = lvl

    @property
    def ambient(self):
        return self.value.layer if isinstance(self.value, RamElem) else self.value.level

    def __mul__(self, other: PrincipalUnit) -> PrincipalUnit:
        return PrincipalUnit(self.value * other.value)

    def inv(self) -> PrincipalUnit:
        return PrincipalUnit(self.value.inv())

    def __pow__(self, k: int) -> PrincipalUnit:
        return PrincipalUnit(self.value**k)

    def frobenius(self) -> PrincipalUnit:
        return PrincipalUnit(self.value.frobenius())

    def __eq__(self, other) -> bool:
        return isinstance(other, PrincipalUnit) and self.value == other.value

    def __repr__(self):
        return f"PrincipalUnit(level>={self.filtration_level})"


def filtration_decompose(u: PrincipalUnit, depth: int) -> list[GFElem]:
    """Canonical coordinates of u along U^(1) > U^(2) > ... > U^(depth).

    Component i is the residue of (current - 1)/weight(i); multiplying the
    elementary units back reproduces u modulo U^(depth).
    """
    ambient = u.ambient
    if depth > val_cap_of(ambient):
        raise PrecisionExhausted("depth exceeds precision")
    zero = residue_field_of(ambient).zero()
    cur = u.value
    comps = []
    for i in range(1, depth):
        if unit_filtration_level(cur) > i:
            comps.append(zero)
            continue
        c = unit_component(cur, i)
        comps.append(c)
        if not c.is_zero():
            cur = cur * elementary_unit(ambient, i, c).inv()
    return comps


def embed_unram(x: UnramElem, target: UnramLevel) -> UnramElem:
    """Embed a smaller unramified level into a bigger one.

    The generator maps to the Hensel lift (congruent to the residue-field
    embedding image) of a root of the small modulus in the big level.
    """
    src = x.level
    if src.p != target.p or src.prec != target.prec:
        raise ValueError("prime/precision mismatch")
    if src.s == target.s:
        return UnramElem(target, x.coeffs)
    if src.m == 1:
        return target.from_int(x.coeffs[0])
    root = _unram_embedding_root(src, target)
    acc = target.zero()
    for c in reversed(x.coeffs):
        acc = acc * root + target.from_int(c)
    return acc


@lru_cache(maxsize=None)
def _unram_embedding_root(src: UnramLevel, target: UnramLevel) -> UnramElem:
    from .gf import embed as gf_embed

    res_root = gf_embed(src.gffield.gen(), target.gffield)
    x0 = target.lift_residue(res_root)
    h = list(src.modulus)
    hp = [(i * c) % target.q for i, c in enumerate(h)][1:]
    steps = max(1, math.ceil(math.log2(target.prec))) + 1
    x = x0
    for _ in range(steps):
        fx = target._eval_vec(h, x.coeffs)
        dfx = target._eval_vec(hp, x.coeffs)
        x = UnramElem(
            target,
            tuple((a - b) % target.q for a, b in zip(x.coeffs, target._mul_vec(fx, target._inv_vec(dfx)))),
        )
    if any(target._eval_vec(h, x.coeffs)):
        raise PrecisionExhausted("embedding root lift failed")
    return x


def sublayer_uniformizer_image(layer: RamLayer) -> RamElem:
    """The uniformizer of the next layer down, inside this layer."""
    key = (layer.base.p, layer.n_exp)
    if key not in SUBLAYER_UNIFORMIZER:
        raise DeskBoundError(f"no sublayer data for {key}")
    poly = SUBLAYER_UNIFORMIZER[key]
    img = _eval_ram(list(poly), layer.uniformizer())
    small_eis = CYCLOTOMIC_EISENSTEIN[(layer.base.p, layer.n_exp - 1)]
    if _eval_ram(list(small_eis), img).valuation() < layer.val_cap:
        raise PrecisionExhausted("sublayer uniformizer image fails its Eisenstein polynomial")
    return img


def embed_from_sublayer(x: RamElem, big: RamLayer) -> RamElem:
    """Embed an element of the (p, n-1) layer into the (p, n) layer over the
    same base."""
    small = x.layer
    if small.base is not big.base:
        raise ValueError("layers over different bases")
    w = sublayer_uniformizer_image(big)
    pows = [big.one()]
    for _ in range(small.e - 1):
        pows.append(pows[-1] * w)
    out = big.zero()
    for j, c in enumerate(x.coeffs):
        out = out + pows[j].scale(c)
    return out
