"""Solving (phi - u)x = y on principal units and the twisted norm quotient.

The residue step splits the twist matrix over F_p into its generalized
1-eigenspace (handed to a plain linear solver, enlarging the field level
when a trace obstruction appears) and a complement with no eigenvalue 1,
where a telescoped geometric sum inverts the twisted Frobenius in closed
form.  Unit-level solutions are then assembled along the filtration
U^(1) > U^(2) > ..., one residue correction per level, with backtracking
over residue-kernel offsets where the leading digit is not forced.

v_kernel harvests the kernel of phi - u on U^1/U^(M) level by level, and
theorem1_check compares the norm quotient of those kernels against the
twist-matrix cokernel from Smith normal form: two independent routes to
the same finite abelian p-group.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .abelian import UnitGroupModM, quotient_structure, subgroup_structure
from .errors import (
    LiftBudgetExceeded,
    PrecisionExhausted,
    ResidueObstruction,
)
from .gf import (
    GFElem,
    GFField,
    embed,
    field_level,
    kernel_mod_p,
    level_of,
    mat_inv_mod_p,
    mat_mul_mod_p,
    mat_pow_mod_p,
    rref,
    solve_mod_p,
    twist_residue_matrix,
)
from .padic import Zp, ZpMatrix
from .towers import (
    PrincipalUnit,
    RamLayer,
    UnramLevel,
    elementary_unit,
    norm,
    residue_field_of,
    unit_component,
    unit_filtration_level,
    unit_weight,
    val_cap_of,
)
from .twist import AbGroupStructure, TwistFamily, coker_mod

DEFAULT_LIFT_BUDGET = 50_000


@dataclass(frozen=True)
class ResidueSolution:
    beta: tuple[GFElem, ...]
    field: GFField
    levels_raised: int


@dataclass(frozen=True)
class TwistedUnitVector:
    """Vector of principal units over one common ambient level or layer."""

    entries: tuple[PrincipalUnit, ...]
    label: str | None = None

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty unit vector")
        first = self.entries[0].ambient
        if any(e.ambient is not first for e in self.entries):
            raise ValueError("entries live over different ambients")

    @property
    def ambient(self):
        return self.entries[0].ambient


@dataclass(frozen=True)
class VGroupPresentation:
    generators: tuple[TwistedUnitVector, ...]
    depth: int
    structure: AbGroupStructure | None


# ---------------------------------------------------------------------------
# residue level
# ---------------------------------------------------------------------------


def _apply_fp_matrix(mat: list[list[int]], vec: list[GFElem]) -> list[GFElem]:
    out = []
    for row in mat:
        acc = vec[0].field.zero()
        for coeff, v in zip(row, vec):
            if coeff:
                acc = acc + v.scale(coeff)
        out.append(acc)
    return out


def _eigen_one_split(u_bar: list[list[int]], p: int) -> tuple[list[list[int]], int]:
    """Basis matrix with columns spanning ker((u-1)^d) then im((u-1)^d).

    Both blocks are u-invariant; u restricted to the second has no
    eigenvalue 1.  Returns (basis, dim of the 1-generalized block).
    """
    d = len(u_bar)
    nil = [[(u_bar[i][j] - (1 if i == j else 0)) % p for j in range(d)] for i in range(d)]
    nil_d = mat_pow_mod_p(nil, d, p)
    ker = kernel_mod_p(nil_d, p)
    _, pivots = rref([row[:] for row in nil_d], p)
    image_cols = [[nil_d[i][c] for i in range(d)] for c in pivots]
    cols = [list(v) for v in ker] + image_cols
    basis = [[cols[j][i] for j in range(d)] for i in range(d)]
    return basis, len(ker)


def _telescope_solve(alpha: list[GFElem], u_bar: list[list[int]]) -> list[GFElem]:
    """Closed-form solve of (frobenius - u)(beta) = alpha when u_bar has no
    eigenvalue 1: sum the twisted Frobenius orbit, then divide by the
    invertible 1 - u^(-m)."""
    field = alpha[0].field
    p, m = field.p, field.m
    d = len(u_bar)
    u_inv = mat_inv_mod_p(u_bar, p)
    gamma = list(alpha)
    frob_alpha = list(alpha)
    power = u_inv
    for _ in range(1, m):
        frob_alpha = [a**p for a in frob_alpha]
        gamma = [g + t for g, t in zip(gamma, _apply_fp_matrix(power, frob_alpha))]
        power = mat_mul_mod_p(power, u_inv, p)
    one_minus = [[((1 if i == j else 0) - power[i][j]) % p for j in range(d)] for i in range(d)]
    corr = mat_inv_mod_p(one_minus, p)
    pre = _apply_fp_matrix(corr, gamma)
    return [-b for b in _apply_fp_matrix(u_inv, pre)]


def _twisted_apply(beta: list[GFElem], u_bar: list[list[int]]) -> list[GFElem]:
    p = beta[0].field.p
    frob = [b**p for b in beta]
    shifted = _apply_fp_matrix(u_bar, beta)
    return [f - s for f, s in zip(frob, shifted)]


def _residue_solve_in_field(alpha: list[GFElem], u_bar: list[list[int]]) -> list[GFElem] | None:
    field = alpha[0].field
    p, m = field.p, field.m
    d = len(u_bar)
    basis, dim1 = _eigen_one_split(u_bar, p)
    if dim1 == 0:
        beta = _telescope_solve(alpha, u_bar)
        if _twisted_apply(beta, u_bar) != alpha:
            raise ArithmeticError("telescoping produced a wrong solution")
        return beta
    basis_inv = mat_inv_mod_p(basis, p)
    u_conj = mat_mul_mod_p(mat_mul_mod_p(basis_inv, u_bar, p), basis, p)
    alpha_t = _apply_fp_matrix(basis_inv, alpha)
    u1 = [row[:dim1] for row in u_conj[:dim1]]
    flat = twist_residue_matrix(field, u1)
    rhs = [c for a in alpha_t[:dim1] for c in a.coeffs]
    sol = solve_mod_p(flat, rhs, p)
    if sol is None:
        return None
    beta_t = [GFElem(field, tuple(sol[j * m : (j + 1) * m])) for j in range(dim1)]
    if dim1 < d:
        u2 = [row[dim1:] for row in u_conj[dim1:]]
        beta_t += _telescope_solve(alpha_t[dim1:], u2)
    beta = _apply_fp_matrix(basis, beta_t)
    if _twisted_apply(beta, u_bar) != alpha:
        raise ArithmeticError("recombined residue solution failed verification")
    return beta


def residue_solve(
    alpha, u_bar: list[list[int]], allow_enlarge: bool = True
) -> ResidueSolution:
    """Solve (frobenius - u_bar)(beta) = alpha over the residue field.

    The 1-generalized block goes to an in-field linear solver; its
    obstruction is a trace condition that dies one level up, so on failure
    alpha is embedded into the next tower level and the solve repeats.
    With allow_enlarge=False the obstruction raises instead.
    """
    alpha = list(alpha)
    if len(alpha) != len(u_bar):
        raise ValueError("alpha length does not match u_bar")
    p = alpha[0].field.p
    raised = 0
    while True:
        beta = _residue_solve_in_field(alpha, u_bar)
        if beta is not None:
            return ResidueSolution(tuple(beta), alpha[0].field, raised)
        if not allow_enlarge:
            raise ResidueObstruction("twisted residue equation unsolvable at this level")
        s = level_of(alpha[0].field)
        bigger = field_level(p, s + 1)  # DeskBoundError past the fixed table
        alpha = [embed(a, bigger) for a in alpha]
        raised += 1


# ---------------------------------------------------------------------------
# unit level
# ---------------------------------------------------------------------------


def _vp_int(n: int, p: int) -> int:
    v = 0
    while n and n % p == 0:
        n //= p
        v += 1
    return v


def _binom_stream(k: int, p: int, prec: int):
    """binomial(k, t) mod p^prec for t = 1, 2, ... with exact p-valuation
    bookkeeping, usable for huge k."""
    q = p**prec
    num_val = den_val = 0
    num_unit = den_unit = 1
    t = 0
    dead = False
    while True:
        t += 1
        if dead:
            yield 0
            continue
        factor = k - t + 1
        if factor == 0:
            dead = True
            yield 0
            continue
        v = _vp_int(factor, p)
        num_val += v
        num_unit = (num_unit * (factor // p**v)) % q
        v = _vp_int(t, p)
        den_val += v
        den_unit = (den_unit * (t // p**v)) % q
        shift = num_val - den_val
        if shift >= prec:
            yield 0
        else:
            yield (p**shift * num_unit * pow(den_unit, -1, q)) % q


def _residue_prec(ambient) -> int:
    return ambient.base.prec if isinstance(ambient, RamLayer) else ambient.prec


def _mono_elem(ambient, lvl: int, res: GFElem):
    if isinstance(ambient, RamLayer):
        return unit_weight(ambient, lvl).scale(ambient.base.lift_residue(res))
    return ambient.lift_residue(res) * unit_weight(ambient, lvl)


def _elem_unit_pow(ambient, lvl: int, res: GFElem, k: int, trunc: int):
    """(1 + lift(res) * weight(lvl))^k, exact modulo U^(trunc).

    Binomial series in a rank-one monomial; the exponent only matters
    modulo p^(trunc - lvl + 1) because p-th powers climb the filtration.
    """
    p = residue_field_of(ambient).p
    kred = k % p ** max(1, trunc - lvl + 1)
    out = ambient.one()
    if res.is_zero() or kred == 0:
        return out
    is_ram = isinstance(ambient, RamLayer)
    mono = _mono_elem(ambient, lvl, res)
    cur = mono
    coeffs = _binom_stream(kred, p, _residue_prec(ambient))
    t = 1
    while t * lvl < trunc:
        c = next(coeffs)
        if c:
            if is_ram:
                out = out + cur.scale(ambient.base.from_int(c))
            else:
                out = out + cur * ambient.from_int(c)
        cur = mono * cur
        t += 1
    return out


def _correction_inverse_image(ambient, lvl, betas, u_ints, trunc):
    """((phi - u)(xi))^(-1) for the elementary correction vector
    xi_i = 1 + lift(beta_i) w_lvl, series-only: phi(xi_i^(-1)) prod_j xi_j^(u_ij)."""
    d = len(betas)
    out = []
    for i in range(d):
        acc = _elem_unit_pow(ambient, lvl, betas[i], -1, trunc).frobenius()
        for j in range(d):
            if betas[j].is_zero():
                continue
            acc = acc * _elem_unit_pow(ambient, lvl, betas[j], u_ints[i][j], trunc)
        out.append(acc)
    return out


def phi_minus_u(xs: list, u_ints: list[list[int]], ambient, trunc: int) -> list:
    """(phi - u) on a vector of principal-unit elements, exact mod U^(trunc)."""
    d = len(xs)
    p = residue_field_of(ambient).p
    cap = p ** max(1, trunc)
    out = []
    for i in range(d):
        acc = xs[i].frobenius()
        for j in range(d):
            acc = acc * xs[j] ** ((-u_ints[i][j]) % cap)
        out.append(acc)
    return out


def _vec_level(xs: list) -> int:
    return min(unit_filtration_level(x) for x in xs)


def _residue_kernel_basis(field: GFField, u_bar: list[list[int]]) -> list[tuple[GFElem, ...]]:
    d = len(u_bar)
    m = field.m
    flat = kernel_mod_p(twist_residue_matrix(field, u_bar), field.p)
    return [
        tuple(GFElem(field, tuple(v[j * m : (j + 1) * m])) for j in range(d)) for v in flat
    ]


def _kernel_combos(field: GFField, kernel: list[tuple[GFElem, ...]], d: int):
    """All nonzero F_p combinations of the kernel basis, canonical order."""
    p = field.p
    combos = []
    for cs in itertools.product(range(p), repeat=len(kernel)):
        if all(c == 0 for c in cs):
            continue
        vec = [field.zero()] * d
        for c, kv in zip(cs, kernel):
            if c:
                vec = [a + b.scale(c) for a, b in zip(vec, kv)]
        combos.append(tuple(vec))
    return combos


def _lift_core(
    y: list,
    u_ints: list[list[int]],
    ambient,
    depth: int,
    budget: int = DEFAULT_LIFT_BUDGET,
) -> list:
    """Solve (phi - u)(x) = y modulo U^(depth) by climbing the filtration.

    Every level of the filtration gets one residue correction, determined
    up to an offset in the residue kernel of phi - u.  Kernel offsets are
    genuine degrees of freedom: a pure kernel digit inserted at a level
    where the defect is already deeper still perturbs the levels above it.
    With a trivial kernel the climb is a straight greedy loop; otherwise a
    depth-first search over offsets (greedy choice first) backtracks out
    of dead ends, so the search decides solvability exactly within its
    node budget.
    """
    field = residue_field_of(ambient)
    p = field.p
    d = len(u_ints)
    u_bar = [[v % p for v in row] for row in u_ints]
    kernel = _residue_kernel_basis(field, u_bar)
    kernel_offsets = _kernel_combos(field, kernel, d) if kernel else []
    ones = [ambient.one() for _ in range(d)]
    zero_vec = [field.zero()] * d

    def candidates(defect, lvl):
        d_lvl = _vec_level(defect)
        if d_lvl < lvl:
            raise ArithmeticError("defect fell below the current level")
        if d_lvl > lvl:
            base = list(zero_vec)
        else:
            alpha = [
                unit_component(entry, lvl)
                if unit_filtration_level(entry) <= lvl
                else field.zero()
                for entry in defect
            ]
            base = list(residue_solve(alpha, u_bar, allow_enlarge=False).beta)
        yield base
        for off in kernel_offsets:
            yield [b + o for b, o in zip(base, off)]

    start = _vec_level(y)
    if start >= depth:
        return ones
    stack = [(ones, list(y), start, candidates(y, start))]
    nodes = 0
    while stack:
        x, defect, lvl, cands = stack[-1]
        nodes += 1
        if nodes > budget:
            raise LiftBudgetExceeded(f"lift search exceeded {budget} nodes")
        try:
            beta = next(cands)
        except (StopIteration, ResidueObstruction):
            stack.pop()
            continue
        if any(not b.is_zero() for b in beta):
            corr = _correction_inverse_image(ambient, lvl, beta, u_ints, depth)
            new_defect = [defect[i] * corr[i] for i in range(d)]
            new_x = [x[i] * elementary_unit(ambient, lvl, beta[i]) for i in range(d)]
        else:
            new_defect = defect
            new_x = x
        if _vec_level(new_defect) <= lvl:
            raise ArithmeticError("defect level failed to increase")
        if _vec_level(new_defect) >= depth:
            return new_x
        stack.append((new_x, new_defect, lvl + 1, candidates(new_defect, lvl + 1)))
    raise ResidueObstruction("no unit-level solution modulo U^(depth)")


def lift_solve(y: TwistedUnitVector, u: ZpMatrix, depth: int) -> TwistedUnitVector:
    """Solve (phi - u)(x) = y modulo U^(depth) on principal-unit vectors."""
    ambient = y.ambient
    if depth > val_cap_of(ambient):
        raise PrecisionExhausted("depth exceeds the precision cap")
    sol = _lift_core([e.value for e in y.entries], u.to_ints(), ambient, depth)
    return TwistedUnitVector(tuple(PrincipalUnit(v) for v in sol), y.label)


# ---------------------------------------------------------------------------
# V groups and the order identity
# ---------------------------------------------------------------------------


def _is_block_diagonal(u_ints: list[list[int]]) -> bool:
    d = len(u_ints)
    return all(u_ints[i][j] == 0 for i in range(d) for j in range(d) if i != j)


def v_kernel(
    u: ZpMatrix,
    ambient: UnramLevel | RamLayer,
    depth: int,
    want_structure: bool = True,
    label: str | None = None,
) -> VGroupPresentation:
    """Generators of {x : phi(x) = x^u} in U^1/U^(depth).

    Level by level: every kernel element's leading residue lies in the
    residue kernel of phi - u, and a residue direction contributes exactly
    when its elementary unit can be corrected to a genuine kernel element
    (the correction is an inhomogeneous lift one level up).  Liftable
    directions form a subgroup of the residue kernel, harvested greedily.
    """
    if depth > val_cap_of(ambient):
        raise PrecisionExhausted("depth exceeds the precision cap")
    u_ints = u.to_ints()
    d = u.rows
    if d > 1 and not _is_block_diagonal(u_ints):
        raise NotImplementedError("d > 1 kernels only via block-diagonal twist matrices")
    field = residue_field_of(ambient)
    p = field.p
    u_bar = [[v % p for v in row] for row in u_ints]
    kernel = _residue_kernel_basis(field, u_bar)
    gens: list[TwistedUnitVector] = []
    if kernel:
        combos = _kernel_combos(field, kernel, d)
        normalized = [c for c in combos if _first_scalar_is_one(c, field)]
        for lvl in range(1, depth):
            span: list[list[int]] = []
            for combo in normalized:
                flat = [c for g in combo for c in g.coeffs]
                if _in_fp_span(flat, span, p):
                    continue
                g0 = [elementary_unit(ambient, lvl, b) for b in combo]
                target = _correction_inverse_image(ambient, lvl, list(combo), u_ints, depth)
                t_lvl = _vec_level(target)
                if t_lvl <= lvl:
                    raise ArithmeticError("kernel residue failed to cancel the leading level")
                try:
                    if t_lvl >= depth:
                        h = [ambient.one() for _ in range(d)]
                    else:
                        h = _lift_core(target, u_ints, ambient, depth)
                except ResidueObstruction:
                    continue
                g_vec = [g0[i] * h[i] for i in range(d)]
                check = phi_minus_u(g_vec, u_ints, ambient, depth)
                if _vec_level(check) < depth:
                    raise ArithmeticError("harvested generator fails the kernel identity")
                gens.append(
                    TwistedUnitVector(tuple(PrincipalUnit(v) for v in g_vec), label)
                )
                span.append(flat)
    structure = None
    if want_structure:
        structure = _presentation_structure(gens, ambient, depth)
    return VGroupPresentation(tuple(gens), depth, structure)


def _first_scalar_is_one(combo: tuple[GFElem, ...], field: GFField) -> bool:
    for g in combo:
        for c in g.coeffs:
            if c:
                return c == 1
    return False


def _in_fp_span(vec: list[int], span: list[list[int]], p: int) -> bool:
    if not span:
        return all(v == 0 for v in vec)
    mat = [list(r) for r in span]
    aug_rank = len(rref(mat + [list(vec)], p)[1])
    return aug_rank == len(rref(mat, p)[1])


def _presentation_structure(gens, ambient, depth) -> AbGroupStructure:
    if not gens:
        return AbGroupStructure.trivial()
    group = unit_group(ambient, depth)
    rows = [_vector_coords(group, g) for g in gens]
    return subgroup_structure(rows, group.moduli, group.p)


def _vector_coords(group: UnitGroupModM, g: TwistedUnitVector) -> tuple[int, ...]:
    out: tuple[int, ...] = ()
    for entry in g.entries:
        out = out + group.coords(entry.value)
    return out


@lru_cache(maxsize=None)
def unit_group(ambient, depth: int) -> UnitGroupModM:
    return UnitGroupModM(ambient, depth)


@dataclass(frozen=True)
class Theorem1Result:
    lhs: AbGroupStructure
    rhs: AbGroupStructure
    verdict: str
    per_label: tuple[tuple[str, AbGroupStructure, AbGroupStructure], ...]
    depth: int
    e_depth: int

    def passed(self) -> bool:
        return self.verdict == "pass"


def default_depth(family: TwistFamily, n_exp: int) -> int:
    """Working filtration depth: 2(n + max twist valuation) + 4, the twist
    valuation capped where the mod-p^n cokernel saturates anyway."""
    return 2 * (n_exp + _vmax(family, n_exp)) + 4


def _vmax(family: TwistFamily, n_exp: int) -> int:
    p = family.p
    vmax = 0
    for mat in family.matrices:
        det = (ZpMatrix.identity(p, family.prec, mat.rows) - mat).det()
        v = det.valuation()
        vmax = max(vmax, min(int(v) if v != family.prec else n_exp + 2, n_exp + 2))
    return vmax


def required_precision(family: TwistFamily, n_exp: int, s: int, depth: int | None = None) -> int:
    """Zp precision that supports the run and its doubled stability rerun."""
    m = depth if depth is not None else default_depth(family, n_exp)
    return 2 * m + _vmax(family, n_exp) + s + 8


def theorem1_check(
    family: TwistFamily, layer: RamLayer, depth: int | None = None
) -> Theorem1Result:
    """Both sides of the twisted norm-quotient identity, independently.

    Left: kernel generators of phi - u over the composite layer, their
    norms down to the unramified base, and the quotient of the base kernel
    by that norm subgroup, all inside U^1/U^(depth).  Right: the cokernel
    of I - u on (Z/p^n)^d per label.  Labels act on independent summands
    and aggregate by direct sum.
    """
    if family.dimension != 1:
        raise NotImplementedError("the norm-quotient path is implemented for d = 1 per label")
    if layer.galois_roots is None:
        raise ValueError("layer is not verified Galois: norms are refused")
    base = layer.base
    p = family.p
    n_exp = layer.n_exp
    m_k = depth if depth is not None else default_depth(family, n_exp)
    group = unit_group(base, m_k)
    lhs = AbGroupStructure.trivial()
    rhs = AbGroupStructure.trivial()
    per_label = []
    for pos, label in enumerate(family.labels):
        u_mat = family.matrices[pos]
        u_val = Zp(p, family.prec, 1 - u_mat.entries[0][0].r).valuation()
        v_eff = min(int(u_val) if u_val != family.prec else m_k, m_k)
        m_e = layer.e * (m_k + v_eff + base.s + 2)
        if m_e > layer.val_cap:
            raise PrecisionExhausted(
                f"theorem-1 check needs precision >= {m_e // layer.e + 2}, have {base.prec}"
            )
        cap_u = ZpMatrix.from_ints(p, base.prec, u_mat.to_ints())
        vk = v_kernel(cap_u, base, m_k, want_structure=False, label=label)
        vl = v_kernel(cap_u, layer, m_e, want_structure=False, label=label)
        norm_units = [norm(g.entries[0].value) for g in vl.generators]
        u_ints = cap_u.to_ints()
        for x in norm_units:
            img = phi_minus_u([x], u_ints, base, m_k)
            if _vec_level(img) < m_k:
                raise PrecisionExhausted("norm of a kernel generator left the base kernel")
        vk_rows = [group.coords(g.entries[0].value) for g in vk.generators]
        nm_rows = [group.coords(x) for x in norm_units]
        lhs_label = quotient_structure(vk_rows, nm_rows, group.moduli, p)
        sub = TwistFamily(1, (label,), (u_mat,))
        rhs_label = coker_mod(sub, n_exp)
        per_label.append((label, lhs_label, rhs_label))
        lhs = lhs.direct_sum(lhs_label)
        rhs = rhs.direct_sum(rhs_label)
    verdict = "pass" if lhs == rhs else "fail"
    return Theorem1Result(lhs, rhs, verdict, tuple(per_label), m_k, m_e)
