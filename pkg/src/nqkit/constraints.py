"""Fiber-affine constraint systems on the graded phase space.

Constraints of the form Phi_a = rho_a^i(x) p_i + alpha_a(x) are built from an
`Algebroid` and an optional affine part, on a momentum bracket that may be
twisted by a magnetic 2-form.  The module verifies closure of the constraint
brackets, inverts the construction by reading frame data back off fiber-linear
constraints, and provides reducibility, frame-equivalence and moment-map
diagnostics.  All verdicts are exact; probes that sample points say so in
their verdict.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

from .algebroid import (
    Algebroid,
    AltForm,
    anchor_defect,
    check_axioms,
    e_differential,
    pullback,
    zero_form,
)
from .graded import GradedContext, GradedPoly, cotangent_context, momentum_name
from .linalg import Vec, column_stack, nullspace, rank, solve
from .poly import EvenPoly, Exponent, Rat, monomial_exponents
from .report import FAIL, PASS, CheckReport

DEFAULT_PROBE_SEED = 271828
_RANDOM_PROBE_COUNT = 5


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints Phi_a on a cotangent context, with their source data.

    `data` and `alpha` are kept when the set was built from frame data; a
    frame-transformed set drops them, since the transformed structure
    functions are no longer part of the container.
    """

    ctx: GradedContext
    phis: tuple[GradedPoly, ...]
    data: Algebroid | None = None
    alpha: AltForm | None = None
    magnetic: AltForm | None = None
    degenerate: tuple[int, ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for k, phi in enumerate(self.phis):
            if phi.ctx != self.ctx:
                raise ValueError("constraints must live in the set's context")
            decompose_fiber_affine(self.ctx, phi)  # raises when malformed

    @property
    def rank(self) -> int:
        return len(self.phis)


def twist_of_magnetic(
    coords: tuple[str, ...], magnetic: AltForm | None
) -> list[list[EvenPoly]] | None:
    """Momentum-bracket twist matrix of a magnetic 2-form.

    The sign is fixed so that for B_12 = b on the plane the constraints
    p_1 and p_2 + b x^1 close: {p_1, p_2} must cancel the derivative term.
    """
    if magnetic is None or magnetic.is_zero:
        return None
    if magnetic.arity != 2:
        raise ValueError("magnetic term must be a 2-form")
    n = len(coords)
    return [[-magnetic.component((i, j)) for j in range(n)] for i in range(n)]


def build_constraints(
    data: Algebroid,
    alpha: AltForm | None = None,
    magnetic: AltForm | None = None,
) -> ConstraintSet:
    """Phi_a = rho_a^i p_i + alpha_a on the (possibly twisted) phase space."""
    if alpha is None:
        alpha = zero_form(data.coords, 1)
    if alpha.arity != 1 or alpha.coords != data.coords:
        raise ValueError("affine part must be a 1-form over the base ring")
    for key in alpha.components:
        if key[0] >= data.rank:
            raise ValueError(
                f"affine part names frame index {key[0] + 1}, rank is {data.rank}"
            )
    ctx = cotangent_context(data.coords, twist=twist_of_magnetic(data.coords, magnetic))
    phis = []
    for a in range(data.rank):
        phi = ctx.lift(alpha.component((a,)))
        for i, name in enumerate(data.coords):
            phi = phi + ctx.lift(data.anchor[a][i]) * ctx.var(momentum_name(name))
        phis.append(phi)
    degenerate = tuple(a for a, phi in enumerate(phis) if phi.is_zero)
    notes = ()
    if degenerate:
        labels = ", ".join(str(a + 1) for a in degenerate)
        notes = (f"degenerate constraints (identically zero): {labels}",)
    return ConstraintSet(
        ctx=ctx,
        phis=tuple(phis),
        data=data,
        alpha=alpha,
        magnetic=magnetic,
        degenerate=degenerate,
        notes=notes,
    )


def decompose_fiber_affine(
    ctx: GradedContext, F: GradedPoly
) -> tuple[EvenPoly, list[EvenPoly]]:
    """Split F = alpha(x) + sum_i rho^i(x) p_i, or raise when F is not affine.

    Both pieces come back over the positions-only subring.
    """
    if any(word for word in F.parts):
        raise ValueError("constraint has odd content")
    momenta = [p for p, _ in ctx.pairs_even]
    positions = [x for _, x in ctx.pairs_even]
    paired = set(momenta) | set(positions)
    for name in ctx.even_names:
        if name not in paired and F.even_part().degree_in(name) > 0:
            raise ValueError(f"constraint depends on unpaired coordinate {name!r}")
    base = tuple(positions)
    momentum_slots = [ctx.even_index[p] for p in momenta]
    position_slots = [ctx.even_index[x] for x in positions]
    alpha_terms: dict[Exponent, Rat] = {}
    rho_terms: list[dict[Exponent, Rat]] = [{} for _ in momenta]
    for exponent, coeff in F.even_part().terms.items():
        p_degree = sum(exponent[slot] for slot in momentum_slots)
        if p_degree > 1:
            raise ValueError("constraint is not affine in the momenta")
        x_exponent = tuple(exponent[slot] for slot in position_slots)
        if p_degree == 0:
            alpha_terms[x_exponent] = coeff
        else:
            i = next(
                k for k, slot in enumerate(momentum_slots) if exponent[slot] == 1
            )
            rho_terms[i][x_exponent] = coeff
    return EvenPoly(base, alpha_terms), [EvenPoly(base, t) for t in rho_terms]


def check_first_class(cs: ConstraintSet) -> CheckReport:
    """Closure of the constraint brackets in the span of the constraints.

    The residual R_ab = {Phi_a, Phi_b} - C^c_ab Phi_c is computed with the
    bracket and, independently, predicted from the anchor defect and the
    structural 2-form; disagreement between the two routes raises.
    """
    if cs.data is None:
        raise ValueError("first-class check needs the frame data of the set")
    data, ctx = cs.data, cs.ctx
    alpha = cs.alpha if cs.alpha is not None else zero_form(data.coords, 1)
    structural = e_differential(data, alpha)
    if cs.magnetic is not None:
        structural = structural - pullback(data, cs.magnetic)
    defect = anchor_defect(data)

    residuals: list[tuple[str, str]] = []
    for a in range(data.rank):
        for b in range(a + 1, data.rank):
            R = ctx.poisson(cs.phis[a], cs.phis[b])
            for c in range(data.rank):
                R = R - ctx.lift(data.structure[c][a][b]) * cs.phis[c]
            expected = ctx.lift(structural.component((a, b)))
            for i, name in enumerate(data.coords):
                expected = expected + ctx.lift(defect[(a, b)][i]) * ctx.var(
                    momentum_name(name)
                )
            if R != expected:
                raise RuntimeError(
                    "internal dual-route mismatch in the constraint bracket"
                )
            if not R.is_zero:
                residuals.append((f"bracket[a={a + 1},b={b + 1}]", str(R)))

    notes = [
        "dual route: bracket residuals match the anchor defect plus the "
        "structural 2-form",
    ]
    notes.extend(cs.notes)
    status = FAIL if residuals else PASS
    return CheckReport(
        "first_class", status, "{Phi_a, Phi_b} = C^c_ab Phi_c", residuals, notes
    )


# reverse direction: frame data from fiber-linear constraints


@dataclass
class ExtractionResult:
    feasible: bool
    data: Algebroid | None
    ansatz_degree: int
    solution_dim: int
    axioms: CheckReport | None
    notes: list[str] = field(default_factory=list)


def extract_structure(
    phis: Sequence[GradedPoly], ansatz_degree: int | None = None
) -> ExtractionResult:
    """Recover anchor and structure functions from fiber-linear constraints.

    The anchor is read off the momentum coefficients; the structure functions
    are the solution of the exact linear system {Phi_a, Phi_b} = C^c_ab Phi_c
    with polynomial C of bounded degree.  The degree ansatz starts at zero and
    grows to the requested bound, so the least-structure solution is found
    first; infeasibility at the bound is exact, not a tolerance call.
    """
    if not phis:
        raise ValueError("no constraints given")
    ctx = phis[0].ctx
    if any(phi.ctx != ctx for phi in phis):
        raise ValueError("constraints must share one context")
    if ctx.twist is not None:
        raise ValueError("structure extraction requires an untwisted bracket")
    rho_rows: list[list[EvenPoly]] = []
    for phi in phis:
        alpha_part, rho = decompose_fiber_affine(ctx, phi)
        if not alpha_part.is_zero:
            raise ValueError("structure extraction requires fiber-linear input")
        rho_rows.append(rho)
    base = rho_rows[0][0].coords if rho_rows and rho_rows[0] else ()
    r, n = len(phis), len(base)

    # momentum coefficients of the pairwise brackets are the closure targets
    targets: dict[tuple[int, int], list[EvenPoly]] = {}
    for a in range(r):
        for b in range(a + 1, r):
            bracket = ctx.poisson(phis[a], phis[b])
            _, target = decompose_fiber_affine(ctx, bracket)
            targets[(a, b)] = target
    if ansatz_degree is None:
        ansatz_degree = max(
            (t.total_degree() for ts in targets.values() for t in ts), default=0
        )

    for degree in range(ansatz_degree + 1):
        attempt = _solve_structure(base, rho_rows, targets, degree)
        if attempt is None:
            continue
        structure, solution_dim = attempt
        data = Algebroid(
            base,
            tuple(tuple(row) for row in rho_rows),
            structure,
        )
        axioms = check_axioms(data)
        notes = []
        if solution_dim:
            notes.append(
                f"structure functions not unique: solution space has "
                f"dimension {solution_dim}"
            )
        if generic_rank([list(row) for row in rho_rows]) == r:
            notes.append(
                "anchor has full generic rank: closure forces the jacobi "
                "defect to vanish"
            )
        return ExtractionResult(True, data, degree, solution_dim, axioms, notes)
    return ExtractionResult(
        False,
        None,
        ansatz_degree,
        0,
        None,
        [
            f"no polynomial structure functions of degree <= {ansatz_degree} "
            f"reproduce the constraint brackets"
        ],
    )


def _solve_structure(
    base: tuple[str, ...],
    rho_rows: list[list[EvenPoly]],
    targets: dict[tuple[int, int], list[EvenPoly]],
    degree: int,
) -> tuple[tuple[tuple[tuple[EvenPoly, ...], ...], ...], int] | None:
    r, n = len(rho_rows), len(base)
    mono = monomial_exponents(n, degree)
    anchor_degree = max(
        (entry.total_degree() for row in rho_rows for entry in row), default=0
    )
    target_degree = max(
        (t.total_degree() for ts in targets.values() for t in ts), default=0
    )
    row_exponents = monomial_exponents(n, max(degree + anchor_degree, target_degree))
    row_index = {e: k for k, e in enumerate(row_exponents)}

    zero = EvenPoly.zero(base)
    structure = [[[zero for _ in range(r)] for _ in range(r)] for _ in range(r)]
    total_free = 0
    for (a, b), target in targets.items():
        columns: list[Vec] = []
        for c in range(r):
            for m in mono:
                column = [Fraction(0)] * (n * len(row_exponents))
                shifted = EvenPoly(base, {m: Fraction(1)})
                for i in range(n):
                    for e, coeff in (shifted * rho_rows[c][i]).terms.items():
                        column[i * len(row_exponents) + row_index[e]] = coeff
                columns.append(column)
        rhs = [Fraction(0)] * (n * len(row_exponents))
        for i in range(n):
            for e, coeff in target[i].terms.items():
                if e not in row_index:
                    return None  # target outside the reachable degree window
                rhs[i * len(row_exponents) + row_index[e]] = coeff
        matrix = column_stack(columns, nrows=n * len(row_exponents))
        solution = solve(matrix, rhs)
        if solution is None:
            return None
        total_free += len(columns) - rank(matrix)
        for c in range(r):
            terms = {
                m: solution[c * len(mono) + k]
                for k, m in enumerate(mono)
                if solution[c * len(mono) + k] != 0
            }
            value = EvenPoly(base, terms)
            structure[c][a][b] = value
            structure[c][b][a] = -value
    return (
        tuple(tuple(tuple(row) for row in plane) for plane in structure),
        total_free,
    )


# reducibility diagnostics


def kernel_sections(data: Algebroid, trunc: int) -> list[list[EvenPoly]]:
    """Polynomial sections annihilated by the anchor, within x-degree <= trunc.

    A nonempty basis certifies dependency relations among the constraints:
    each section s satisfies sum_a s^a Phi_a = 0 identically.
    """
    if trunc < 0:
        raise ValueError("truncation degree must be nonnegative")
    r, n = data.rank, data.base_dim
    mono = monomial_exponents(n, trunc)
    anchor_degree = max(
        (entry.total_degree() for row in data.anchor for entry in row), default=0
    )
    row_exponents = monomial_exponents(n, trunc + anchor_degree)
    row_index = {e: k for k, e in enumerate(row_exponents)}
    columns: list[Vec] = []
    for a in range(r):
        for m in mono:
            column = [Fraction(0)] * (n * len(row_exponents))
            shifted = EvenPoly(data.coords, {m: Fraction(1)})
            for i in range(n):
                for e, coeff in (shifted * data.anchor[a][i]).terms.items():
                    column[i * len(row_exponents) + row_index[e]] = coeff
            columns.append(column)
    kernel = nullspace(
        column_stack(columns, nrows=n * len(row_exponents)), ncols=len(columns)
    )
    sections = []
    for vector in kernel:
        section = []
        for a in range(r):
            terms = {
                m: vector[a * len(mono) + k]
                for k, m in enumerate(mono)
                if vector[a * len(mono) + k] != 0
            }
            section.append(EvenPoly(data.coords, terms))
        sections.append(section)
    return sections


def _poly_det(matrix: list[list[EvenPoly]], coords: tuple[str, ...]) -> EvenPoly:
    size = len(matrix)
    if size == 0:
        return EvenPoly.const(coords, 1)
    if size == 1:
        return matrix[0][0]
    total = EvenPoly.zero(coords)
    for j in range(size):
        entry = matrix[0][j]
        if entry.is_zero:
            continue
        minor = [row[:j] + row[j + 1 :] for row in matrix[1:]]
        cofactor = entry * _poly_det(minor, coords)
        total = total + (cofactor if j % 2 == 0 else -cofactor)
    return total


def generic_rank(matrix: list[list[EvenPoly]]) -> int:
    """Rank over the rational function field, via symbolic minors."""
    if not matrix or not matrix[0]:
        return 0
    coords = matrix[0][0].coords
    nrows, ncols = len(matrix), len(matrix[0])
    for size in range(min(nrows, ncols), 0, -1):
        for rows in combinations(range(nrows), size):
            for cols in combinations(range(ncols), size):
                minor = [[matrix[i][j] for j in cols] for i in rows]
                if not _poly_det(minor, coords).is_zero:
                    return size
    return 0


@dataclass
class ProbeReport:
    generic_rank: int
    rank_required: int
    seed: int
    point_results: list[tuple[tuple[Rat, ...], int]]
    verdict: str


def irreducibility_probe(
    data: Algebroid,
    points: Sequence[Sequence[Rat | int]] = (),
    seed: int = DEFAULT_PROBE_SEED,
) -> ProbeReport:
    """Generic anchor rank plus exact pointwise ranks on a probed point set.

    Full rank everywhere means the constraints are independent; the verdict
    is scoped to what was actually checked, so a clean probe reads
    "irreducible on probed set" rather than claiming a global certificate.
    """
    r, n = data.rank, data.base_dim
    probe_points: list[tuple[Rat, ...]] = []
    for point in points:
        if len(point) != n:
            raise ValueError(
                f"probe point {tuple(point)} has arity {len(point)}, base "
                f"dimension is {n}"
            )
        probe_points.append(tuple(Fraction(v) for v in point))
    rng = random.Random(seed)
    for _ in range(_RANDOM_PROBE_COUNT):
        probe_points.append(
            tuple(
                Fraction(rng.randrange(-12, 13), rng.randrange(1, 7))
                for _ in range(n)
            )
        )

    generic = generic_rank([list(row) for row in data.anchor])
    point_results = []
    for point in probe_points:
        assignment = dict(zip(data.coords, point))
        numeric = [
            [entry.evaluate(assignment) for entry in row] for row in data.anchor
        ]
        point_results.append((point, rank(numeric)))

    if generic < r:
        verdict = "generically reducible"
    else:
        failing = next((p for p, k in point_results if k < r), None)
        if failing is None:
            verdict = "irreducible on probed set"
        else:
            label = ", ".join(str(v) for v in failing)
            verdict = f"reducible at point ({label})"
    return ProbeReport(generic, r, seed, point_results, verdict)


# frame equivalence


def gauge_equivalence(
    cs: ConstraintSet,
    M: Sequence[Sequence[EvenPoly]],
    witness_points: Sequence[Sequence[Rat | int]] = (),
) -> ConstraintSet:
    """Replace Phi by M Phi and record invertibility evidence for M.

    The transformed set keeps the context and bracket; frame data is dropped
    because the structure functions do not transform tensorially.  Witness
    points where det M vanishes are flagged in the notes.
    """
    r = cs.rank
    if len(M) != r or any(len(row) != r for row in M):
        raise ValueError("frame matrix must be rank x rank")
    positions = tuple(x for _, x in cs.ctx.pairs_even)
    det = _poly_det([list(row) for row in M], positions)
    notes = []
    if det.is_zero:
        notes.append("frame matrix determinant is identically zero")
    for point in witness_points:
        if len(point) != len(positions):
            raise ValueError("witness point arity must match the base dimension")
        assignment = dict(zip(positions, (Fraction(v) for v in point)))
        value = det.evaluate(assignment)
        label = ", ".join(str(Fraction(v)) for v in point)
        if value == 0:
            notes.append(f"frame matrix singular at witness point ({label})")
        else:
            notes.append(f"det M = {value} at witness point ({label})")
    phis = []
    for a in range(r):
        phi = cs.ctx.zero()
        for b in range(r):
            phi = phi + cs.ctx.lift(M[a][b]) * cs.phis[b]
        phis.append(phi)
    degenerate = tuple(a for a, phi in enumerate(phis) if phi.is_zero)
    return ConstraintSet(
        ctx=cs.ctx,
        phis=tuple(phis),
        data=None,
        alpha=None,
        magnetic=cs.magnetic,
        degenerate=degenerate,
        notes=tuple(notes),
    )


def ideal_membership(
    phis: Sequence[GradedPoly], candidate: GradedPoly, degree: int
) -> list[EvenPoly] | None:
    """Exact coefficients mu^a(x) with candidate = sum_a mu^a Phi_a, or None.

    The multipliers are sought in the positions-only subring up to the given
    degree; this bounded ansatz keeps the membership test a linear solve.
    """
    if not phis:
        raise ValueError("no constraints given")
    ctx = phis[0].ctx
    positions = tuple(x for _, x in ctx.pairs_even)
    mono = monomial_exponents(len(positions), degree)
    products: list[GradedPoly] = []
    for phi in phis:
        for m in mono:
            products.append(ctx.lift(EvenPoly(positions, {m: Fraction(1)})) * phi)
    keys: list[tuple[tuple[int, ...], Exponent]] = sorted(
        {
            (word, exponent)
            for F in (*products, candidate)
            for word, exponent, _ in F.terms()
        }
    )
    key_index = {key: k for k, key in enumerate(keys)}
    columns = []
    for F in products:
        column = [Fraction(0)] * len(keys)
        for word, exponent, coeff in F.terms():
            column[key_index[(word, exponent)]] = coeff
        columns.append(column)
    rhs = [Fraction(0)] * len(keys)
    for word, exponent, coeff in candidate.terms():
        rhs[key_index[(word, exponent)]] = coeff
    solution = solve(column_stack(columns, nrows=len(keys)), rhs)
    if solution is None:
        return None
    multipliers = []
    for a in range(len(phis)):
        terms = {
            m: solution[a * len(mono) + k]
            for k, m in enumerate(mono)
            if solution[a * len(mono) + k] != 0
        }
        multipliers.append(EvenPoly(positions, terms))
    return multipliers


# the moment map on sections


def section_bracket(
    data: Algebroid, s: Sequence[EvenPoly], t: Sequence[EvenPoly]
) -> list[EvenPoly]:
    """[s, t]^c = s^a rho_a(t^c) - t^a rho_a(s^c) + C^c_ab s^a t^b."""
    r = data.rank
    if len(s) != r or len(t) != r:
        raise ValueError("sections must have one component per frame index")
    out = []
    for c in range(r):
        value = EvenPoly.zero(data.coords)
        for a in range(r):
            value = value + s[a] * data.anchor_apply(a, t[c])
            value = value - t[a] * data.anchor_apply(a, s[c])
            for b in range(r):
                value = value + data.structure[c][a][b] * s[a] * t[b]
        out.append(value)
    return out


def moment_of_section(
    data: Algebroid,
    alpha: AltForm | None,
    s: Sequence[EvenPoly],
    ctx: GradedContext | None = None,
) -> GradedPoly:
    """Phi(s) = s^a (rho_a^i p_i + alpha_a), linear over the base functions.

    For a first-class set with untwisted bracket this assignment is a bracket
    morphism: {Phi(s), Phi(t)} = Phi([s, t]).
    """
    if len(s) != data.rank:
        raise ValueError("section must have one component per frame index")
    if alpha is None:
        alpha = zero_form(data.coords, 1)
    if ctx is None:
        ctx = cotangent_context(data.coords)
    value = ctx.zero()
    for a in range(data.rank):
        phi = ctx.lift(alpha.component((a,)))
        for i, name in enumerate(data.coords):
            phi = phi + ctx.lift(data.anchor[a][i]) * ctx.var(momentum_name(name))
        value = value + ctx.lift(s[a]) * phi
    return value
