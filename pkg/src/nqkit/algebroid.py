"""Anchored frames with structure functions and their exterior calculus.

An `Algebroid` packages a polynomial anchor rho_a^i and antisymmetric
structure functions C^c_ab over a fixed base coordinate ring.  The module
provides the two defect tensors whose joint vanishing is the compatibility
axiom pair (anchor morphism and Jacobi), the frame-indexed exterior
derivative, the pullback of base forms along the anchor, the odd derivation Q
on ghost variables, and a truncated degree-1 cohomology diagnostic.

Defect conventions, pinned for the whole engine:

    R1^i_ab  = rho_a^j d_j rho_b^i - rho_b^j d_j rho_a^i - C^c_ab rho_c^i
    R2^d_abc = sum over permutations s of (a,b,c), with sign:
               C^d_{e s(a)} C^e_{s(b)s(c)} - rho_{s(a)}^j d_j C^d_{s(b)s(c)}

R2 is twice the Jacobiator of the frame bracket, normalized so that it equals
the canonical xi^a xi^b xi^c pi_d coefficient of the squared charge built in
the ghost layer (a dual-route identity asserted on every run).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

from .graded import (
    GradedContext,
    GradedPoly,
    extended_context,
    ghost_name,
    left_derivation,
)
from .linalg import Vec, column_stack, nullspace, rank, solve
from .poly import EvenPoly, Rat, Scalar, as_rat, monomial_exponents
from .report import FAIL, PASS, CheckReport

Matrix = tuple[tuple[EvenPoly, ...], ...]


@dataclass(frozen=True)
class Algebroid:
    """Polynomial anchor and structure functions over a base coordinate ring.

    anchor[a][i] is the i-th component of the a-th frame field; structure
    [c][a][b] is C^c_ab, antisymmetric in (a, b).
    """

    coords: tuple[str, ...]
    anchor: tuple[tuple[EvenPoly, ...], ...]
    structure: tuple[tuple[tuple[EvenPoly, ...], ...], ...]

    def __post_init__(self) -> None:
        n, r = len(self.coords), len(self.anchor)
        for row in self.anchor:
            if len(row) != n:
                raise ValueError("anchor must be rank x base_dim")
            for entry in row:
                self._check_ring(entry)
        if len(self.structure) != r:
            raise ValueError("structure must be rank x rank x rank")
        for plane in self.structure:
            if len(plane) != r or any(len(row) != r for row in plane):
                raise ValueError("structure must be rank x rank x rank")
            for row in plane:
                for entry in row:
                    self._check_ring(entry)
        for c in range(r):
            for a in range(r):
                for b in range(r):
                    if not (self.structure[c][a][b] + self.structure[c][b][a]).is_zero:
                        raise ValueError(
                            f"structure functions must be antisymmetric, "
                            f"violated at c={c + 1}, a={a + 1}, b={b + 1}"
                        )

    def _check_ring(self, entry: EvenPoly) -> None:
        if entry.coords != self.coords:
            raise ValueError("all components must live in the base coordinate ring")

    @property
    def base_dim(self) -> int:
        return len(self.coords)

    @property
    def rank(self) -> int:
        return len(self.anchor)

    def anchor_apply(self, a: int, f: EvenPoly) -> EvenPoly:
        """Directional derivative of f along the a-th frame field."""
        result = EvenPoly.zero(self.coords)
        for i, name in enumerate(self.coords):
            result = result + self.anchor[a][i] * f.diff(name)
        return result

    def zero(self) -> EvenPoly:
        return EvenPoly.zero(self.coords)


def algebroid_from_lists(
    coords: tuple[str, ...] | list[str],
    anchor: list[list[EvenPoly]],
    structure: list[list[list[EvenPoly]]],
) -> Algebroid:
    return Algebroid(
        tuple(coords),
        tuple(tuple(row) for row in anchor),
        tuple(tuple(tuple(row) for row in plane) for plane in structure),
    )


def abelian_algebroid(coords: tuple[str, ...] | list[str], anchor: list[list[EvenPoly]]) -> Algebroid:
    """Anchor with identically vanishing structure functions."""
    coord_tuple = tuple(coords)
    r = len(anchor)
    zero = EvenPoly.zero(coord_tuple)
    structure = [[[zero for _ in range(r)] for _ in range(r)] for _ in range(r)]
    return algebroid_from_lists(coord_tuple, anchor, structure)


# alternating forms, indexed either by frame labels or by base coordinates


@dataclass(frozen=True)
class AltForm:
    """Alternating family of polynomials on strictly increasing index tuples.

    The same container serves frame-indexed forms (indices run over the frame)
    and coordinate-indexed forms (indices run over the base); the differential
    and pullback functions fix the interpretation.
    """

    coords: tuple[str, ...]
    arity: int
    components: dict[tuple[int, ...], EvenPoly]

    def __post_init__(self) -> None:
        cleaned = {}
        for key, value in self.components.items():
            key = tuple(key)
            if len(key) != self.arity or list(key) != sorted(set(key)):
                raise ValueError(f"component index {key} is not strictly increasing")
            if value.coords != self.coords:
                raise ValueError("component rings must match the form's ring")
            if not value.is_zero:
                cleaned[key] = value
        object.__setattr__(self, "components", cleaned)

    @property
    def is_zero(self) -> bool:
        return not self.components

    def component(self, indices: tuple[int, ...]) -> EvenPoly:
        """Component on any tuple of distinct indices, with the permutation sign."""
        if len(set(indices)) != len(indices):
            return EvenPoly.zero(self.coords)
        order = tuple(sorted(indices))
        inversions = sum(
            1
            for u in range(len(indices))
            for v in range(u + 1, len(indices))
            if indices[u] > indices[v]
        )
        stored = self.components.get(order)
        if stored is None:
            return EvenPoly.zero(self.coords)
        return -stored if inversions % 2 else stored

    def __add__(self, other: AltForm) -> AltForm:
        if (self.coords, self.arity) != (other.coords, other.arity):
            raise ValueError("forms have different shape")
        keys = set(self.components) | set(other.components)
        return AltForm(
            self.coords,
            self.arity,
            {
                key: self.components.get(key, EvenPoly.zero(self.coords))
                + other.components.get(key, EvenPoly.zero(self.coords))
                for key in keys
            },
        )

    def __neg__(self) -> AltForm:
        return AltForm(
            self.coords,
            self.arity,
            {key: -value for key, value in self.components.items()},
        )

    def __sub__(self, other: AltForm) -> AltForm:
        return self + (-other)

    def __rmul__(self, scalar: Scalar) -> AltForm:
        s = as_rat(scalar)
        return AltForm(
            self.coords,
            self.arity,
            {key: value * s for key, value in self.components.items()},
        )

    def __str__(self) -> str:
        if not self.components:
            return "0"
        chunks = []
        for key in sorted(self.components):
            label = ",".join(str(index + 1) for index in key)
            chunks.append(f"[{label}] {self.components[key]}")
        return "; ".join(chunks)


def zero_form(coords: tuple[str, ...], arity: int) -> AltForm:
    return AltForm(coords, arity, {})


def one_form(coords: tuple[str, ...], components: list[EvenPoly]) -> AltForm:
    return AltForm(coords, 1, {(a,): f for a, f in enumerate(components)})


def two_form_from_matrix(
    coords: tuple[str, ...], matrix: list[list[EvenPoly]] | Matrix
) -> AltForm:
    """Antisymmetric matrix B_ij to the 2-form with components on i < j."""
    n = len(matrix)
    for i in range(n):
        for j in range(n):
            if not (matrix[i][j] + matrix[j][i]).is_zero:
                raise ValueError("matrix must be antisymmetric")
    return AltForm(
        coords,
        2,
        {(i, j): matrix[i][j] for i in range(n) for j in range(i + 1, n)},
    )


def e_differential(data: Algebroid, form: AltForm) -> AltForm:
    """Frame-indexed exterior derivative on 0- and 1-forms."""
    if form.coords != data.coords:
        raise ValueError("form ring must match the base ring")
    r = data.rank
    if form.arity == 0:
        f = form.component(())
        return AltForm(
            data.coords, 1, {(a,): data.anchor_apply(a, f) for a in range(r)}
        )
    if form.arity == 1:
        components = {}
        for a in range(r):
            for b in range(a + 1, r):
                value = data.anchor_apply(a, form.component((b,))) - data.anchor_apply(
                    b, form.component((a,))
                )
                for c in range(r):
                    value = value - data.structure[c][a][b] * form.component((c,))
                components[(a, b)] = value
        return AltForm(data.coords, 2, components)
    raise ValueError("differential implemented for arities 0 and 1 only")


def de_rham(coords: tuple[str, ...], form: AltForm) -> AltForm:
    """Ordinary exterior derivative on base 0- and 1-forms."""
    n = len(coords)
    if form.arity == 0:
        f = form.component(())
        return AltForm(coords, 1, {(i,): f.diff(coords[i]) for i in range(n)})
    if form.arity == 1:
        return AltForm(
            coords,
            2,
            {
                (i, j): form.component((j,)).diff(coords[i])
                - form.component((i,)).diff(coords[j])
                for i in range(n)
                for j in range(i + 1, n)
            },
        )
    raise ValueError("differential implemented for arities 0 and 1 only")


def pullback(data: Algebroid, form: AltForm) -> AltForm:
    """Pull a coordinate-indexed form back to a frame-indexed one."""
    if form.coords != data.coords:
        raise ValueError("form ring must match the base ring")
    r, n = data.rank, data.base_dim
    if form.arity == 0:
        return form
    if form.arity == 1:
        components = {}
        for a in range(r):
            value = EvenPoly.zero(data.coords)
            for i in range(n):
                value = value + form.component((i,)) * data.anchor[a][i]
            components[(a,)] = value
        return AltForm(data.coords, 1, components)
    if form.arity == 2:
        components = {}
        for a in range(r):
            for b in range(a + 1, r):
                value = EvenPoly.zero(data.coords)
                for i in range(n):
                    for j in range(i + 1, n):
                        value = value + form.component((i, j)) * (
                            data.anchor[a][i] * data.anchor[b][j]
                            - data.anchor[b][i] * data.anchor[a][j]
                        )
                components[(a, b)] = value
        return AltForm(data.coords, 2, components)
    raise ValueError("pullback implemented for arities 0, 1 and 2 only")


# defect tensors


def anchor_defect(data: Algebroid) -> dict[tuple[int, int], list[EvenPoly]]:
    """R1 on frame pairs a < b, as a base-indexed component vector."""
    out: dict[tuple[int, int], list[EvenPoly]] = {}
    for a in range(data.rank):
        for b in range(a + 1, data.rank):
            vector = []
            for i in range(data.base_dim):
                value = data.anchor_apply(a, data.anchor[b][i]) - data.anchor_apply(
                    b, data.anchor[a][i]
                )
                for c in range(data.rank):
                    value = value - data.structure[c][a][b] * data.anchor[c][i]
                vector.append(value)
            out[(a, b)] = vector
    return out


def jacobi_defect(data: Algebroid) -> dict[tuple[int, int, int, int], EvenPoly]:
    """R2 on frame triples a < b < c, for each target index d."""
    out: dict[tuple[int, int, int, int], EvenPoly] = {}
    r = data.rank
    for a in range(r):
        for b in range(a + 1, r):
            for c in range(b + 1, r):
                for d in range(r):
                    total = EvenPoly.zero(data.coords)
                    for pa, pb, pc in permutations((a, b, c)):
                        seq = (pa, pb, pc)
                        inversions = sum(
                            1
                            for u in range(3)
                            for v in range(u + 1, 3)
                            if seq[u] > seq[v]
                        )
                        sign = -1 if inversions % 2 else 1
                        term = EvenPoly.zero(data.coords)
                        for e in range(r):
                            term = term + data.structure[d][e][pa] * data.structure[e][pb][pc]
                        term = term - data.anchor_apply(pa, data.structure[d][pb][pc])
                        total = total + (term if sign > 0 else -term)
                    out[(a, b, c, d)] = total
    return out


# the odd derivation Q on (x, xi)


def ghost_context(data: Algebroid, twist=None) -> GradedContext:
    return extended_context(data.coords, data.rank, twist)


def q_images(data: Algebroid, ctx: GradedContext) -> dict[str, GradedPoly]:
    """Q(x^i) = rho_a^i xi^a and Q(xi^c) = -1/2 C^c_ab xi^a xi^b."""
    images: dict[str, GradedPoly] = {}
    for i, name in enumerate(data.coords):
        value = ctx.zero()
        for a in range(data.rank):
            value = value + ctx.lift(data.anchor[a][i]) * ctx.var(ghost_name(a + 1))
        images[name] = value
    for c in range(data.rank):
        value = ctx.zero()
        for a in range(data.rank):
            for b in range(data.rank):
                value = value + ctx.lift(data.structure[c][a][b]) * (
                    ctx.var(ghost_name(a + 1)) * ctx.var(ghost_name(b + 1))
                )
        images[ghost_name(c + 1)] = value / -2
    return images


def apply_q(data: Algebroid, ctx: GradedContext, F: GradedPoly) -> GradedPoly:
    return left_derivation(ctx, q_images(data, ctx), F)


def check_axioms(data: Algebroid) -> CheckReport:
    """Joint anchor-morphism and Jacobi verification, with a dual-route guard.

    The defect tensors are computed from their index formulas and compared,
    coefficient for coefficient, against Q applied twice to each coordinate.
    A mismatch between the two routes is an engine bug and raises, never a
    data failure.
    """
    r1 = anchor_defect(data)
    r2 = jacobi_defect(data)
    residuals: list[tuple[str, str]] = []
    for (a, b), vector in sorted(r1.items()):
        for i, value in enumerate(vector):
            if not value.is_zero:
                residuals.append(
                    (f"anchor[a={a + 1},b={b + 1},i={i + 1}]", str(value))
                )
    for (a, b, c, d), value in sorted(r2.items()):
        if not value.is_zero:
            residuals.append(
                (f"jacobi[a={a + 1},b={b + 1},c={c + 1},d={d + 1}]", str(value))
            )

    ctx = ghost_context(data)
    images = q_images(data, ctx)
    _assert_q_square_matches(data, ctx, images, r1, r2)

    status = FAIL if residuals else PASS
    notes = [
        f"anchor defect entries nonzero: "
        f"{sum(1 for key, _ in residuals if key.startswith('anchor'))}",
        f"jacobi defect entries nonzero: "
        f"{sum(1 for key, _ in residuals if key.startswith('jacobi'))}",
        "dual route: Q applied twice agrees with the defect tensors",
    ]
    return CheckReport("axioms", status, "Q^2 = 0", residuals, notes)


def _assert_q_square_matches(
    data: Algebroid,
    ctx: GradedContext,
    images: dict[str, GradedPoly],
    r1: dict[tuple[int, int], list[EvenPoly]],
    r2: dict[tuple[int, int, int, int], EvenPoly],
) -> None:
    # Q^2(x^i) carries R1 on xi^a xi^b; Q^2(xi^d) carries R2 / 2 on xi^a xi^b xi^c
    for i, name in enumerate(data.coords):
        q2 = left_derivation(ctx, images, images[name])
        for a in range(data.rank):
            for b in range(a + 1, data.rank):
                word = (ctx.odd_index[ghost_name(a + 1)], ctx.odd_index[ghost_name(b + 1)])
                got = q2.coefficient_of_word(word)
                expected = ctx.lift(r1[(a, b)][i]).even_part()
                if got != expected:
                    raise RuntimeError(
                        "internal dual-route mismatch in the anchor defect"
                    )
    for d in range(data.rank):
        q2 = left_derivation(ctx, images, images[ghost_name(d + 1)])
        for a in range(data.rank):
            for b in range(a + 1, data.rank):
                for c in range(b + 1, data.rank):
                    word = tuple(
                        ctx.odd_index[ghost_name(k + 1)] for k in (a, b, c)
                    )
                    got = q2.coefficient_of_word(word) * 2
                    expected = ctx.lift(r2[(a, b, c, d)]).even_part()
                    if got != expected:
                        raise RuntimeError(
                            "internal dual-route mismatch in the jacobi defect"
                        )


# truncated degree-1 cohomology


@dataclass
class CohomologyReport:
    degree: int
    trunc: int
    slack: int
    closed_dim: int
    exact_dim: int
    h_dim: int
    closed_basis: list[AltForm]
    flags: dict[str, bool] = field(default_factory=dict)


def _one_form_from_vector(
    data: Algebroid, exponents: list, vector: Vec
) -> AltForm:
    r = data.rank
    components: dict[tuple[int, ...], EvenPoly] = {}
    position = 0
    for a in range(r):
        terms = {}
        for exponent in exponents:
            value = vector[position]
            position += 1
            if value != 0:
                terms[exponent] = value
        components[(a,)] = EvenPoly(data.coords, terms)
    return AltForm(data.coords, 1, {k: v for k, v in components.items() if not v.is_zero})


def cohomology_h1(data: Algebroid, trunc: int, slack: int = 2) -> CohomologyReport:
    """Truncated first cohomology of the frame differential.

    Closed forms are computed exactly within x-degree <= trunc; the exact
    subspace is the image of functions of degree <= trunc + slack that lands
    entirely inside the window.  Both dimensions are exact rational ranks;
    the truncation caveat is flagged, along with whether the differential
    preserves the degree filtration (anchor of degree <= 1 and constant
    structure functions), in which case the window dimensions are stable.
    """
    if trunc < 0:
        raise ValueError("truncation degree must be nonnegative")
    n, r = data.base_dim, data.rank
    window_exponents = monomial_exponents(n, trunc)
    window_index = {e: k for k, e in enumerate(window_exponents)}

    # d on 1-forms: component vectors to 2-form coefficient vectors
    pair_list = [(a, b) for a in range(r) for b in range(a + 1, r)]
    target_exponents = monomial_exponents(n, trunc + max(0, _max_coeff_degree(data)))
    target_index = {e: k for k, e in enumerate(target_exponents)}
    rows = len(pair_list) * len(target_exponents)
    columns: list[Vec] = []
    for a in range(r):
        for exponent in window_exponents:
            form = one_form(
                data.coords,
                [
                    EvenPoly(data.coords, {exponent: Fraction(1)})
                    if b == a
                    else EvenPoly.zero(data.coords)
                    for b in range(r)
                ],
            )
            image = e_differential(data, form)
            column = [Fraction(0)] * rows
            for p, (u, v) in enumerate(pair_list):
                for e, coeff in image.component((u, v)).terms.items():
                    column[p * len(target_exponents) + target_index[e]] = coeff
            columns.append(column)
    matrix = column_stack(columns, nrows=rows) if columns else []
    kernel = nullspace(matrix, ncols=len(columns)) if columns else []
    closed_basis = [
        _one_form_from_vector(data, window_exponents, vector) for vector in kernel
    ]

    # exact part: image of d0 on functions of degree <= trunc + slack,
    # intersected with the window via the kernel of the outside projection
    source_exponents = monomial_exponents(n, trunc + slack)
    image_columns: list[Vec] = []
    out_columns: list[Vec] = []
    big_exponents = monomial_exponents(n, trunc + slack + max(0, _max_coeff_degree(data)))
    big_index = {e: k for k, e in enumerate(big_exponents)}
    for exponent in source_exponents:
        f = AltForm(
            data.coords, 0, {(): EvenPoly(data.coords, {exponent: Fraction(1)})}
        )
        image = e_differential(data, f)
        full = [Fraction(0)] * (r * len(big_exponents))
        for a in range(r):
            for e, coeff in image.component((a,)).terms.items():
                full[a * len(big_exponents) + big_index[e]] = coeff
        window_part = [Fraction(0)] * (r * len(window_exponents))
        out_part = []
        for a in range(r):
            for k, e in enumerate(big_exponents):
                value = full[a * len(big_exponents) + k]
                if e in window_index:
                    window_part[a * len(window_exponents) + window_index[e]] = value
                else:
                    out_part.append(value)
        image_columns.append(window_part)
        out_columns.append(out_part)
    in_window_sources = nullspace(
        column_stack(out_columns, nrows=len(out_columns[0]) if out_columns else 0),
        ncols=len(source_exponents),
    )
    window_images = [
        [
            sum(
                (column[k] * weight for column, weight in zip(image_columns, combo)),
                Fraction(0),
            )
            for k in range(r * len(window_exponents))
        ]
        for combo in in_window_sources
    ]
    exact_dim = rank(column_stack(window_images, nrows=r * len(window_exponents)))

    filtration = _max_coeff_degree(data) <= 0
    return CohomologyReport(
        degree=1,
        trunc=trunc,
        slack=slack,
        closed_dim=len(closed_basis),
        exact_dim=exact_dim,
        h_dim=len(closed_basis) - exact_dim,
        closed_basis=closed_basis,
        flags={
            "truncated": True,
            "degree_filtration_preserved": filtration,
        },
    )


def _max_coeff_degree(data: Algebroid) -> int:
    """How much the differential can raise x-degree beyond the derivative loss."""
    anchor_deg = max(
        (entry.total_degree() for row in data.anchor for entry in row), default=0
    )
    structure_deg = max(
        (
            entry.total_degree()
            for plane in data.structure
            for row in plane
            for entry in row
        ),
        default=0,
    )
    return max(anchor_deg - 1, structure_deg, 0)


def is_exact_one_form(
    data: Algebroid, alpha: AltForm, degree: int
) -> EvenPoly | None:
    """Solve the frame-gradient equation for a primitive of x-degree <= degree."""
    if alpha.arity != 1:
        raise ValueError("exactness query takes a 1-form")
    n, r = data.base_dim, data.rank
    source_exponents = monomial_exponents(n, degree)
    target_exponents = monomial_exponents(n, degree + max(0, _max_coeff_degree(data)))
    target_index = {e: k for k, e in enumerate(target_exponents)}
    rows = r * len(target_exponents)
    matrix_columns: list[Vec] = []
    for exponent in source_exponents:
        f = AltForm(
            data.coords, 0, {(): EvenPoly(data.coords, {exponent: Fraction(1)})}
        )
        image = e_differential(data, f)
        column = [Fraction(0)] * rows
        for a in range(r):
            for e, coeff in image.component((a,)).terms.items():
                column[a * len(target_exponents) + target_index[e]] = coeff
        matrix_columns.append(column)
    rhs = [Fraction(0)] * rows
    for a in range(r):
        for e, coeff in alpha.component((a,)).terms.items():
            if e not in target_index:
                return None  # alpha outside the reachable window
            rhs[a * len(target_exponents) + target_index[e]] = coeff
    solution = solve(column_stack(matrix_columns, nrows=rows), rhs)
    if solution is None:
        return None
    terms = {
        exponent: value
        for exponent, value in zip(source_exponents, solution)
        if value != 0
    }
    return EvenPoly(data.coords, terms)
