"""Super-time charge and the component form of the one-dimensional action.

The charge S and the covariant Hamiltonian H combine into one odd
generator Q = S + theta H on the phase space extended by a single odd
super-time direction theta of ghost degree +1.  Theta has no bracket
partner, so it rides through the bracket as a spectator and the self
bracket splits exactly as

    (Q, Q) = (S, S) - 2 theta (S, H).

Nilpotency of Q therefore certifies the master equation and charge
invariance in one stroke.

The component expansion sends every phase-space coordinate z to a
superfield z(t) + theta z~(t), where the partner z~ has ghost degree
gh(z) - 1 and opposite parity, and reads off the theta coefficient of

    P_i d X^i - Pi_a d Xi^a - Q(superfields),     d F = (dF/dt) theta.

Multiplying theta from the right in d fixes the antighost kinetic sign:
the integrand starts with p_i x_i_dot - pi_a xi_a_dot and its ghost-free
sector is p_i x_i_dot - H(x, p) - lam^a Phi_a, with the multiplier lam^a
appearing as the theta partner of the ghost xi_a.  Time derivatives are
formal first-order markers (x_dot, xi_dot); the ring has no higher jets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .algebroid import Algebroid
from .bfv import BFVPackage
from .constraints import build_constraints
from .dynamics import GeometryPack, build_hamiltonian
from .graded import (
    GradedContext,
    GradedPoly,
    antighost_name,
    ghost_name,
    momentum_name,
    transport,
)
from .report import FAIL, PASS, CheckReport

THETA = "theta"

SUPERCHARGE_IDENTITY = "(Q, Q) = 0"
BOOKKEEPING_IDENTITY = "every component term has ghost number 0 and even parity"


def velocity_name(name: str) -> str:
    return f"{name}_dot"


def partner_name(name: str) -> str:
    return f"{name}_odd"


def multiplier_name(a: int) -> str:
    """1-based multiplier name; the theta partner of the matching ghost."""
    return f"lam_{a}"


# the theta-extended bracket context and the charge on it


def supercharge_context(ctx: GradedContext) -> GradedContext:
    """The given bracket context extended by the odd super-time direction."""
    if THETA in ctx.even_index or THETA in ctx.odd_index:
        raise ValueError("the context already carries a super-time direction")
    return GradedContext(
        even=tuple(zip(ctx.even_names, ctx.even_ghost)),
        odd=tuple(zip(ctx.odd_names, ctx.odd_ghost)) + ((THETA, 1),),
        pairs_even=ctx.pairs_even,
        pairs_odd=ctx.pairs_odd,
        twist=ctx.twist,
    )


@dataclass(frozen=True)
class SuperCharge:
    """Q = S + theta H together with the package it came from."""

    context: GradedContext
    Q: GradedPoly
    package: BFVPackage

    def __post_init__(self) -> None:
        if self.Q.ctx != self.context:
            raise ValueError("the supercharge must live in its stated context")
        if self.Q.is_zero or self.Q.parity() != 1 or self.Q.ghost_degree() != 1:
            raise ValueError("the supercharge must be odd of ghost degree +1")


def build_supercharge(bfv: BFVPackage) -> SuperCharge:
    ctx = supercharge_context(bfv.ctx)
    theta = ctx.var(THETA)
    Q = transport(bfv.S, ctx) + theta * transport(bfv.H, ctx)
    return SuperCharge(ctx, Q, bfv)


def check_supercharge(sq: SuperCharge) -> CheckReport:
    """Nilpotency of the super-time charge.

    The self bracket is computed directly and, as an internal guard,
    matched against (S, S) - 2 theta (S, H); the verdict must also agree
    with the source package's master and invariance reports.
    """
    ctx = sq.context
    bfv = sq.package
    QQ = ctx.poisson(sq.Q, sq.Q)
    SS = bfv.ctx.poisson(bfv.S, bfv.S)
    SH = bfv.ctx.poisson(bfv.S, bfv.H)
    theta = ctx.var(THETA)
    split = transport(SS, ctx) - 2 * theta * transport(SH, ctx)
    if QQ != split:
        raise RuntimeError("internal theta-split mismatch in the self-bracket")
    master = bfv.report("master")
    invariance = bfv.report("charge_invariance")
    agreed = master.status == PASS and invariance.status == PASS
    if QQ.is_zero != agreed:
        raise RuntimeError(
            "internal mismatch between the supercharge bracket and the "
            "package reports"
        )
    residuals = [
        (f"qq[{' '.join(ctx.odd_names[a] for a in word)}]", str(coeff))
        for word, coeff in sorted(
            QQ.parts.items(), key=lambda kv: (len(kv[0]), kv[0])
        )
    ]
    return CheckReport(
        "supercharge",
        PASS if QQ.is_zero else FAIL,
        SUPERCHARGE_IDENTITY,
        residuals,
        [
            "theta split: (Q, Q) = (S, S) - 2 theta (S, H)",
            f"package verdicts: master {master.status}, "
            f"charge_invariance {invariance.status}",
        ],
    )


# component fields


@dataclass(frozen=True)
class FieldEntry:
    """One component field: name, ghost degree, parity, partner flag."""

    name: str
    ghost: int
    parity: int
    is_partner: bool


def expansion_context(coords: Sequence[str], rank: int) -> GradedContext:
    """The component-field ring: no bracket pairs, one velocity marker for
    each position and each ghost, one theta partner for every phase-space
    coordinate, and theta itself for the expansion step."""
    even = [(name, 0) for name in coords]
    even += [(velocity_name(name), 0) for name in coords]
    even += [(momentum_name(name), 0) for name in coords]
    even += [(multiplier_name(a), 0) for a in range(1, rank + 1)]
    even += [(partner_name(antighost_name(a)), -2) for a in range(1, rank + 1)]
    odd = [(partner_name(name), -1) for name in coords]
    odd += [(partner_name(momentum_name(name)), -1) for name in coords]
    odd += [(ghost_name(a), 1) for a in range(1, rank + 1)]
    odd += [(velocity_name(ghost_name(a)), 1) for a in range(1, rank + 1)]
    odd += [(antighost_name(a), -1) for a in range(1, rank + 1)]
    odd.append((THETA, 1))
    return GradedContext(even=even, odd=odd)


def _partner_pairs(coords: Sequence[str], rank: int) -> list[tuple[str, str]]:
    pairs = [(name, partner_name(name)) for name in coords]
    pairs += [
        (momentum_name(name), partner_name(momentum_name(name)))
        for name in coords
    ]
    pairs += [(ghost_name(a), multiplier_name(a)) for a in range(1, rank + 1)]
    pairs += [
        (antighost_name(a), partner_name(antighost_name(a)))
        for a in range(1, rank + 1)
    ]
    return pairs


def field_table(coords: Sequence[str], rank: int) -> tuple[FieldEntry, ...]:
    """Every component field of the expansion ring, theta excluded."""
    ctx = expansion_context(coords, rank)
    partners = {partner for _, partner in _partner_pairs(coords, rank)}
    entries = []
    for names, parity in ((ctx.even_names, 0), (ctx.odd_names, 1)):
        for name in names:
            if name == THETA:
                continue
            entries.append(
                FieldEntry(name, ctx.ghost_of(name), parity, name in partners)
            )
    return tuple(entries)


def _partner_base(name: str) -> str | None:
    """The field whose theta partner this is, by the naming contract."""
    if name.endswith("_odd"):
        return name[: -len("_odd")]
    if name.startswith("lam_"):
        return "xi_" + name[len("lam_") :]
    return None


@dataclass(frozen=True)
class ComponentAction:
    """First-order component integrand with its field dictionary."""

    context: GradedContext
    fields: tuple[FieldEntry, ...]
    action: GradedPoly

    def __post_init__(self) -> None:
        if self.action.ctx != self.context:
            raise ValueError("the action must live in its stated context")

    def rows(self) -> list[dict]:
        """Canonical per-term listing, deterministic run to run."""
        return term_rows(self.action)


def term_rows(F: GradedPoly) -> list[dict]:
    """One record per term of F, sorted by word length, word, exponent."""
    ctx = F.ctx
    out = []
    for word, exponent, coeff in sorted(
        F.terms(), key=lambda t: (len(t[0]), t[0], t[1])
    ):
        out.append(
            {
                "coeff": str(coeff),
                "even": {
                    name: k for name, k in zip(ctx.even_names, exponent) if k
                },
                "odd": [ctx.odd_names[a] for a in word],
            }
        )
    return out


def superfield_images(
    ctx: GradedContext, coords: Sequence[str], rank: int
) -> dict[str, GradedPoly]:
    """z -> z + theta z~ for every phase-space coordinate."""
    theta = ctx.var(THETA)
    images: dict[str, GradedPoly] = {}
    for base, partner in _partner_pairs(coords, rank):
        images[base] = ctx.var(base) + theta * ctx.var(partner)
    return images


def expand_bv(sq: SuperCharge) -> ComponentAction:
    """Theta coefficient of P dX - Pi dXi - Q on superfields."""
    bfv = sq.package
    if bfv.ctx.twist is not None:
        raise ValueError(
            "the component expansion needs an exact symplectic potential; "
            "absorb the magnetic term first"
        )
    coords, rank = bfv.data.coords, bfv.data.rank
    ectx = expansion_context(coords, rank)
    images = superfield_images(ectx, coords, rank)
    theta = ectx.var(THETA)
    integrand = ectx.zero()
    for name in coords:
        d_position = ectx.var(velocity_name(name)) * theta
        integrand = integrand + images[momentum_name(name)] * d_position
    for a in range(1, rank + 1):
        d_ghost = ectx.var(velocity_name(ghost_name(a))) * theta
        integrand = integrand - images[antighost_name(a)] * d_ghost
    integrand = integrand - transport(sq.Q, ectx).substitute(images)
    return ComponentAction(
        ectx, field_table(coords, rank), integrand.left_deriv(THETA)
    )


def ghost_zero_truncation(ca: ComponentAction) -> GradedPoly:
    """The action with every field of nonzero ghost number set to zero."""
    ctx = ca.context
    kept = [
        (word, exponent, coeff)
        for word, exponent, coeff in ca.action.terms()
        if not word
        and not any(k and gh for k, gh in zip(exponent, ctx.even_ghost))
    ]
    return GradedPoly.from_terms(ctx, kept)


def extended_action_reference(data: Algebroid, pack: GeometryPack) -> GradedPoly:
    """p x_dot minus H minus lam Phi, assembled from the base fields only.

    This route never sees superfields: the Hamiltonian comes from the
    evolution side and the constraints from the constraint builder, so
    the ghost-free sector of the expansion has an independent source.
    """
    if data.coords != pack.coords or data.rank != pack.rank:
        raise ValueError("frame data and geometry pack disagree on base or rank")
    if pack.beta is not None:
        raise ValueError(
            "drift term present: absorb it before the extended assembly"
        )
    ectx = expansion_context(data.coords, data.rank)
    total = ectx.zero()
    for name in data.coords:
        total = total + ectx.var(momentum_name(name)) * ectx.var(
            velocity_name(name)
        )
    if pack.g_inv is not None:
        total = total - transport(build_hamiltonian(pack), ectx)
    else:
        total = total - ectx.lift(pack.potential_or_zero())
    constraints = build_constraints(data, pack.alpha, pack.magnetic)
    for a, phi in enumerate(constraints.phis, start=1):
        total = total - ectx.var(multiplier_name(a)) * transport(phi, ectx)
    return total


def check_bookkeeping(ca: ComponentAction) -> CheckReport:
    """Re-count every grading from the field dictionary, not from the ring.

    The table is the serialized contract, so each term's ghost number and
    parity are recomputed from the table entries alone; a corrupted table
    or a mis-assembled action both surface as residuals.
    """
    ctx = ca.context
    residuals: list[tuple[str, str]] = []
    table: dict[str, FieldEntry] = {}
    for entry in ca.fields:
        if entry.name in table:
            residuals.append((f"field[{entry.name}]", "listed twice"))
        table[entry.name] = entry

    for name in ctx.even_names + ctx.odd_names:
        if name == THETA:
            continue
        if name not in table:
            residuals.append((f"field[{name}]", "missing from the table"))
            continue
        entry = table[name]
        ring_parity = ctx.parity_of(name)
        if entry.ghost != ctx.ghost_of(name) or entry.parity != ring_parity:
            residuals.append(
                (
                    f"field[{name}]",
                    f"table says ghost {entry.ghost} parity {entry.parity}, "
                    f"ring says ghost {ctx.ghost_of(name)} parity {ring_parity}",
                )
            )
    for name in table:
        if name == THETA or name in ctx.even_index or name in ctx.odd_index:
            if name == THETA:
                residuals.append((f"field[{name}]", "not a component field"))
            continue
        residuals.append((f"field[{name}]", "unknown to the ring"))

    # theta partners must sit one ghost degree below with flipped parity
    for entry in ca.fields:
        base = _partner_base(entry.name)
        if entry.is_partner:
            if base is None or base not in table:
                residuals.append(
                    (f"field[{entry.name}]", "partner without a base field")
                )
                continue
            source = table[base]
            if (
                entry.ghost != source.ghost - 1
                or entry.parity != 1 - source.parity
            ):
                residuals.append(
                    (
                        f"field[{entry.name}]",
                        f"partner of {base}: expected ghost "
                        f"{source.ghost - 1} and parity {1 - source.parity}, "
                        f"table says ghost {entry.ghost} parity {entry.parity}",
                    )
                )
        elif base is not None and base in table:
            residuals.append(
                (f"field[{entry.name}]", "named like a partner but not flagged")
            )

    for word, exponent, coeff in sorted(
        ca.action.terms(), key=lambda t: (len(t[0]), t[0], t[1])
    ):
        factors = [
            name if k == 1 else f"{name}^{k}"
            for name, k in zip(ctx.even_names, exponent)
            if k
        ] + [ctx.odd_names[a] for a in word]
        label = f"term[{' '.join(factors) if factors else '1'}]"
        if any(ctx.odd_names[a] == THETA for a in word):
            residuals.append((label, "super-time survives the expansion"))
            continue
        names = [
            (name, k) for name, k in zip(ctx.even_names, exponent) if k
        ] + [(ctx.odd_names[a], 1) for a in word]
        if any(name not in table for name, _ in names):
            continue  # already reported as missing
        ghost = sum(k * table[name].ghost for name, k in names)
        parity = sum(k * table[name].parity for name, k in names) % 2
        if ghost:
            residuals.append((label, f"ghost number {ghost}"))
        if parity:
            residuals.append((label, "odd parity"))

    return CheckReport(
        "bookkeeping",
        FAIL if residuals else PASS,
        BOOKKEEPING_IDENTITY,
        residuals,
        [
            "the theta partner of each ghost is its multiplier (lam series)",
            "derivative markers are first order; the ring has no higher jets",
        ],
    )
