"""Extended phase space with one ghost pair per frame direction.

The odd charge S collects the anchor, the structure functions and the
affine part into a single generator of ghost degree +1.  Its self-bracket
reproduces every closure defect of the frame data at once, so one
nilpotency test covers the whole identity battery.  A covariantized
Hamiltonian then probes the interaction of the metric data with the
frame: its bracket with the charge either vanishes or is carried by a
single obstruction tensor with three frame indices and one base index.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .algebroid import (
    Algebroid,
    AltForm,
    anchor_defect,
    e_differential,
    jacobi_defect,
    pullback,
    zero_form,
)
from .constraints import twist_of_magnetic
from .dynamics import GeometryPack
from .graded import (
    GradedContext,
    GradedPoly,
    antighost_name,
    extended_context,
    ghost_name,
    momentum_name,
)
from .linalg import nullspace, rank
from .poly import EvenPoly, Exponent, Rat, embed, monomial_exponents
from .report import FAIL, PASS, SKIPPED, CheckReport

CARTAN_IDENTITY = "(S, H_cov) = -g^ij pcov_i S^c_jab xi^a xi^b pi_c"


def charge_context(data: Algebroid, magnetic: AltForm | None = None) -> GradedContext:
    return extended_context(
        data.coords, data.rank, twist_of_magnetic(data.coords, magnetic)
    )


def build_S(
    data: Algebroid,
    alpha: AltForm | None = None,
    magnetic: AltForm | None = None,
    ctx: GradedContext | None = None,
) -> GradedPoly:
    """The charge rho_a^i xi^a p_i - 1/2 C^c_ab xi^a xi^b pi_c + alpha_a xi^a."""
    if ctx is None:
        ctx = charge_context(data, magnetic)
    if alpha is not None:
        if alpha.arity != 1 or alpha.coords != data.coords:
            raise ValueError("affine part must be a 1-form over the base ring")
        for key in alpha.components:
            if key[0] >= data.rank:
                raise ValueError(
                    f"affine part names frame index {key[0] + 1}, rank is {data.rank}"
                )
    S = ctx.zero()
    for a in range(data.rank):
        xi = ctx.var(ghost_name(a + 1))
        for i, name in enumerate(data.coords):
            S = S + ctx.lift(data.anchor[a][i]) * xi * ctx.var(momentum_name(name))
        if alpha is not None:
            S = S + ctx.lift(alpha.component((a,))) * xi
    for c in range(data.rank):
        cubic = ctx.zero()
        for a in range(data.rank):
            for b in range(data.rank):
                cubic = cubic + ctx.lift(data.structure[c][a][b]) * ctx.var(
                    ghost_name(a + 1)
                ) * ctx.var(ghost_name(b + 1))
        S = S - cubic * ctx.var(antighost_name(c + 1)) / 2
    return S


def _word_label(ctx: GradedContext, word: tuple[int, ...]) -> str:
    return " ".join(ctx.odd_names[k] for k in word)


def _expected_self_bracket(
    data: Algebroid,
    alpha: AltForm | None,
    magnetic: AltForm | None,
    ctx: GradedContext,
) -> GradedPoly:
    # the xi xi coefficients are twice the first-class residual tensor,
    # the xi xi xi pi coefficients are the jacobi defect itself
    structural = e_differential(
        data, alpha if alpha is not None else zero_form(data.coords, 1)
    )
    if magnetic is not None:
        structural = structural - pullback(data, magnetic)
    defect = anchor_defect(data)
    expected = ctx.zero()
    for (a, b), vec in defect.items():
        coeff = ctx.lift(structural.component((a, b)))
        for i, name in enumerate(data.coords):
            coeff = coeff + ctx.lift(vec[i]) * ctx.var(momentum_name(name))
        expected = expected + 2 * coeff * ctx.var(ghost_name(a + 1)) * ctx.var(
            ghost_name(b + 1)
        )
    for (a, b, c, d), value in jacobi_defect(data).items():
        expected = expected + ctx.lift(value) * ctx.var(ghost_name(a + 1)) * ctx.var(
            ghost_name(b + 1)
        ) * ctx.var(ghost_name(c + 1)) * ctx.var(antighost_name(d + 1))
    return expected


def check_master(
    S: GradedPoly,
    data: Algebroid | None = None,
    alpha: AltForm | None = None,
    magnetic: AltForm | None = None,
) -> CheckReport:
    """Nilpotency of the charge under the graded bracket.

    When the frame data used to build S is supplied, the self-bracket is
    independently predicted from the anchor and jacobi defects together
    with the structural 2-form; disagreement between the routes raises.
    """
    ctx = S.ctx
    if S.is_zero or S.parity() != 1 or S.ghost_degree() != 1:
        raise ValueError("the charge must be odd of ghost degree +1")
    ss = ctx.poisson(S, S)
    notes: list[str] = []
    if data is not None:
        if ss != _expected_self_bracket(data, alpha, magnetic, ctx):
            raise RuntimeError("internal dual-route mismatch in the self-bracket")
        notes.append(
            "dual route: the self-bracket matches the anchor and jacobi "
            "defects with the structural 2-form"
        )
    residuals = [
        (f"ss[{_word_label(ctx, word)}]", str(coeff))
        for word, coeff in sorted(ss.parts.items(), key=lambda kv: (len(kv[0]), kv[0]))
    ]
    status = FAIL if residuals else PASS
    return CheckReport("master", status, "(S, S) = 0", residuals, notes)


def covariant_momenta(pack: GeometryPack, ctx: GradedContext) -> list[GradedPoly]:
    """p_i minus the ghost-pair correction of the connection."""
    if pack.omega is None:
        raise ValueError("covariant momenta need the connection omega")
    out = []
    for i, name in enumerate(pack.coords):
        p = ctx.var(momentum_name(name))
        for a in range(pack.rank):
            for b in range(pack.rank):
                p = p - ctx.lift(pack.omega[b][a][i]) * ctx.var(
                    ghost_name(a + 1)
                ) * ctx.var(antighost_name(b + 1))
        out.append(p)
    return out


def build_H(pack: GeometryPack, ctx: GradedContext | None = None) -> GradedPoly:
    """Covariant kinetic term plus the scalar potential."""
    if pack.g_inv is None:
        raise ValueError("the covariant hamiltonian needs the inverse metric g_inv")
    if pack.omega is None:
        raise ValueError("the covariant hamiltonian needs the connection omega")
    if pack.beta is not None:
        raise ValueError("drift term present: absorb it before the extended assembly")
    if ctx is None:
        ctx = extended_context(
            pack.coords, pack.rank, twist_of_magnetic(pack.coords, pack.magnetic)
        )
    pcov = covariant_momenta(pack, ctx)
    H = ctx.lift(pack.potential_or_zero())
    for i in range(len(pack.coords)):
        for j in range(len(pack.coords)):
            H = H + ctx.lift(pack.g_inv[i][j]) * pcov[i] * pcov[j] / 2
    return H


@dataclass(frozen=True)
class BFVPackage:
    """Charge, Hamiltonian and the reports of the identity battery."""

    ctx: GradedContext
    S: GradedPoly
    H: GradedPoly
    data: Algebroid
    geometry: GeometryPack
    reports: tuple[CheckReport, ...]

    def __post_init__(self) -> None:
        if self.S.is_zero or self.S.parity() != 1 or self.S.ghost_degree() != 1:
            raise ValueError("the charge must be odd of ghost degree +1")
        if not self.H.is_zero and (self.H.parity() != 0 or self.H.ghost_degree() != 0):
            raise ValueError("the hamiltonian must be even of ghost degree 0")

    def report(self, name: str) -> CheckReport:
        for entry in self.reports:
            if entry.name == name:
                return entry
        raise KeyError(f"no report named {name!r}")


def _split_momentum_linear(
    coeff: EvenPoly, base: tuple[str, ...]
) -> list[EvenPoly] | None:
    """Write a phase-space coefficient as sum_i c_i(x) p_i, or None."""
    coords = coeff.coords
    n = len(base)
    momentum_positions = [coords.index(momentum_name(name)) for name in base]
    linear: list[dict[Exponent, Rat]] = [{} for _ in range(n)]
    for exponent, value in coeff.terms.items():
        weights = [exponent[pos] for pos in momentum_positions]
        if sum(weights) != 1:
            return None
        i = weights.index(1)
        stripped = list(exponent)
        stripped[momentum_positions[i]] = 0
        linear[i][tuple(stripped)] = value
    return [EvenPoly(coords, terms) for terms in linear]


def _cartan_core(
    data: Algebroid, pack: GeometryPack, ctx: GradedContext, H: GradedPoly
) -> CheckReport:
    if pack.g_inv is None or pack.g_low is None:
        raise ValueError("the cartan check needs both metric directions")
    n, r = len(data.coords), data.rank
    core = build_S(data, magnetic=pack.magnetic, ctx=ctx)
    h_cov = H - ctx.lift(pack.potential_or_zero())
    R = ctx.poisson(core, h_cov)
    if R.is_zero:
        return CheckReport(
            "cartan",
            PASS,
            CARTAN_IDENTITY,
            [],
            ["the obstruction tensor vanishes: cartan geometry"],
        )

    # candidate entries from the momentum-linear xi xi pi words
    tensor: dict[tuple[int, int, int, int], EvenPoly] = {}
    offending: list[str] = []
    for word, coeff in R.parts.items():
        names = [ctx.odd_names[k] for k in word]
        ghost_count = sum(1 for name in names if name.startswith("xi_"))
        if (len(word), ghost_count) == (3, 2):
            linear = _split_momentum_linear(coeff, data.coords)
            if linear is None:
                offending.append(_word_label(ctx, word))
                continue
            a, b = word[0], word[1]
            c = word[2] - r
            for j in range(n):
                entry = EvenPoly.zero(coeff.coords)
                for i in range(n):
                    entry = entry - embed(pack.g_low[j][i], coeff.coords) * linear[i]
                if not entry.is_zero:
                    tensor[(c, j, a, b)] = entry
        elif (len(word), ghost_count) != (5, 3):
            offending.append(_word_label(ctx, word))
    if offending:
        raise ValueError(
            "bracket residual leaves the covariant tensor shape; offending "
            "words: " + ", ".join(sorted(offending))
        )

    # the normalization is fixed by reassembling the residual exactly
    pcov = covariant_momenta(pack, ctx)
    rebuilt = ctx.zero()
    for j in range(n):
        block = ctx.zero()
        for (c, jj, a, b), entry in tensor.items():
            if jj != j:
                continue
            block = block + ctx.lift(entry) * ctx.var(ghost_name(a + 1)) * ctx.var(
                ghost_name(b + 1)
            ) * ctx.var(antighost_name(c + 1))
        for i in range(n):
            rebuilt = rebuilt - ctx.lift(pack.g_inv[i][j]) * pcov[i] * block
    if rebuilt != R:
        raise ValueError(
            "bracket residual leaves the covariant tensor shape; "
            f"unmatched part: {R - rebuilt}"
        )

    residuals = [
        (f"S[c={c + 1},j={j + 1},a={a + 1},b={b + 1}]", str(entry))
        for (c, j, a, b), entry in sorted(tensor.items())
    ]
    return CheckReport(
        "cartan",
        FAIL,
        CARTAN_IDENTITY,
        residuals,
        ["the extracted tensor reassembles the bracket residual exactly"],
    )


def check_cartan(bfv: BFVPackage) -> CheckReport:
    """Obstruction tensor of the connection against frame and metric.

    The affine part of the charge is excluded here; its failures are
    visible in the alpha sub-residual of the assembly report.
    """
    if not bfv.ctx.poisson(bfv.S, bfv.S).is_zero:
        raise ValueError("the cartan check needs a nilpotent charge")
    return _cartan_core(bfv.data, bfv.geometry, bfv.ctx, bfv.H)


def _charge_invariance(
    data: Algebroid, pack: GeometryPack, ctx: GradedContext, S: GradedPoly, H: GradedPoly
) -> CheckReport:
    core = build_S(data, magnetic=pack.magnetic, ctx=ctx)
    affine = S - core
    potential = ctx.lift(pack.potential_or_zero())
    h_cov = H - potential

    gradient = ctx.zero()
    for a in range(data.rank):
        for i, name in enumerate(data.coords):
            gradient = gradient + ctx.var(ghost_name(a + 1)) * ctx.lift(
                data.anchor[a][i] * pack.potential_or_zero().diff(name)
            )
    parts = [
        ("cartan_part", ctx.poisson(core, h_cov)),
        ("dalpha_part", ctx.poisson(affine, h_cov)),
        ("potential_part", ctx.poisson(S, potential)),
    ]
    if parts[2][1] != gradient:
        raise RuntimeError("internal dual-route mismatch in the potential part")
    total = ctx.poisson(S, H)
    if parts[0][1] + parts[1][1] + parts[2][1] != total:
        raise RuntimeError("internal dual-route mismatch in the charge invariance")
    residuals = [(label, str(value)) for label, value in parts if not value.is_zero]
    status = PASS if total.is_zero else FAIL
    return CheckReport(
        "charge_invariance",
        status,
        "(S, H) = 0",
        residuals,
        [
            "sub-residuals mirror the metric, affine and potential families "
            "of the structural check"
        ],
    )


def assemble_bfv(data: Algebroid, pack: GeometryPack) -> BFVPackage:
    """Build charge and Hamiltonian, then run the full identity battery."""
    if data.coords != pack.coords or data.rank != pack.rank:
        raise ValueError("frame data and geometry pack disagree on base or rank")
    ctx = charge_context(data, pack.magnetic)
    S = build_S(data, alpha=pack.alpha, magnetic=pack.magnetic, ctx=ctx)
    if pack.g_inv is not None:
        H = build_H(pack, ctx)
    else:
        if pack.beta is not None:
            raise ValueError(
                "drift term present: absorb it before the extended assembly"
            )
        H = ctx.lift(pack.potential_or_zero())
    reports = [check_master(S, data=data, alpha=pack.alpha, magnetic=pack.magnetic)]
    if pack.g_inv is not None and pack.g_low is not None:
        if reports[0].status == PASS:
            reports.append(_cartan_core(data, pack, ctx, H))
        else:
            reports.append(
                CheckReport(
                    "cartan",
                    SKIPPED,
                    CARTAN_IDENTITY,
                    [],
                    ["master equation fails: the obstruction tensor is undefined"],
                )
            )
    else:
        reports.append(
            CheckReport(
                "cartan",
                SKIPPED,
                CARTAN_IDENTITY,
                [],
                ["no metric pair: the covariant obstruction is not defined"],
            )
        )
    reports.append(_charge_invariance(data, pack, ctx, S, H))
    return BFVPackage(ctx, S, H, data, pack, tuple(reports))


# truncated ghost-number-zero cohomology of (S, .)


@dataclass(frozen=True)
class H0Report:
    x_degree: int
    p_degree: int
    closed_dim: int
    exact_dim: int
    h_dim: int
    notes: tuple[str, ...]


def _balanced_words(rank: int, ghost_shift: int) -> list[tuple[int, ...]]:
    """Odd words with #xi - #pi equal to the requested ghost number."""
    words = []
    for k in range(rank + 1):
        k_pi = k - ghost_shift
        if not 0 <= k_pi <= rank:
            continue
        for xs in combinations(range(rank), k):
            for ps in combinations(range(rank), k_pi):
                words.append(tuple(xs) + tuple(rank + c for c in ps))
    return words


def _window_elements(
    ctx: GradedContext,
    n: int,
    x_degree: int,
    p_degree: int,
    words: list[tuple[int, ...]],
) -> list[GradedPoly]:
    elems = []
    for xe in monomial_exponents(n, x_degree):
        for pe in monomial_exponents(n, p_degree):
            for word in words:
                elems.append(
                    GradedPoly.from_terms(ctx, [(word, xe + pe, Rat(1))])
                )
    return elems


def bfv_h0(bfv: BFVPackage, x_degree: int, p_degree: int) -> H0Report:
    """Kernel minus image of (S, .) on a finite ghost-number-0 window.

    Both dimensions are exact on the window: an element counts as closed
    only if its bracket vanishes identically, and image vectors are kept
    only when their out-of-window part cancels exactly.  The report is a
    truncated diagnostic, not the reduced-space isomorphism.
    """
    if x_degree < 0 or p_degree < 0:
        raise ValueError("truncation degrees must be nonnegative")
    ctx, S = bfv.ctx, bfv.S
    if not ctx.poisson(S, S).is_zero:
        raise ValueError("the master equation fails: (S, .) does not square to zero")
    n, r = len(bfv.data.coords), bfv.data.rank

    def in_window(exponent: Exponent) -> bool:
        return (
            sum(exponent[:n]) <= x_degree and sum(exponent[n:]) <= p_degree
        )

    window = _window_elements(ctx, n, x_degree, p_degree, _balanced_words(r, 0))
    images = [ctx.poisson(S, e) for e in window]
    coords_seen: dict[tuple[tuple[int, ...], Exponent], int] = {}
    for image in images:
        for word, exponent, _ in image.terms():
            coords_seen.setdefault((word, exponent), len(coords_seen))
    matrix = [[Rat(0)] * len(window) for _ in range(len(coords_seen))]
    for col, image in enumerate(images):
        for word, exponent, coeff in image.terms():
            matrix[coords_seen[(word, exponent)]][col] = coeff
    closed_dim = len(nullspace(matrix, ncols=len(window)))

    # gh -1 sources one degree above the window; a single bracket moves
    # any monomial degree by at most one, so deeper sources reach the
    # window only through cancellations this truncation ignores
    sources = _window_elements(
        ctx, n, x_degree + 1, p_degree + 1, _balanced_words(r, -1)
    )
    source_images = [ctx.poisson(S, u) for u in sources]
    out_rows: dict[tuple[tuple[int, ...], Exponent], int] = {}
    in_rows: dict[tuple[tuple[int, ...], Exponent], int] = {}
    for image in source_images:
        for word, exponent, _ in image.terms():
            bucket = in_rows if in_window(exponent) else out_rows
            bucket.setdefault((word, exponent), len(bucket))
    out_matrix = [[Rat(0)] * len(sources) for _ in range(len(out_rows))]
    for col, image in enumerate(source_images):
        for word, exponent, coeff in image.terms():
            if not in_window(exponent):
                out_matrix[out_rows[(word, exponent)]][col] = coeff
    reachable = nullspace(out_matrix, ncols=len(sources))
    in_images = []
    for combo in reachable:
        vector = [Rat(0)] * len(in_rows)
        for col, weight in enumerate(combo):
            if weight == 0:
                continue
            for word, exponent, coeff in source_images[col].terms():
                if in_window(exponent):
                    vector[in_rows[(word, exponent)]] += weight * coeff
        in_images.append(vector)
    exact_dim = rank([list(row) for row in zip(*in_images)]) if in_images else 0

    if exact_dim > closed_dim:
        raise RuntimeError("internal window inconsistency in the cohomology count")
    return H0Report(
        x_degree,
        p_degree,
        closed_dim,
        exact_dim,
        closed_dim - exact_dim,
        (
            "truncated diagnostic: kernel and image are exact on the window, "
            "sources one degree above",
        ),
    )
