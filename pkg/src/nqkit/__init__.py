"""nqkit: exact graded symbolic engine for anchored frame systems.

The package verifies, in exact rational arithmetic, the structural
identities of frame data over a polynomial base: bracket axioms, the
first-class constraint algebra they generate on the (possibly twisted)
cotangent bundle, the odd charge and its master equation on the extended
phase space, covariant dynamics, truncated cohomology windows, and the
one-dimensional superfield expansion into a component action.
"""

from __future__ import annotations

from .aksz import (
    ComponentAction,
    SuperCharge,
    build_supercharge,
    check_bookkeeping,
    check_supercharge,
    expand_bv,
    extended_action_reference,
    ghost_zero_truncation,
)
from .algebroid import (
    Algebroid,
    AltForm,
    abelian_algebroid,
    algebroid_from_lists,
    check_axioms,
    cohomology_h1,
    de_rham,
    e_differential,
    is_exact_one_form,
    one_form,
    pullback,
    two_form_from_matrix,
    zero_form,
)
from .bfv import (
    BFVPackage,
    assemble_bfv,
    bfv_h0,
    build_H,
    build_S,
    check_cartan,
    check_master,
)
from .constraints import (
    ConstraintSet,
    build_constraints,
    check_first_class,
    extract_structure,
    irreducibility_probe,
)
from .dynamics import (
    GeometryPack,
    absorb_beta,
    build_hamiltonian,
    check_evolution_invariance,
    check_metric_compat,
    check_structural,
    solve_connection,
)
from .graded import GradedContext, GradedPoly, cotangent_context, extended_context
from .parser import ParseError, parse_poly, rational_from_string
from .poly import EvenPoly, Rat, ring
from .problem import Problem, ProblemError, load_problem
from .report import FAIL, PASS, SKIPPED, WARN, CheckReport, worst_status

__all__ = [
    "Algebroid",
    "AltForm",
    "BFVPackage",
    "CheckReport",
    "ComponentAction",
    "ConstraintSet",
    "EvenPoly",
    "FAIL",
    "GeometryPack",
    "GradedContext",
    "GradedPoly",
    "PASS",
    "ParseError",
    "Problem",
    "ProblemError",
    "Rat",
    "SKIPPED",
    "SuperCharge",
    "WARN",
    "abelian_algebroid",
    "absorb_beta",
    "algebroid_from_lists",
    "assemble_bfv",
    "bfv_h0",
    "build_H",
    "build_S",
    "build_constraints",
    "build_hamiltonian",
    "build_supercharge",
    "check_axioms",
    "check_bookkeeping",
    "check_cartan",
    "check_evolution_invariance",
    "check_first_class",
    "check_master",
    "check_metric_compat",
    "check_structural",
    "check_supercharge",
    "cohomology_h1",
    "cotangent_context",
    "de_rham",
    "e_differential",
    "expand_bv",
    "extended_action_reference",
    "extended_context",
    "extract_structure",
    "ghost_zero_truncation",
    "irreducibility_probe",
    "is_exact_one_form",
    "load_problem",
    "one_form",
    "parse_poly",
    "pullback",
    "rational_from_string",
    "ring",
    "solve_connection",
    "two_form_from_matrix",
    "worst_status",
    "zero_form",
]
