"""Defect tensors, exterior calculus and the odd derivation Q."""

from __future__ import annotations

import random

import pytest

from nqkit.algebroid import (
    Algebroid,
    AltForm,
    abelian_algebroid,
    algebroid_from_lists,
    anchor_defect,
    apply_q,
    check_axioms,
    cohomology_h1,
    de_rham,
    e_differential,
    ghost_context,
    is_exact_one_form,
    jacobi_defect,
    one_form,
    pullback,
    two_form_from_matrix,
    zero_form,
)
from nqkit.graded import ghost_name
from nqkit.poly import EvenPoly, Rat, ring
from nqkit.report import FAIL, PASS


def levi(a: int, b: int, c: int) -> int:
    if {a, b, c} != {0, 1, 2}:
        return 0
    seq = (a, b, c)
    inversions = sum(
        1 for u in range(3) for v in range(u + 1, 3) if seq[u] > seq[v]
    )
    return -1 if inversions % 2 else 1


def so3_action() -> Algebroid:
    """Rotation frame on 3-space: anchor eps_aij x^j, bracket eps_abc."""
    coords, g = ring(["x1", "x2", "x3"])
    x = [g["x1"], g["x2"], g["x3"]]
    zero = EvenPoly.zero(coords)
    anchor = [
        [sum((levi(a, i, j) * x[j] for j in range(3)), zero) for i in range(3)]
        for a in range(3)
    ]
    structure = [
        [[levi(a, b, c) * EvenPoly.const(coords, 1) for b in range(3)] for a in range(3)]
        for c in range(3)
    ]
    return algebroid_from_lists(coords, anchor, structure)


def abelian_r1() -> Algebroid:
    coords, g = ring(["x"])
    return abelian_algebroid(coords, [[EvenPoly.const(coords, 1)]])


def rank2_line() -> Algebroid:
    """Frame (d/dx, x d/dx) on the line, with [e1, e2] = e1."""
    coords, g = ring(["x"])
    one = EvenPoly.const(coords, 1)
    zero = EvenPoly.zero(coords)
    structure = [[[zero, one], [-one, zero]], [[zero, zero], [zero, zero]]]
    return algebroid_from_lists(coords, [[one], [g["x"]]], structure)


def broken_jacobi() -> Algebroid:
    """Rank 3 over the line with a position-dependent bracket that fails both
    compatibility tensors: anchor (1, x, 0) and C^1_23 = x."""
    coords, g = ring(["x"])
    one = EvenPoly.const(coords, 1)
    zero = EvenPoly.zero(coords)
    x = g["x"]
    z3 = [[zero] * 3 for _ in range(3)]
    structure = [
        [[zero, zero, zero], [zero, zero, x], [zero, -x, zero]],
        [row[:] for row in z3],
        [row[:] for row in z3],
    ]
    return algebroid_from_lists(coords, [[one], [x], [zero]], structure)


def nilpotent_bundle() -> Algebroid:
    """Zero anchor with C^1_23 = x: a family of nilpotent brackets.

    The structure function is position dependent, yet both defect tensors
    vanish identically, so this must pass the axioms.
    """
    coords, g = ring(["x"])
    zero = EvenPoly.zero(coords)
    x = g["x"]
    z3 = [[zero] * 3 for _ in range(3)]
    structure = [
        [[zero, zero, zero], [zero, zero, x], [zero, -x, zero]],
        [row[:] for row in z3],
        [row[:] for row in z3],
    ]
    return algebroid_from_lists(coords, [[zero], [zero], [zero]], structure)


# construction and forms


def test_construction_rejects_asymmetric_structure():
    coords, g = ring(["x"])
    one = EvenPoly.const(coords, 1)
    zero = EvenPoly.zero(coords)
    with pytest.raises(ValueError, match="antisymmetric"):
        algebroid_from_lists(
            coords, [[one], [one]], [[[zero, one], [one, zero]]] * 2
        )


def test_construction_rejects_shape_and_ring_mismatch():
    coords, g = ring(["x"])
    other_coords, h = ring(["y"])
    one = EvenPoly.const(coords, 1)
    with pytest.raises(ValueError, match="rank x base_dim"):
        algebroid_from_lists(coords, [[one, one]], [[[EvenPoly.zero(coords)]]])
    with pytest.raises(ValueError, match="base coordinate ring"):
        algebroid_from_lists(
            coords, [[EvenPoly.const(other_coords, 1)]], [[[EvenPoly.zero(coords)]]]
        )


def test_anchor_apply_so3():
    data = so3_action()
    coords, g = ring(["x1", "x2", "x3"])
    assert data.anchor_apply(0, g["x2"]) == g["x3"]
    assert data.anchor_apply(0, g["x3"]) == -g["x2"]
    assert data.anchor_apply(0, g["x1"]).is_zero
    # the quadratic radius is invariant under every rotation frame field
    radius = g["x1"] ** 2 + g["x2"] ** 2 + g["x3"] ** 2
    for a in range(3):
        assert data.anchor_apply(a, radius).is_zero


def test_altform_component_signs():
    coords, g = ring(["x1", "x2"])
    form = AltForm(coords, 2, {(0, 1): g["x1"]})
    assert form.component((0, 1)) == g["x1"]
    assert form.component((1, 0)) == -g["x1"]
    assert form.component((0, 0)).is_zero
    with pytest.raises(ValueError, match="strictly increasing"):
        AltForm(coords, 2, {(1, 0): g["x1"]})
    with pytest.raises(ValueError, match="strictly increasing"):
        AltForm(coords, 1, {(0, 1): g["x1"]})


def test_altform_arithmetic_and_str():
    coords, g = ring(["x1", "x2"])
    alpha = one_form(coords, [g["x2"], EvenPoly.zero(coords)])
    beta = one_form(coords, [g["x2"], g["x1"]])
    assert (alpha - beta).component((1,)) == -g["x1"]
    assert (alpha - alpha).is_zero
    assert (2 * alpha).component((0,)) == 2 * g["x2"]
    assert str(beta) == "[1] x2; [2] x1"
    assert str(zero_form(coords, 1)) == "0"


def test_two_form_from_matrix_requires_antisymmetry():
    coords, g = ring(["x1", "x2"])
    zero = EvenPoly.zero(coords)
    with pytest.raises(ValueError, match="antisymmetric"):
        two_form_from_matrix(coords, [[zero, g["x1"]], [g["x1"], zero]])
    form = two_form_from_matrix(coords, [[zero, g["x1"]], [-g["x1"], zero]])
    assert form.component((1, 0)) == -g["x1"]


# differentials


def random_poly(coords, rng, degree=3):
    terms = {}
    for _ in range(6):
        exponent = tuple(rng.randrange(degree) for _ in coords)
        terms[exponent] = Rat(rng.randrange(-5, 6))
    return EvenPoly(coords, terms)


def test_de_rham_squared_is_zero():
    coords, g = ring(["x1", "x2", "x3"])
    rng = random.Random(7)
    for _ in range(20):
        f = AltForm(coords, 0, {(): random_poly(coords, rng)})
        assert de_rham(coords, de_rham(coords, f)).is_zero


def test_frame_differential_squares_to_zero_when_axioms_hold():
    data = so3_action()
    rng = random.Random(11)
    for _ in range(10):
        f = AltForm(data.coords, 0, {(): random_poly(data.coords, rng)})
        assert e_differential(data, e_differential(data, f)).is_zero


def test_frame_differential_square_detects_defect():
    data = broken_jacobi()
    coords, g = ring(["x"])
    f = AltForm(coords, 0, {(): g["x"]})
    square = e_differential(data, e_differential(data, f))
    # the (1,2) component is the anchor defect contracted with df
    assert square.component((0, 1)) == EvenPoly.const(coords, 1)
    assert square.component((1, 2)) == -g["x"]


def test_pullback_chain_identity():
    # frame differential after pullback minus pullback after the coordinate
    # differential equals the anchor defect contracted with the 1-form
    rng = random.Random(13)
    for data in (so3_action(), rank2_line(), broken_jacobi()):
        defect = anchor_defect(data)
        for _ in range(5):
            alpha = one_form(
                data.coords,
                [random_poly(data.coords, rng) for _ in range(data.base_dim)],
            )
            lhs = e_differential(data, pullback(data, alpha)) - pullback(
                data, de_rham(data.coords, alpha)
            )
            for (a, b), vector in defect.items():
                expected = sum(
                    (
                        vector[i] * alpha.component((i,))
                        for i in range(data.base_dim)
                    ),
                    data.zero(),
                )
                assert lhs.component((a, b)) == expected


# defect tensors on the frozen fixture


def test_anchor_defect_broken_values():
    data = broken_jacobi()
    coords, g = ring(["x"])
    defect = anchor_defect(data)
    assert defect[(0, 1)][0] == EvenPoly.const(coords, 1)
    assert defect[(0, 2)][0].is_zero
    assert defect[(1, 2)][0] == -g["x"]


def test_jacobi_defect_broken_values():
    data = broken_jacobi()
    coords, g = ring(["x"])
    defect = jacobi_defect(data)
    assert defect[(0, 1, 2, 0)] == EvenPoly.const(coords, -2)
    assert defect[(0, 1, 2, 1)].is_zero
    assert defect[(0, 1, 2, 2)].is_zero


def test_jacobi_defect_vanishes_for_nilpotent_bundle():
    # zero anchor with position-dependent nilpotent bracket: both tensors vanish
    data = nilpotent_bundle()
    assert all(v.is_zero for vec in anchor_defect(data).values() for v in vec)
    assert all(v.is_zero for v in jacobi_defect(data).values())


# the axiom check


@pytest.mark.parametrize(
    "factory", [so3_action, abelian_r1, rank2_line, nilpotent_bundle]
)
def test_check_axioms_passes(factory):
    report = check_axioms(factory())
    assert report.status == PASS
    assert report.identity == "Q^2 = 0"
    assert report.residuals == []


def test_check_axioms_fails_on_broken_fixture():
    report = check_axioms(broken_jacobi())
    assert report.status == FAIL
    named = dict(report.residuals)
    assert named["anchor[a=1,b=2,i=1]"] == "1"
    assert named["anchor[a=2,b=3,i=1]"] == "-x"
    assert named["jacobi[a=1,b=2,c=3,d=1]"] == "-2"
    assert len(named) == 3


# Q as an odd derivation


def test_q_is_an_odd_left_derivation():
    data = so3_action()
    ctx = ghost_context(data)
    x1, x2 = ctx.var("x1"), ctx.var("x2")
    xi = [ctx.var(ghost_name(a)) for a in (1, 2, 3)]
    pool = [x1, xi[0], x2 * xi[0] * xi[1], xi[0] * xi[1] * xi[2], x1 * x2]
    for F in pool:
        for G in pool:
            sign = -1 if F.parity() else 1
            lhs = apply_q(data, ctx, F * G)
            rhs = apply_q(data, ctx, F) * G + sign * F * apply_q(data, ctx, G)
            assert lhs == rhs


def test_q_squares_to_zero_on_valid_data():
    data = so3_action()
    ctx = ghost_context(data)
    xi = [ctx.var(ghost_name(a)) for a in (1, 2, 3)]
    F = (
        ctx.var("x1")
        + ctx.var("x2") * xi[0]
        + ctx.var("x3") * xi[0] * xi[1]
        + xi[0] * xi[1] * xi[2]
    )
    assert apply_q(data, ctx, apply_q(data, ctx, F)).is_zero


def test_q_square_exposes_anchor_defect():
    data = broken_jacobi()
    ctx = ghost_context(data)
    square = apply_q(data, ctx, apply_q(data, ctx, ctx.var("x")))
    word = (ctx.odd_index[ghost_name(1)], ctx.odd_index[ghost_name(2)])
    assert square.coefficient_of_word(word) == EvenPoly.const(ctx.even_names, 1)


# truncated cohomology


def test_cohomology_h1_abelian_line():
    report = cohomology_h1(abelian_r1(), trunc=2)
    assert (report.closed_dim, report.exact_dim, report.h_dim) == (3, 3, 0)
    assert report.flags == {
        "truncated": True,
        "degree_filtration_preserved": True,
    }


def test_cohomology_h1_rank2_line():
    # the class of the 1-form dual to the vanishing frame field survives
    report = cohomology_h1(rank2_line(), trunc=2)
    assert (report.closed_dim, report.exact_dim, report.h_dim) == (3, 2, 1)


def test_cohomology_h1_so3_vanishes():
    constant = cohomology_h1(so3_action(), trunc=0)
    assert constant.closed_dim == 0
    assert constant.h_dim == 0
    quadratic = cohomology_h1(so3_action(), trunc=2)
    assert quadratic.h_dim == 0
    assert quadratic.closed_dim == quadratic.exact_dim
    assert quadratic.flags["degree_filtration_preserved"]


def test_cohomology_flags_degree_growth():
    report = cohomology_h1(broken_jacobi(), trunc=1)
    assert report.flags["degree_filtration_preserved"] is False


def test_closed_basis_members_are_closed():
    for factory in (abelian_r1, rank2_line, so3_action):
        data = factory()
        report = cohomology_h1(data, trunc=2)
        for form in report.closed_basis:
            assert e_differential(data, form).is_zero


def test_is_exact_one_form_finds_primitive():
    data = rank2_line()
    coords, g = ring(["x"])
    alpha = one_form(coords, [EvenPoly.const(coords, 1), g["x"]])
    primitive = is_exact_one_form(data, alpha, degree=3)
    assert primitive == g["x"]
    image = e_differential(data, AltForm(coords, 0, {(): primitive}))
    assert (image - alpha).is_zero


def test_is_exact_one_form_detects_obstruction():
    data = rank2_line()
    coords, g = ring(["x"])
    dual = one_form(coords, [EvenPoly.zero(coords), EvenPoly.const(coords, 1)])
    assert is_exact_one_form(data, dual, degree=4) is None
    outside = one_form(coords, [g["x"], EvenPoly.zero(coords)])
    assert is_exact_one_form(data, outside, degree=0) is None
