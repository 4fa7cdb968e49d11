"""Dense exact linear algebra over the rationals.

Small Gauss-Jordan routines on list-of-list `Fraction` matrices.  With exact
arithmetic there is no pivoting strategy to worry about: the first nonzero
entry in a column serves.  The matrices here are coefficient spaces of
truncated polynomial windows, small enough that no sparsity is attempted.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Rat = Fraction
Vec = list[Rat]
Mat = list[list[Rat]]


def copy_matrix(matrix: Sequence[Sequence[Rat | int]]) -> Mat:
    return [[Fraction(entry) for entry in row] for row in matrix]


def identity(n: int) -> Mat:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def transpose(matrix: Sequence[Sequence[Rat]]) -> Mat:
    return [list(column) for column in zip(*matrix)] if matrix else []


def column_stack(vectors: Sequence[Vec], nrows: int | None = None) -> Mat:
    """Matrix whose columns are the given vectors."""
    if not vectors:
        if nrows is None:
            raise ValueError("nrows is required when stacking no vectors")
        return [[] for _ in range(nrows)]
    return [[vector[i] for vector in vectors] for i in range(len(vectors[0]))]


def mat_vec(matrix: Sequence[Sequence[Rat | int]], vector: Sequence[Rat | int]) -> Vec:
    return [
        sum((Fraction(a) * Fraction(b) for a, b in zip(row, vector, strict=True)), Fraction(0))
        for row in matrix
    ]


def mat_mul(a: Sequence[Sequence[Rat | int]], b: Sequence[Sequence[Rat | int]]) -> Mat:
    bt = transpose(copy_matrix(b))
    return [
        [
            sum((Fraction(x) * y for x, y in zip(row, col, strict=True)), Fraction(0))
            for col in bt
        ]
        for row in a
    ]


def rref(matrix: Sequence[Sequence[Rat | int]]) -> tuple[Mat, list[int]]:
    """Reduced row echelon form and the list of pivot column indices."""
    m = copy_matrix(matrix)
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots: list[int] = []
    row = 0
    for col in range(cols):
        pivot_row = next((r for r in range(row, rows) if m[r][col] != 0), None)
        if pivot_row is None:
            continue
        m[row], m[pivot_row] = m[pivot_row], m[row]
        scale = m[row][col]
        m[row] = [entry / scale for entry in m[row]]
        for r in range(rows):
            if r != row and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == rows:
            break
    return m, pivots


def rank(matrix: Sequence[Sequence[Rat | int]]) -> int:
    return len(rref(matrix)[1])


def nullspace(
    matrix: Sequence[Sequence[Rat | int]], ncols: int | None = None
) -> list[Vec]:
    """Basis of the right kernel, one unit free variable per basis vector."""
    rows = len(matrix)
    if ncols is None:
        if rows == 0:
            raise ValueError("ncols is required for a matrix with no rows")
        ncols = len(matrix[0])
    if rows == 0:
        return [
            [Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)
        ]
    reduced, pivots = rref(matrix)
    pivot_set = set(pivots)
    basis: list[Vec] = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vector = [Fraction(0)] * ncols
        vector[free] = Fraction(1)
        for row_index, pivot_col in enumerate(pivots):
            vector[pivot_col] = -reduced[row_index][free]
        basis.append(vector)
    return basis


def solve(
    matrix: Sequence[Sequence[Rat | int]], rhs: Sequence[Rat | int]
) -> Vec | None:
    """One exact solution of `matrix x = rhs`, or None when inconsistent.

    Free variables are set to zero, so a consistent underdetermined system
    yields the particular solution supported on the pivot columns.
    """
    rows = len(matrix)
    ncols = len(matrix[0]) if rows else 0
    if rows == 0:
        return [Fraction(0)] * ncols
    augmented = [
        [Fraction(entry) for entry in row] + [Fraction(value)]
        for row, value in zip(matrix, rhs, strict=True)
    ]
    reduced, pivots = rref(augmented)
    if ncols in pivots:
        return None  # some row reduced to 0 = 1
    solution = [Fraction(0)] * ncols
    for row_index, pivot_col in enumerate(pivots):
        solution[pivot_col] = reduced[row_index][ncols]
    return solution
