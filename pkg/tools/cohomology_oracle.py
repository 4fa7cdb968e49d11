#!/usr/bin/env python3
"""Brute-force rank computations for the truncated cohomology windows.

This script is deliberately independent of the library: polynomials are
plain exponent dictionaries, the frame differential and the extended
charge's bracket are written out termwise from scratch, and every rank
comes from a local Gaussian elimination.  Agreement with the library on
these windows is part of the test suite.

Run from the repository root:

    python3 tools/cohomology_oracle.py

The output is one JSON document with a block per fixture and window.
The first-order windows use source slack 2; the ghost-number-0 windows
use sources one degree above in both position and momentum degree.
"""

from __future__ import annotations

import json
from fractions import Fraction
from itertools import combinations

# polynomials: exponent tuple -> Fraction


def p_zero() -> dict:
    return {}


def p_add(f: dict, g: dict) -> dict:
    out = dict(f)
    for e, c in g.items():
        out[e] = out.get(e, Fraction(0)) + c
        if out[e] == 0:
            del out[e]
    return out


def p_scale(f: dict, s: Fraction) -> dict:
    return {e: c * s for e, c in f.items()} if s else {}

def p_mul(f: dict, g: dict) -> dict:
    out: dict = {}
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            e = tuple(u + v for u, v in zip(e1, e2))
            out[e] = out.get(e, Fraction(0)) + c1 * c2
            if out[e] == 0:
                del out[e]
    return out


def p_diff(f: dict, k: int) -> dict:
    out = {}
    for e, c in f.items():
        if e[k]:
            dropped = list(e)
            dropped[k] -= 1
            out[tuple(dropped)] = c * e[k]
    return out


def monomials(n: int, max_degree: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def walk(position: int, left: int, prefix: list[int]) -> None:
        if position == n:
            out.append(tuple(prefix))
            return
        for k in range(left + 1):
            walk(position + 1, left - k, prefix + [k])

    for degree in range(max_degree + 1):
        start = len(out)
        walk(0, degree, [])
        out[start:] = [e for e in out[start:] if sum(e) == degree]
    return out


# dense linear algebra over the rationals


def matrix_rank(rows: list[list[Fraction]]) -> int:
    work = [list(row) for row in rows if any(row)]
    pivots = 0
    ncols = len(work[0]) if work else 0
    for col in range(ncols):
        pivot = next(
            (k for k in range(pivots, len(work)) if work[k][col] != 0), None
        )
        if pivot is None:
            continue
        work[pivots], work[pivot] = work[pivot], work[pivots]
        lead = work[pivots][col]
        work[pivots] = [v / lead for v in work[pivots]]
        for k in range(len(work)):
            if k != pivots and work[k][col] != 0:
                factor = work[k][col]
                work[k] = [
                    v - factor * w for v, w in zip(work[k], work[pivots])
                ]
        pivots += 1
    return pivots


def matrix_nullity(rows: list[list[Fraction]], ncols: int) -> int:
    return ncols - matrix_rank(rows)


def nullspace_basis(
    rows: list[list[Fraction]], ncols: int
) -> list[list[Fraction]]:
    work = [list(row) for row in rows if any(row)]
    if not work:
        basis = []
        for k in range(ncols):
            vector = [Fraction(0)] * ncols
            vector[k] = Fraction(1)
            basis.append(vector)
        return basis
    pivots: list[int] = []
    row = 0
    for col in range(ncols):
        pivot = next((k for k in range(row, len(work)) if work[k][col] != 0), None)
        if pivot is None:
            continue
        work[row], work[pivot] = work[pivot], work[row]
        lead = work[row][col]
        work[row] = [v / lead for v in work[row]]
        for k in range(len(work)):
            if k != row and work[k][col] != 0:
                factor = work[k][col]
                work[k] = [v - factor * w for v, w in zip(work[k], work[row])]
        pivots.append(col)
        row += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for c in free:
        vector = [Fraction(0)] * ncols
        vector[c] = Fraction(1)
        for k, pc in enumerate(pivots):
            vector[pc] = -work[k][c]
        basis.append(vector)
    return basis


# fixtures, written out numerically


def eps(a: int, b: int, c: int) -> int:
    if {a, b, c} != {0, 1, 2}:
        return 0
    seq = (a, b, c)
    flips = sum(
        1 for u in range(3) for v in range(u + 1, 3) if seq[u] > seq[v]
    )
    return -1 if flips % 2 else 1


def unit(n: int, k: int) -> tuple[int, ...]:
    e = [0] * n
    e[k] = 1
    return tuple(e)


def const_poly(n: int, value) -> dict:
    value = Fraction(value)
    return {(0,) * n: value} if value else {}


def fixtures() -> dict:
    x = lambda n, k: {unit(n, k): Fraction(1)}
    zero3 = [[p_zero()] * 3 for _ in range(3)]
    return {
        "abelian_r1": {
            "n": 1,
            "r": 1,
            "rho": [[const_poly(1, 1)]],
            "C": [[[p_zero()]]],
        },
        "abelian_r2": {
            "n": 2,
            "r": 2,
            "rho": [
                [const_poly(2, 1), p_zero()],
                [p_zero(), const_poly(2, 1)],
            ],
            "C": [[[p_zero()] * 2 for _ in range(2)] for _ in range(2)],
        },
        "so3": {
            "n": 3,
            "r": 3,
            "rho": [
                [
                    {
                        unit(3, j): Fraction(eps(a, i, j))
                        for j in range(3)
                        if eps(a, i, j)
                    }
                    for i in range(3)
                ]
                for a in range(3)
            ],
            "C": [
                [
                    [const_poly(3, eps(a, b, c)) for b in range(3)]
                    for a in range(3)
                ]
                for c in range(3)
            ],
        },
        "rank2_line": {
            "n": 1,
            "r": 2,
            "rho": [[const_poly(1, 1)], [x(1, 0)]],
            "C": [
                [[p_zero(), const_poly(1, 1)], [const_poly(1, -1), p_zero()]],
                [[p_zero()] * 2 for _ in range(2)],
            ],
        },
    }


# first cohomology of the frame differential on a degree window


def anchor_apply(fix: dict, a: int, f: dict) -> dict:
    out = p_zero()
    for i in range(fix["n"]):
        out = p_add(out, p_mul(fix["rho"][a][i], p_diff(f, i)))
    return out


def d_one(fix: dict, alpha: list[dict]) -> dict:
    image = {}
    for a in range(fix["r"]):
        for b in range(a + 1, fix["r"]):
            entry = p_add(
                anchor_apply(fix, a, alpha[b]),
                p_scale(anchor_apply(fix, b, alpha[a]), Fraction(-1)),
            )
            for c in range(fix["r"]):
                entry = p_add(
                    entry, p_scale(p_mul(fix["C"][c][a][b], alpha[c]), Fraction(-1))
                )
            image[(a, b)] = entry
    return image


def h1_window(fix: dict, trunc: int, slack: int = 2) -> dict:
    n, r = fix["n"], fix["r"]
    window = monomials(n, trunc)

    columns = []
    row_index: dict = {}
    for a in range(r):
        for exponent in window:
            alpha = [p_zero() for _ in range(r)]
            alpha[a] = {exponent: Fraction(1)}
            image = d_one(fix, alpha)
            entries = {}
            for key, poly in image.items():
                for e, c in poly.items():
                    slot = row_index.setdefault((key, e), len(row_index))
                    entries[slot] = c
            columns.append(entries)
    rows = [[Fraction(0)] * len(columns) for _ in range(len(row_index))]
    for col, entries in enumerate(columns):
        for slot, c in entries.items():
            rows[slot][col] = c
    closed = matrix_nullity(rows, len(columns))

    sources = monomials(n, trunc + slack)
    in_rows: dict = {}
    out_rows: dict = {}
    images = []
    for exponent in sources:
        image = [anchor_apply(fix, a, {exponent: Fraction(1)}) for a in range(r)]
        images.append(image)
        for a in range(r):
            for e, _ in image[a].items():
                bucket = in_rows if sum(e) <= trunc else out_rows
                bucket.setdefault((a, e), len(bucket))
    out_matrix = [[Fraction(0)] * len(sources) for _ in range(len(out_rows))]
    for col, image in enumerate(images):
        for a in range(r):
            for e, c in image[a].items():
                if sum(e) > trunc:
                    out_matrix[out_rows[(a, e)]][col] = c
    combos = nullspace_basis(out_matrix, len(sources))
    window_images = []
    for combo in combos:
        vector = [Fraction(0)] * len(in_rows)
        for col, weight in enumerate(combo):
            if weight == 0:
                continue
            for a in range(r):
                for e, c in images[col][a].items():
                    if sum(e) <= trunc:
                        vector[in_rows[(a, e)]] += weight * c
        window_images.append(vector)
    exact = matrix_rank(window_images) if window_images else 0
    return {"trunc": trunc, "closed": closed, "exact": exact, "h": closed - exact}


# the extended charge and its bracket, rebuilt from scratch
#
# elements: (word, exponent) -> Fraction, where the word lists odd letters
# ascending (0..r-1 the ghosts, r..2r-1 the antighosts) and the exponent
# runs over positions then momenta


def merge_words(w1: tuple, w2: tuple) -> tuple:
    if set(w1) & set(w2):
        return None, 0
    crossings = sum(1 for u in w1 for v in w2 if u > v)
    return tuple(sorted(w1 + w2)), (-1 if crossings % 2 else 1)


def g_add(A: dict, B: dict) -> dict:
    out = dict(A)
    for key, c in B.items():
        out[key] = out.get(key, Fraction(0)) + c
        if out[key] == 0:
            del out[key]
    return out


def g_mul(A: dict, B: dict) -> dict:
    out: dict = {}
    for (w1, e1), c1 in A.items():
        for (w2, e2), c2 in B.items():
            word, sign = merge_words(w1, w2)
            if word is None:
                continue
            e = tuple(u + v for u, v in zip(e1, e2))
            key = (word, e)
            out[key] = out.get(key, Fraction(0)) + sign * c1 * c2
            if out[key] == 0:
                del out[key]
    return out


def g_even_deriv(A: dict, k: int) -> dict:
    out = {}
    for (word, e), c in A.items():
        if e[k]:
            dropped = list(e)
            dropped[k] -= 1
            out[(word, tuple(dropped))] = c * e[k]
    return out


def g_odd_deriv(A: dict, letter: int) -> dict:
    out: dict = {}
    for (word, e), c in A.items():
        if letter not in word:
            continue
        position = word.index(letter)
        sign = -1 if position % 2 else 1
        shorter = word[:position] + word[position + 1 :]
        key = (shorter, e)
        out[key] = out.get(key, Fraction(0)) + sign * c
        if out[key] == 0:
            del out[key]
    return out


def build_charge(fix: dict) -> dict:
    n, r = fix["n"], fix["r"]
    S: dict = {}
    for a in range(r):
        for i in range(n):
            for e, c in fix["rho"][a][i].items():
                key = ((a,), tuple(e) + unit(n, i))
                S[key] = S.get(key, Fraction(0)) + c
    for c_idx in range(r):
        for a in range(r):
            for b in range(r):
                if a == b:
                    continue
                for e, v in fix["C"][c_idx][a][b].items():
                    if a < b:
                        word = (a, b, r + c_idx)
                        coeff = -v / 2
                    else:
                        word = (b, a, r + c_idx)
                        coeff = v / 2
                    key = (word, tuple(e) + (0,) * n)
                    S[key] = S.get(key, Fraction(0)) + coeff
    return {k: v for k, v in S.items() if v}


def charge_bracket(fix: dict, S: dict, G: dict) -> dict:
    # graded bracket with an odd first argument and no twist
    n, r = fix["n"], fix["r"]
    out: dict = {}
    for i in range(n):
        out = g_add(out, g_mul(g_even_deriv(S, n + i), g_even_deriv(G, i)))
        out = g_add(
            out,
            {
                key: -c
                for key, c in g_mul(
                    g_even_deriv(S, i), g_even_deriv(G, n + i)
                ).items()
            },
        )
    for a in range(r):
        out = g_add(out, g_mul(g_odd_deriv(S, a), g_odd_deriv(G, r + a)))
        out = g_add(out, g_mul(g_odd_deriv(S, r + a), g_odd_deriv(G, a)))
    return out


def balanced_words(r: int, ghost: int) -> list[tuple]:
    words = []
    for k in range(r + 1):
        k_pi = k - ghost
        if not 0 <= k_pi <= r:
            continue
        for xs in combinations(range(r), k):
            for ps in combinations(range(r), k_pi):
                words.append(tuple(xs) + tuple(r + c for c in ps))
    return words


def h0_window(fix: dict, x_degree: int, p_degree: int) -> dict:
    n, r = fix["n"], fix["r"]
    S = build_charge(fix)

    def elements(xd: int, pd: int, words: list[tuple]) -> list:
        return [
            (word, xe + pe)
            for xe in monomials(n, xd)
            for pe in monomials(n, pd)
            for word in words
        ]

    def in_window(e: tuple) -> bool:
        return sum(e[:n]) <= x_degree and sum(e[n:]) <= p_degree

    window = elements(x_degree, p_degree, balanced_words(r, 0))
    row_index: dict = {}
    columns = []
    for key in window:
        image = charge_bracket(fix, S, {key: Fraction(1)})
        entries = {}
        for ikey, c in image.items():
            slot = row_index.setdefault(ikey, len(row_index))
            entries[slot] = c
        columns.append(entries)
    rows = [[Fraction(0)] * len(columns) for _ in range(len(row_index))]
    for col, entries in enumerate(columns):
        for slot, c in entries.items():
            rows[slot][col] = c
    closed = matrix_nullity(rows, len(columns))

    sources = elements(x_degree + 1, p_degree + 1, balanced_words(r, -1))
    images = [charge_bracket(fix, S, {key: Fraction(1)}) for key in sources]
    in_rows: dict = {}
    out_rows: dict = {}
    for image in images:
        for (word, e), _ in image.items():
            bucket = in_rows if in_window(e) else out_rows
            bucket.setdefault((word, e), len(bucket))
    out_matrix = [[Fraction(0)] * len(sources) for _ in range(len(out_rows))]
    for col, image in enumerate(images):
        for (word, e), c in image.items():
            if not in_window(e):
                out_matrix[out_rows[(word, e)]][col] = c
    combos = nullspace_basis(out_matrix, len(sources))
    window_images = []
    for combo in combos:
        vector = [Fraction(0)] * len(in_rows)
        for col, weight in enumerate(combo):
            if weight == 0:
                continue
            for (word, e), c in images[col].items():
                if in_window(e):
                    vector[in_rows[(word, e)]] += weight * c
        window_images.append(vector)
    exact = matrix_rank(window_images) if window_images else 0
    return {
        "x_degree": x_degree,
        "p_degree": p_degree,
        "closed": closed,
        "exact": exact,
        "h": closed - exact,
    }


def main() -> None:
    fix = fixtures()
    document = {
        "h1": {
            "abelian_r1": h1_window(fix["abelian_r1"], 2),
            "abelian_r2": h1_window(fix["abelian_r2"], 2),
            "rank2_line": h1_window(fix["rank2_line"], 2),
            "so3": h1_window(fix["so3"], 2),
            "so3_constant_sector": h1_window(fix["so3"], 0),
        },
        "bfv_h0": {
            "abelian_r1": h0_window(fix["abelian_r1"], 2, 1),
            "abelian_r2": h0_window(fix["abelian_r2"], 1, 1),
            "so3": h0_window(fix["so3"], 0, 0),
        },
    }
    print(json.dumps(document, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
