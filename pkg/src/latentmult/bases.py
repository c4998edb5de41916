"""Constructing and validating move sets.

Three routes produce moves: the constructive basis for 0/1 matrices that
contain every unit column (which is a Markov basis), lattice bases obtained
by solving ``A x = 0`` for a chosen set of pivot columns, and move files
imported from external tools such as 4ti2. For models outside the 0/1 class
a move set that connects one particular fiber can be read off the fiber
itself (:func:`subbasis_from_fiber`).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import fourtitwo, intlattice
from .moveset import MoveSet, as_int_matrix, canonical_sign


@dataclass(frozen=True)
class SimpleCorruptionCheck:
    """Outcome of :func:`check_simple_corruption`.

    When `ok`, ``sigma[i]`` is the column equal to the unit vector ``e_i``.
    Otherwise `reason` says what failed and `witness` points at it: a
    ``(row, col)`` entry outside {0, 1}, or the row whose unit column is
    missing.
    """

    ok: bool
    sigma: tuple = ()
    reason: str = ""
    witness: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


def check_simple_corruption(A) -> SimpleCorruptionCheck:
    """Check that `A` is 0/1 and contains every column of the identity.

    For each row the first (leftmost) matching unit column is reported.
    Under the standard mta column order this is also the leading nonzero
    entry of the row.
    """
    A = as_int_matrix(A)
    bad = np.argwhere((A != 0) & (A != 1))
    if bad.size:
        i, j = (int(t) for t in bad[0])
        return SimpleCorruptionCheck(False, reason=f"entry A[{i},{j}] = {int(A[i, j])} is not 0 or 1", witness=(i, j))
    m = A.shape[0]
    unit = (A.sum(axis=0) == 1)
    sigma = []
    for i in range(m):
        cols = np.flatnonzero(unit & (A[i] == 1))
        if cols.size == 0:
            return SimpleCorruptionCheck(False, reason=f"no column equals the unit vector e_{i}", witness=(i,))
        sigma.append(int(cols[0]))
    return SimpleCorruptionCheck(True, tuple(sigma))


def leading_entry_pivots(A) -> tuple[int, ...]:
    """Column of the leftmost nonzero entry in each row of `A`."""
    A = as_int_matrix(A)
    out = []
    for i, row in enumerate(A):
        nz = np.flatnonzero(row)
        if nz.size == 0:
            raise ValueError(f"row {i} of A is zero")
        out.append(int(nz[0]))
    return tuple(out)


def echelon_pivots(A) -> tuple[int, ...]:
    """Leftmost set of linearly independent columns (pivots of the row echelon form)."""
    A = as_int_matrix(A)
    chosen: list[int] = []
    for j in range(A.shape[1]):
        if intlattice.rank(A[:, chosen + [j]]) > len(chosen):
            chosen.append(j)
    return tuple(chosen)


def theorem1_basis(A, sigma=None) -> MoveSet:
    """Lattice basis that is also a Markov basis for simple-corruption matrices.

    For every column ``k`` not used as a pivot the move is::

        v_k = e_k - sum(e_sigma(i) for rows i with A[i, k] == 1)

    Moves are emitted in increasing ``k``. `sigma` defaults to the pivots
    found by :func:`check_simple_corruption`; an override must still point
    each row at a unit column.
    """
    A = as_int_matrix(A)
    check = check_simple_corruption(A)
    if not check:
        raise ValueError(f"not a simple-corruption matrix: {check.reason}")
    m, d = A.shape
    if sigma is None:
        sigma = check.sigma
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != m:
        raise ValueError(f"sigma needs one column per row ({m})")
    for i, s in enumerate(sigma):
        e = np.zeros(m, dtype=np.int64)
        e[i] = 1
        if not np.array_equal(A[:, s], e):
            raise ValueError(f"column {s} is not the unit vector e_{i}")
    pivots = set(sigma)
    moves = []
    for k in range(d):
        if k in pivots:
            continue
        v = np.zeros(d, dtype=np.int64)
        v[k] = 1
        for i in np.flatnonzero(A[:, k]):
            v[sigma[i]] -= 1
        moves.append(v)
    return MoveSet.from_vectors(A, moves, "theorem1")


def _solve_exact(M: list[list[Fraction]], rhs: list[list[Fraction]]) -> list[list[Fraction]]:
    # Gauss-Jordan on a square rational system with several right-hand sides
    n = len(M)
    aug = [M[i][:] + [r[i] for r in rhs] for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise ValueError("pivot columns are linearly dependent (singular submatrix)")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [a / p for a in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [[aug[i][n + j] for i in range(n)] for j in range(len(rhs))]


def pivotal_lattice_basis(A, pivots) -> MoveSet:
    """Kernel basis from solving ``A x = 0`` for the pivot columns.

    There is one move per free column ``k``: the kernel vector with
    ``x_k = 1`` and every other free coordinate 0. The pivot columns must
    form an invertible square submatrix and every solution must be
    integral.
    """
    A = as_int_matrix(A)
    m, d = A.shape
    pivots = [int(p) for p in pivots]
    if len(pivots) != m or len(set(pivots)) != m:
        raise ValueError(f"need {m} distinct pivot columns, got {pivots}")
    if any(not 0 <= p < d for p in pivots):
        raise ValueError("pivot column out of range")
    P = [[Fraction(int(A[i, p])) for p in pivots] for i in range(m)]
    free = [k for k in range(d) if k not in set(pivots)]
    rhs = [[Fraction(-int(A[i, k])) for i in range(m)] for k in free]
    sols = _solve_exact(P, rhs) if free else []
    moves = []
    for k, z in zip(free, sols):
        if any(q.denominator != 1 for q in z):
            raise ValueError(f"free column {k} gives a non-integer kernel vector")
        v = np.zeros(d, dtype=np.int64)
        v[k] = 1
        for p, q in zip(pivots, z):
            v[p] = int(q)
        moves.append(v)
    return MoveSet.from_vectors(A, moves, "lattice")


def import_moveset(path, A) -> MoveSet:
    """Read moves (one per row, 4ti2 format) and check each lies in ``ker A``."""
    A = as_int_matrix(A)
    M = fourtitwo.read_matrix(path)
    if M.shape[1] != A.shape[1]:
        raise ValueError(f"{os.fspath(path)}: moves have {M.shape[1]} columns, A has {A.shape[1]}")
    try:
        return MoveSet.from_vectors(A, M, "imported")
    except ValueError as exc:
        raise ValueError(f"{os.fspath(path)}: {exc}") from None


def export_moveset(path, moves: MoveSet) -> None:
    fourtitwo.write_matrix(path, moves.moves)


def subbasis_from_fiber(fiber) -> MoveSet:
    """Moves that connect one explicitly enumerated fiber.

    A minimum spanning tree of the fiber under L1 distance (Prim's
    algorithm, ties to the lowest index) is built and each tree edge
    contributes the difference of its endpoints. A single move along an edge
    lands on a fiber element, so every partial sum stays nonnegative. At
    most ``len(fiber) - 1`` moves result; duplicates up to sign are dropped.
    """
    X = fiber.elements
    if X is None or len(X) == 0:
        raise ValueError("subbasis_from_fiber needs a nonempty enumerated fiber")
    n = len(X)
    moves: list[np.ndarray] = []
    seen: set = set()
    if n > 1:
        in_tree = np.zeros(n, dtype=bool)
        in_tree[0] = True
        best = np.abs(X - X[0]).sum(axis=1)
        parent = np.zeros(n, dtype=np.int64)
        for _ in range(n - 1):
            cand = np.where(in_tree, np.iinfo(np.int64).max, best)
            j = int(np.argmin(cand))
            in_tree[j] = True
            v = canonical_sign(X[j] - X[parent[j]])
            key = tuple(v.tolist())
            if key not in seen:
                seen.add(key)
                moves.append(v)
            dist = np.abs(X - X[j]).sum(axis=1)
            closer = (~in_tree) & (dist < best)
            best = np.where(closer, dist, best)
            parent = np.where(closer, j, parent)
    return MoveSet.from_vectors(fiber.A, moves, "subbasis")
