"""Exact integer linear algebra on small matrices.

All arithmetic is carried out on Python integers and checked against the
signed 64-bit range; a result that would not fit raises ``OverflowError``
instead of wrapping around.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moveset import MoveSet, _check_int64, as_int_matrix

__all__ = [
    "rank",
    "hermite_normal_form",
    "kernel_lattice_basis",
    "lattice_member",
    "lattice_coefficients",
    "Membership",
    "unimodular_det",
]


def _rows(M) -> list[list[int]]:
    M = as_int_matrix(M)
    return [[int(v) for v in row] for row in M]


def _checked_row(row: list[int]) -> list[int]:
    for v in row:
        _check_int64(v)
    return row


def rank(A) -> int:
    """Rank of `A` over the rationals, by fraction-free (Bareiss) elimination."""
    M = _rows(A)
    m, n = len(M), len(M[0])
    r = 0
    prev = 1
    for col in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        p = M[r][col]
        for i in range(r + 1, m):
            a = M[i][col]
            # exact division is guaranteed by Sylvester's identity
            M[i] = _checked_row([(p * M[i][j] - a * M[r][j]) // prev for j in range(n)])
        prev = p
        r += 1
    return r


def hermite_normal_form(M) -> tuple[np.ndarray, np.ndarray]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U @ M == H`` and ``|det U| == 1``. Pivots of
    ``H`` are positive, entries above a pivot lie in ``[0, pivot)``, and zero
    rows come last. Columns are processed left to right and the row with the
    smallest nonzero entry (lowest index on ties) is used as the Euclidean
    pivot, so the output, including ``U``, is deterministic.

    Examples
    --------
    >>> H, U = hermite_normal_form([[2, 4], [1, 3]])
    >>> H.tolist()
    [[1, 1], [0, 2]]
    """
    H = _rows(M)
    m, n = len(H), len(H[0])
    U = [[int(i == j) for j in range(m)] for i in range(m)]

    def sub(i, k, q):
        # row_i -= q * row_k, in both H and U
        H[i] = _checked_row([a - q * b for a, b in zip(H[i], H[k])])
        U[i] = _checked_row([a - q * b for a, b in zip(U[i], U[k])])

    r = 0
    for col in range(n):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if H[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: (abs(H[i][col]), i))
            H[r], H[piv] = H[piv], H[r]
            U[r], U[piv] = U[piv], U[r]
            clean = True
            for i in range(r + 1, m):
                if H[i][col]:
                    sub(i, r, H[i][col] // H[r][col])
                    clean = clean and H[i][col] == 0
            if clean:
                break
        if H[r][col] == 0:
            continue
        if H[r][col] < 0:
            H[r] = [-v for v in H[r]]
            U[r] = [-v for v in U[r]]
        p = H[r][col]
        for i in range(r):
            q = H[i][col] // p
            if q:
                sub(i, r, q)
        r += 1
    return np.array(H, dtype=np.int64), np.array(U, dtype=np.int64).reshape(m, m)


def unimodular_det(U) -> int:
    """Exact determinant of a square integer matrix (used to certify unimodularity)."""
    M = _rows(U)
    n = len(M)
    if n != len(M[0]):
        raise ValueError("matrix must be square")
    sign, prev = 1, 1
    for k in range(n):
        piv = next((i for i in range(k, n) if M[i][k] != 0), None)
        if piv is None:
            return 0
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def kernel_lattice_basis(A) -> MoveSet:
    """Basis of the integer kernel ``{v in Z^d : A v = 0}``.

    The Hermite normal form of ``A.T`` is computed; the rows of the
    unimodular multiplier that pair with zero rows of ``H`` form the basis.
    There are exactly ``cols(A) - rank(A)`` of them.
    """
    A = as_int_matrix(A)
    H, U = hermite_normal_form(A.T)
    r = int(np.count_nonzero(np.any(H != 0, axis=1)))
    return MoveSet.from_vectors(A, U[r:], "lattice")


@dataclass(frozen=True)
class Membership:
    """Result of :func:`lattice_member`; `coefficients` is None for non-members."""

    member: bool
    coefficients: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.member


def lattice_coefficients(basis, V) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised membership test for many vectors at once.

    Returns ``(member, coeffs)`` where ``member[i]`` says whether row ``V[i]``
    is an integer combination of the basis rows and ``coeffs[i]`` holds the
    (unique) coefficients when it is.
    """
    B = basis.moves if isinstance(basis, MoveSet) else as_int_matrix(basis)
    V = np.atleast_2d(np.asarray(V, dtype=np.int64))
    nv = V.shape[0]
    if B.shape[0] == 0:
        member = ~np.any(V != 0, axis=1)
        return member, np.zeros((nv, 0), dtype=np.int64)
    if V.shape[1] != B.shape[1]:
        raise ValueError("vector length does not match the basis")
    H, U = hermite_normal_form(B)
    nonzero = np.any(H != 0, axis=1)
    if not nonzero.all():
        raise ValueError("basis vectors are linearly dependent")
    fast = _solve_int64(H, U, V)
    if fast is not None:
        return fast
    # forward substitution against the echelon rows of H, exact in Python ints
    R = V.astype(object)
    D = np.zeros((nv, H.shape[0]), dtype=object)
    ok = np.ones(nv, dtype=bool)
    for k, hrow in enumerate(H):
        p = int(np.flatnonzero(hrow)[0])
        piv = int(hrow[p])
        col = R[:, p]
        divisible = np.array([int(c) % piv == 0 for c in col], dtype=bool)
        ok &= divisible
        q = np.array([int(c) // piv for c in col], dtype=object)
        D[:, k] = q
        R = R - q[:, None] * hrow.astype(object)[None, :]
    ok &= ~np.any(R != 0, axis=1)
    C = D.dot(U.astype(object))
    coeffs = np.zeros(C.shape, dtype=np.int64)
    for i in np.flatnonzero(ok):
        coeffs[i] = [_check_int64(int(c)) for c in C[i]]
    return ok, coeffs


_SAFE = 2**30


def _solve_int64(H, U, V):
    # Same substitution in int64; gives up (returns None) once any magnitude
    # gets large enough that a product could overflow.
    if np.abs(V).max(initial=0) >= _SAFE or np.abs(H).max() >= _SAFE or np.abs(U).max() >= _SAFE:
        return None
    R = V.copy()
    D = np.zeros((V.shape[0], H.shape[0]), dtype=np.int64)
    ok = np.ones(V.shape[0], dtype=bool)
    for k, hrow in enumerate(H):
        p = int(np.flatnonzero(hrow)[0])
        piv = int(hrow[p])
        col = R[:, p]
        ok &= col % piv == 0
        q = col // piv
        D[:, k] = q
        R = R - q[:, None] * hrow[None, :]
        if np.abs(R).max(initial=0) >= _SAFE:
            return None
    ok &= ~np.any(R != 0, axis=1)
    if np.abs(D).max(initial=0) * np.abs(U).max() * U.shape[0] >= 2**62:
        return None
    C = D @ U
    return ok, np.where(ok[:, None], C, 0)


def lattice_member(basis, v) -> Membership:
    """Decide whether `v` is an integer combination of the basis vectors.

    Returns a :class:`Membership` carrying the unique coefficient vector
    ``c`` with ``sum(c[i] * basis[i]) == v`` when it exists. Vectors outside
    the rational span and vectors that would need fractional coefficients
    are both reported as non-members.
    """
    v = np.asarray(v, dtype=np.int64).reshape(1, -1)
    ok, coeffs = lattice_coefficients(basis, v)
    if ok[0]:
        return Membership(True, coeffs[0])
    return Membership(False)


def kernel_contains(A, v) -> bool:
    """True if ``A @ v == 0`` exactly."""
    return not np.any(as_int_matrix(A) @ np.asarray(v, dtype=np.int64))
