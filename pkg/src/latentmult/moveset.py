"""Move sets: collections of integer kernel vectors tied to one configuration matrix."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

PROVENANCES = ("lattice", "theorem1", "imported", "subbasis")


def as_int_matrix(a) -> np.ndarray:
    """Return `a` as a 2-D int64 array, rejecting non-integral input."""
    arr = np.asarray(a)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D integer matrix, got shape {arr.shape}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or not np.all(arr == np.round(arr)):
            raise ValueError("matrix entries must be integers")
    elif arr.dtype.kind == "O":
        for v in arr.flat:
            if int(v) != v:
                raise ValueError("matrix entries must be integers")
            _check_int64(int(v))
    elif arr.dtype.kind not in "iub":
        raise ValueError(f"unsupported matrix dtype {arr.dtype}")
    return arr.astype(np.int64)


_INT64_MAX = np.iinfo(np.int64).max


def _check_int64(v: int) -> int:
    if v > _INT64_MAX or v < -_INT64_MAX:
        raise OverflowError(f"integer {v} does not fit in 64 bits")
    return v


def fingerprint(A) -> str:
    """Digest identifying a configuration matrix (shape and entries)."""
    A = as_int_matrix(A)
    h = hashlib.sha256()
    h.update(f"{A.shape[0]}x{A.shape[1]}:".encode())
    h.update(np.ascontiguousarray(A, dtype="<i8").tobytes())
    return h.hexdigest()[:16]


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip `v` so that its first nonzero entry is positive."""
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


@dataclass(frozen=True)
class MoveSet:
    """An ordered set of moves ``v`` with ``A @ v == 0``.

    Parameters
    ----------
    moves : ndarray of shape (m, d)
        One move per row.
    provenance : str
        One of ``lattice``, ``theorem1``, ``imported`` or ``subbasis``.
    matrix_fingerprint : str
        :func:`fingerprint` of the matrix the moves belong to.
    """

    moves: np.ndarray
    provenance: str
    matrix_fingerprint: str
    labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        moves = np.asarray(self.moves, dtype=np.int64)
        if moves.ndim != 2:
            raise ValueError("moves must be a 2-D array")
        moves = moves.copy()
        moves.setflags(write=False)
        object.__setattr__(self, "moves", moves)

    @classmethod
    def from_vectors(cls, A, vectors, provenance: str, labels=()) -> "MoveSet":
        """Build a validated MoveSet for `A`.

        Every vector must be nonzero, lie in the integer kernel of `A`, and
        be distinct from the others up to sign.
        """
        A = as_int_matrix(A)
        d = A.shape[1]
        rows = [np.asarray(v, dtype=np.int64).reshape(-1) for v in vectors]
        moves = np.array(rows, dtype=np.int64).reshape(len(rows), d)
        validate_moves(A, moves)
        return cls(moves, provenance, fingerprint(A), tuple(labels))

    def __len__(self) -> int:
        return self.moves.shape[0]

    def __iter__(self):
        return iter(self.moves)

    def __getitem__(self, i):
        return self.moves[i]

    @property
    def dim(self) -> int:
        return self.moves.shape[1]

    def check_matrix(self, A) -> None:
        if fingerprint(A) != self.matrix_fingerprint:
            raise ValueError("move set does not belong to this configuration matrix")

    def normalized(self) -> set[tuple[int, ...]]:
        """Moves as a set of tuples with first nonzero entry positive."""
        return {tuple(int(t) for t in canonical_sign(v)) for v in self.moves}

    def same_moves(self, other) -> bool:
        """True if both sets agree up to row order and per-row sign."""
        other_rows = other.moves if isinstance(other, MoveSet) else np.asarray(other)
        theirs = {tuple(int(t) for t in canonical_sign(np.asarray(v))) for v in other_rows}
        return len(self) == len(other_rows) and self.normalized() == theirs

    def sparse(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """(indices, values) pairs of the nonzero entries of each move."""
        out = []
        for v in self.moves:
            idx = np.flatnonzero(v)
            out.append((tuple(int(i) for i in idx), tuple(int(v[i]) for i in idx)))
        return out


def validate_moves(A: np.ndarray, moves: np.ndarray) -> None:
    """Raise ValueError naming the first row that is not a valid move."""
    if moves.shape[0] == 0:
        return
    if moves.shape[1] != A.shape[1]:
        raise ValueError(f"moves have length {moves.shape[1]}, matrix has {A.shape[1]} columns")
    prod = A @ moves.T
    seen = {}
    for i, v in enumerate(moves):
        if not np.any(v):
            raise ValueError(f"move {i + 1} is the zero vector")
        if np.any(prod[:, i]):
            raise ValueError(f"move {i + 1} is not in the kernel of A (A v = {prod[:, i].tolist()})")
        key = tuple(canonical_sign(v).tolist())
        if key in seen:
            raise ValueError(f"move {i + 1} duplicates move {seen[key] + 1} up to sign")
        seen[key] = i
