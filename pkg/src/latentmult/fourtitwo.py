"""Reading and writing integer matrices in the 4ti2 text format.

The format is a header line ``R C`` followed by ``R * C`` whitespace
separated integers in row-major order. Rows are conventionally written one
per line, which is what :func:`write_matrix` does.
"""

from __future__ import annotations

import io
import os

import numpy as np

from .moveset import as_int_matrix


class FormatError(ValueError):
    """Raised for malformed 4ti2 matrix text."""


def parse_matrix(text: str) -> np.ndarray:
    tokens = text.split()
    if len(tokens) < 2:
        raise FormatError("missing 'R C' header")
    try:
        nrows, ncols = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise FormatError(f"bad header {tokens[0]!r} {tokens[1]!r}") from exc
    if nrows < 0 or ncols < 0:
        raise FormatError("negative dimensions in header")
    body = tokens[2:]
    if len(body) != nrows * ncols:
        raise FormatError(f"header announces {nrows}x{ncols} = {nrows * ncols} entries, found {len(body)}")
    try:
        values = [int(t) for t in body]
    except ValueError as exc:
        raise FormatError(f"non-integer entry: {exc}") from exc
    return as_int_matrix(np.array(values, dtype=object).reshape(nrows, ncols)) if nrows else np.zeros((0, ncols), dtype=np.int64)


def format_matrix(M) -> str:
    M = np.asarray(M, dtype=np.int64)
    if M.ndim == 1:
        M = M[None, :]
    buf = io.StringIO()
    buf.write(f"{M.shape[0]} {M.shape[1]}\n")
    for row in M:
        buf.write(" ".join(str(int(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def read_matrix(path: str | os.PathLike) -> np.ndarray:
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_matrix(text)
    except FormatError as exc:
        raise FormatError(f"{os.fspath(path)}: {exc}") from None


def write_matrix(path: str | os.PathLike, M) -> None:
    with open(path, "w") as fh:
        fh.write(format_matrix(M))
