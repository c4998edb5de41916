"""Worked examples shipped as data files.

Each example bundles a model, the observed statistics, a couple of fiber
members and the move sets that come with it:

``contingency``
    3x3 table with fixed column sums and first two row sums; a 4-move
    lattice basis and a 9-move Markov basis.
``mta``
    two-occasion capture-recapture with misidentification; the 6-move
    Markov basis and a hand-built 6-move lattice basis that fails to
    connect the fiber of ``y = (363, 22, 174)``.
``suffstats``
    four-list data reduced to sufficient statistics; a 7-move lattice basis
    and a 16-move Markov basis.
``bandmisread``
    three-occasion mark-resight with band misreading; a 63-move Markov
    basis and one starting value.

The Markov bases for ``suffstats`` and ``bandmisread`` were produced by
``tools/minimal_markov_basis.py``; the others are transcribed.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import fourtitwo, models
from .moveset import MoveSet

EXAMPLES = ("contingency", "mta", "suffstats", "bandmisread")

_SIZES = {
    "contingency": ("contingency", "contingency", {"r": 3, "c": 3}),
    "mta": ("mta2", "mta", {"K": 2}),
    "suffstats": ("suffstats4", "suffstats", {"K": 4}),
    "bandmisread": ("bandmisread3", "bandmisread", {"K": 3}),
}


@dataclass(frozen=True)
class Example:
    """One worked example.

    Attributes
    ----------
    name : str
        Key in :data:`EXAMPLES`.
    spec : ModelSpec
    y : ndarray
        Observed statistics.
    xs : ndarray
        Known fiber members, one per row.
    moves : dict
        ``"markov"`` and, when available, ``"lattice"`` move sets.
    """

    name: str
    spec: models.ModelSpec
    y: np.ndarray
    xs: np.ndarray
    moves: dict


def data_path(filename: str):
    """Path-like handle to a packaged data file."""
    return resources.files(__package__).joinpath("data").joinpath(filename)


def read(filename: str) -> np.ndarray:
    return fourtitwo.parse_matrix(data_path(filename).read_text())


def load_moves(filename: str, A, provenance: str = "imported") -> MoveSet:
    return MoveSet.from_vectors(A, read(filename), provenance)


def load(name: str) -> Example:
    """Load the example called `name` (see :data:`EXAMPLES`)."""
    if name not in _SIZES:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    stem, family, size = _SIZES[name]
    spec = models.build(family, **size)
    moves = {"markov": load_moves(f"{stem}_markov.mar", spec.A)}
    if data_path(f"{stem}_lattice.mar").is_file():
        moves["lattice"] = load_moves(f"{stem}_lattice.mar", spec.A)
    y = read(f"{stem}_y.mat")[0]
    xs = read(f"{stem}_x.mat")
    return Example(name, spec, y, xs, moves)

