"""Degree-by-degree minimal Markov basis for a positively graded matrix.

Used to produce the imported move files under ``src/latentmult/data`` when
4ti2 is not available. For each degree ``d`` and each reachable ``y`` of
that degree, fiber elements are joined when their supports overlap (two such
elements are linked by moves of lower degree). Every extra component needs
one new move: the difference between the component's smallest element and
the smallest element of the first component.

The search stops at ``--max-degree``; the output is a Markov basis only if
no generator has a higher degree, so check the result with an audit.

Usage::

    python tools/minimal_markov_basis.py bandmisread --K 3 --max-degree 9 -o band3.mar
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from latentmult import fourtitwo, models
from latentmult.fiber import enumerate_fiber

log = logging.getLogger("minimal_markov_basis")


def default_grading(spec: models.ModelSpec) -> np.ndarray:
    """Row weights ``w`` such that ``w @ A`` is positive on every column."""
    m = spec.A.shape[0]
    if spec.family == "contingency":
        return np.array([1] * spec.size["c"] + [0] * (m - spec.size["c"]))
    if spec.family == "suffstats":
        K = spec.K
        return np.array([1] * K + [0] * (m - K))
    if spec.family == "bandmisread":
        obs = models.observable_histories(spec.K)
        return np.array([sum(h) for h in obs] + [0] * (m - len(obs)))
    raise ValueError(f"{spec.family} matrices are not positively graded")


def _components(F: np.ndarray) -> list[int]:
    # union-find over "supports intersect"; returns the smallest index per class
    n = len(F)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    supp = F > 0
    overlap = (supp.astype(np.int64) @ supp.T.astype(np.int64)) > 0
    for a in range(n):
        for b in np.flatnonzero(overlap[a, a + 1:]) + a + 1:
            ra, rb = find(a), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    return sorted({find(a) for a in range(n)})


def minimal_markov_basis(A: np.ndarray, grading: np.ndarray, max_degree: int) -> list[np.ndarray]:
    A = np.asarray(A, dtype=np.int64)
    m, d = A.shape
    deg = grading @ A
    if np.any(deg <= 0):
        raise ValueError("grading is not positive on every column")
    levels = {0: {tuple([0] * m)}}
    moves: list[np.ndarray] = []
    for dd in range(1, max_degree + 1):
        ys = set()
        for j in range(d):
            if deg[j] <= dd:
                col = A[:, j]
                for y in levels.get(dd - int(deg[j]), ()):
                    ys.add(tuple(int(a + b) for a, b in zip(y, col)))
        levels[dd] = ys
        t0, new = time.time(), 0
        for y in sorted(ys):
            F = enumerate_fiber(A, y).elements
            if len(F) < 2:
                continue
            reps = _components(F)
            for r in reps[1:]:
                moves.append(F[reps[0]] - F[r])
                new += 1
        log.info("degree %d: %d fibers, %d new moves, %d total (%.1fs)", dd, len(ys), new, len(moves), time.time() - t0)
    return moves


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("family", choices=("contingency", "suffstats", "bandmisread"))
    ap.add_argument("--K", type=int)
    ap.add_argument("--r", type=int)
    ap.add_argument("--c", type=int)
    ap.add_argument("--max-degree", type=int, required=True)
    ap.add_argument("-o", "--out", required=True)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    size = {"r": args.r, "c": args.c} if args.family == "contingency" else {"K": args.K}
    spec = models.build(args.family, **size)
    moves = minimal_markov_basis(spec.A, default_grading(spec), args.max_degree)
    fourtitwo.write_matrix(args.out, np.array(moves, dtype=np.int64).reshape(len(moves), spec.A.shape[1]))
    print(f"{len(moves)} moves written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
