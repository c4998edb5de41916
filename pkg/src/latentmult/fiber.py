"""Fibers ``{x >= 0 : A x = y}``: enumeration, connectivity audits and paths."""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from . import fourtitwo
from .moveset import MoveSet, as_int_matrix, fingerprint

DEFAULT_CAP = 10**6


class FiberTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class Fiber:
    """Nonnegative integer solutions of ``A x = y``.

    `elements` holds one solution per row in lexicographic order, or is
    ``None`` for a fiber that is only described (see :func:`implicit_fiber`)
    and explored lazily. `zero_column_bound` caps the coordinates that no
    constraint bounds (zero columns, such as the never-observed history of
    the mta model).
    """

    A: np.ndarray
    y: np.ndarray
    elements: np.ndarray | None
    zero_column_bound: int | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.elements is not None:
            idx = {row.tobytes(): i for i, row in enumerate(self.elements)}
            object.__setattr__(self, "_index", idx)

    @property
    def matrix_fingerprint(self) -> str:
        return fingerprint(self.A)

    @property
    def explicit(self) -> bool:
        return self.elements is not None

    def __len__(self) -> int:
        if self.elements is None:
            raise TypeError("implicit fiber has no known size")
        return len(self.elements)

    def index_of(self, x) -> int | None:
        """Row index of `x` in `elements`, or None."""
        key = np.asarray(x, dtype=np.int64).tobytes()
        return self._index.get(key)

    def admits(self, x) -> bool:
        """True if `x` is a member of this fiber."""
        x = np.asarray(x, dtype=np.int64)
        if self.elements is not None:
            return self.index_of(x) is not None
        if x.shape != (self.A.shape[1],) or np.any(x < 0):
            return False
        if self.zero_column_bound is not None and np.any(x[_unbounded_columns(self.A)] > self.zero_column_bound):
            return False
        return bool(np.array_equal(self.A @ x, self.y))

    def admits_rows(self, X) -> np.ndarray:
        """Vectorised :meth:`admits` over the rows of `X`."""
        X = np.asarray(X, dtype=np.int64)
        ok = np.all(X >= 0, axis=1)
        if self.elements is not None:
            ok[ok] = [row.tobytes() in self._index for row in X[ok]]
            return ok
        if self.zero_column_bound is not None:
            ok &= np.all(X[:, _unbounded_columns(self.A)] <= self.zero_column_bound, axis=1)
        ok[ok] = np.all(X[ok] @ self.A.T == self.y, axis=1)
        return ok

    def __contains__(self, x) -> bool:
        return self.admits(x)

    def save(self, path) -> None:
        """Write the elements, one per row, in 4ti2 format."""
        if self.elements is None:
            raise TypeError("cannot export an implicit fiber")
        fourtitwo.write_matrix(path, self.elements)


def _nonneg_rows(A: np.ndarray) -> np.ndarray:
    return np.all(A >= 0, axis=1)


def _unbounded_columns(A: np.ndarray) -> np.ndarray:
    # columns with no positive entry in a nonnegative row are not bounded by y
    pos = (A > 0) & _nonneg_rows(A)[:, None]
    return ~np.any(pos, axis=0)


def implicit_fiber(A, y, zero_column_bound=None) -> Fiber:
    """A fiber described by ``(A, y)`` but not enumerated."""
    A = as_int_matrix(A)
    y = np.asarray(y, dtype=np.int64)
    return Fiber(A, y, None, zero_column_bound)


def enumerate_fiber(A, y, zero_column_bound=None, cap: int = DEFAULT_CAP) -> Fiber:
    """All nonnegative integer solutions of ``A x = y``.

    Depth-first search over the columns, left to right. Column ``j`` ranges
    over ``0..min(residual_i // A[i, j])`` taken over the nonnegative rows
    with a positive entry; rows of mixed sign are only checked once every
    column is fixed. A branch is cut as soon as some nonnegative row has a
    positive residual that no remaining column can reduce.

    Columns that no nonnegative row bounds (zero columns in particular)
    range over ``0..zero_column_bound``, which is then required.
    """
    A = as_int_matrix(A)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    m, d = A.shape
    if y.shape != (m,):
        raise ValueError(f"y has length {y.size}, expected {m}")
    nonneg = _nonneg_rows(A)
    unbounded = _unbounded_columns(A)
    if unbounded.any() and zero_column_bound is None:
        cols = np.flatnonzero(unbounded).tolist()
        raise ValueError(f"columns {cols} are unbounded; zero_column_bound is required")
    if np.any(y[nonneg] < 0):
        return Fiber(A, y, np.zeros((0, d), dtype=np.int64), zero_column_bound)

    Al = A.tolist()
    rows = range(m)
    bound_rows = [[i for i in rows if nonneg[i] and Al[i][j] > 0] for j in range(d)]
    # live[j]: nonnegative rows that some column >= j can still reduce
    live = [set() for _ in range(d + 1)]
    for j in range(d - 1, -1, -1):
        live[j] = live[j + 1] | set(bound_rows[j])
    nn_rows = [i for i in rows if nonneg[i]]
    col_entries = [[(i, Al[i][j]) for i in rows if Al[i][j] != 0] for j in range(d)]
    zb = zero_column_bound

    out: list[tuple[int, ...]] = []
    x = [0] * d
    res = y.tolist()

    def rec(j: int) -> None:
        if j == d:
            if not any(res):
                if len(out) >= cap:
                    raise FiberTooLarge(f"fiber has more than {cap} elements")
                out.append(tuple(x))
            return
        lv = live[j]
        for i in nn_rows:
            if res[i] and i not in lv:
                return
        if bound_rows[j]:
            ub = min(res[i] // Al[i][j] for i in bound_rows[j])
        else:
            ub = zb
        ent = col_entries[j]
        for v in range(ub + 1):
            x[j] = v
            rec(j + 1)
            for i, a in ent:
                res[i] -= a
        # undo the ub + 1 subtractions made above
        for i, a in ent:
            res[i] += a * (ub + 1)
        x[j] = 0

    rec(0)
    elems = np.array(out, dtype=np.int64).reshape(len(out), d)
    return Fiber(A, y, elems, zero_column_bound)


@dataclass(frozen=True)
class ConnectivityReport:
    """Connected components of a fiber under single ``+-v`` moves.

    Component ids are numbered in order of each component's first element.
    """

    component_count: int
    component_sizes: tuple
    isolated_count: int
    component_of: np.ndarray

    def to_dict(self) -> dict:
        return {
            "componentCount": self.component_count,
            "componentSizes": list(self.component_sizes),
            "isolatedCount": self.isolated_count,
            "fiberSize": int(len(self.component_of)),
            "componentOf": self.component_of.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def summary(self) -> str:
        sizes = ", ".join(str(s) for s in self.component_sizes[:10])
        more = " ..." if len(self.component_sizes) > 10 else ""
        return (
            f"fiber size {len(self.component_of)}: {self.component_count} component(s), "
            f"sizes [{sizes}{more}], {self.isolated_count} isolated"
        )


def _neighbour_table(fiber: Fiber, moves: MoveSet) -> list[list[int]]:
    X = fiber.elements
    adj: list[list[int]] = [[] for _ in range(len(X))]
    for v in moves.moves:
        for sign in (1, -1):
            Y = X + sign * v
            for i, row in enumerate(Y):
                j = fiber._index.get(row.tobytes())
                if j is not None:
                    adj[i].append(j)
    return adj


def connectivity(fiber: Fiber, moves: MoveSet) -> ConnectivityReport:
    """Components of the graph joining ``x`` and ``x + v`` or ``x - v`` for each move."""
    if not fiber.explicit:
        raise TypeError("connectivity needs an enumerated fiber")
    if len(moves):
        moves.check_matrix(fiber.A)
    n = len(fiber.elements)
    adj = _neighbour_table(fiber, moves) if len(moves) else [[] for _ in range(n)]
    comp = np.full(n, -1, dtype=np.int64)
    sizes = []
    for s in range(n):
        if comp[s] >= 0:
            continue
        cid = len(sizes)
        comp[s] = cid
        queue = deque([s])
        size = 0
        while queue:
            u = queue.popleft()
            size += 1
            for w in adj[u]:
                if comp[w] < 0:
                    comp[w] = cid
                    queue.append(w)
        sizes.append(size)
    return ConnectivityReport(
        component_count=len(sizes),
        component_sizes=tuple(sorted(sizes, reverse=True)),
        isolated_count=sum(1 for s in sizes if s == 1),
        component_of=comp,
    )


@dataclass(frozen=True)
class PathResult:
    """Outcome of :func:`witness_path`.

    `steps` lists ``(move_index, sign)`` pairs and `states` the visited
    vectors including both endpoints. When the endpoints are not connected
    `components` names their component ids (None for implicit fibers) and
    `explored` is the size of the start's component.
    """

    connected: bool
    steps: tuple = ()
    states: tuple = ()
    components: tuple = (None, None)
    explored: int = 0

    def __bool__(self) -> bool:
        return self.connected


def witness_path(fiber: Fiber, moves: MoveSet, start, end, max_states: int = DEFAULT_CAP) -> PathResult:
    """Shortest sequence of single signed moves from `start` to `end`.

    Breadth-first search; every intermediate vector is a member of the
    fiber. Works on implicit fibers by exploring from `start`, so huge
    fibers can be searched when the endpoints are close.
    """
    start = np.asarray(start, dtype=np.int64)
    end = np.asarray(end, dtype=np.int64)
    for name, pt in (("start", start), ("end", end)):
        if not fiber.admits(pt):
            raise ValueError(f"{name} point is not in the fiber")
    if len(moves):
        moves.check_matrix(fiber.A)
    if np.array_equal(start, end):
        return PathResult(True, (), (start,), explored=1)
    goal = end.tobytes()
    prev: dict[bytes, tuple] = {start.tobytes(): (None, None, None)}
    # candidates in the order v0, -v0, v1, -v1, ...
    V = moves.moves
    S = np.stack([V, -V], axis=1).reshape(-1, V.shape[1]) if len(V) else V
    d = start.size
    frontier = start[None, :]
    found = False
    while len(frontier) and len(S) and not found:
        C = (frontier[:, None, :] + S[None, :, :]).reshape(-1, d)
        keep = []
        for i in np.flatnonzero(fiber.admits_rows(C)).tolist():
            key = C[i].tobytes()
            if key in prev:
                continue
            j = i % len(S)
            prev[key] = (frontier[i // len(S)].tobytes(), j // 2, 1 - 2 * (j % 2))
            if key == goal:
                found = True
                break
            if len(prev) > max_states:
                raise FiberTooLarge(f"explored more than {max_states} states")
            keep.append(i)
        frontier = C[keep]
    if not found:
        comps = (None, None)
        if fiber.explicit:
            rep = connectivity(fiber, moves)
            comps = (int(rep.component_of[fiber.index_of(start)]), int(rep.component_of[fiber.index_of(end)]))
        return PathResult(False, components=comps, explored=len(prev))
    steps, states = [], [end]
    key = goal
    while prev[key][0] is not None:
        parent, k, sign = prev[key]
        steps.append((k, sign))
        states.append(np.frombuffer(parent, dtype=np.int64).copy())
        key = parent
    return PathResult(True, tuple(reversed(steps)), tuple(reversed(states)), explored=len(prev))


def stuck_moves(x, moves: MoveSet) -> list[int]:
    """Indices of moves that cannot be applied at `x` in either direction."""
    x = np.asarray(x, dtype=np.int64)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    V = moves.moves
    if len(V) == 0:
        return []
    up = np.any(x + V < 0, axis=1)
    down = np.any(x - V < 0, axis=1)
    return np.flatnonzero(up & down).tolist()


def error_count_distribution(fiber: Fiber, spec) -> dict[int, int]:
    """Number of fiber elements by total error count ``sum_w x_w * (#2s in w)``."""
    if spec.family not in ("bandmisread", "mta"):
        raise ValueError(f"error counts are not defined for family {spec.family!r}")
    if not fiber.explicit:
        raise TypeError("error_count_distribution needs an enumerated fiber")
    w = spec.event_counts(2)
    counts = Counter((fiber.elements @ w).tolist())
    return {int(k): int(counts[k]) for k in sorted(counts)}
