"""Configuration matrices and latent count models.

Four families are supported:

``contingency``
    two-way tables with fixed column sums and all but the last row sum;
``mta``
    closed-population capture-recapture with misidentification, where an
    error on occasion ``j`` creates a ghost history captured only on ``j``
    (events 0 = missed, 1 = caught and identified, 2 = caught and
    misidentified);
``suffstats``
    complete capture histories summarised by the capture frequencies
    ``f_1..f_K``, the per-occasion counts ``n_1..n_K`` and the total number
    of marked animals available for capture ``M.``;
``bandmisread``
    mark-resight histories in which one marked animal is read as another
    (events 0, 1, 2 = false negative, 3 = false positive), balanced per
    occasion.

Column orders are fixed so that vectors written in the usual label order
(``x_00, x_01, x_02, x_10, ...``) line up index by index.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import fourtitwo
from .moveset import as_int_matrix

FAMILIES = ("contingency", "mta", "suffstats", "bandmisread")
MTA_MAX_K = 8


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A labelled configuration matrix ``A`` for one model family.

    Attributes
    ----------
    family : str
        One of :data:`FAMILIES`.
    A : ndarray
        Integer configuration matrix; ``y = A @ x``.
    x_labels, y_labels : tuple of str
        Names of the latent cells (true histories) and observed statistics.
    size : dict
        ``{"K": K}`` or ``{"r": r, "c": c}``.
    """

    family: str
    A: np.ndarray
    x_labels: tuple
    y_labels: tuple
    size: dict = field(default_factory=dict)

    def __post_init__(self):
        A = as_int_matrix(self.A)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        if A.shape != (len(self.y_labels), len(self.x_labels)):
            raise ValueError("label counts do not match the matrix shape")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return (
            self.family == other.family
            and np.array_equal(self.A, other.A)
            and self.x_labels == other.x_labels
            and self.y_labels == other.y_labels
            and self.size == other.size
        )

    def __hash__(self) -> int:
        return hash((self.family, self.A.shape, self.A.tobytes(), self.x_labels, self.y_labels))

    @property
    def K(self) -> int | None:
        return self.size.get("K")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def observe(self, x) -> np.ndarray:
        """Observed statistics ``A @ x``."""
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.A.shape[1],):
            raise ValueError(f"x has length {x.size}, expected {self.A.shape[1]}")
        return self.A @ x

    def index(self, label: str) -> int:
        """Column index of latent cell `label` (a leading ``x`` is ignored)."""
        key = label[1:] if label.startswith("x") and label[1:] in self.x_labels else label
        try:
            return self.x_labels.index(key)
        except ValueError:
            raise KeyError(f"no latent cell named {label!r}") from None

    @cached_property
    def codes(self) -> np.ndarray:
        """History digits of each latent cell, shape ``(d, K)``."""
        if self.family not in ("mta", "bandmisread", "suffstats"):
            raise ValueError(f"family {self.family!r} has no history codes")
        return np.array([[int(ch) for ch in lab] for lab in self.x_labels], dtype=np.int64)

    def event_counts(self, event: int) -> np.ndarray:
        """Number of digits equal to `event` in each true-history label."""
        return (self.codes == event).sum(axis=1)

    def sidecar(self) -> dict:
        return {
            "family": self.family,
            **self.size,
            "xLabels": list(self.x_labels),
            "yLabels": list(self.y_labels),
        }

    def save(self, matrix_path, labels_path=None) -> None:
        """Write ``A`` in 4ti2 format and the labels as a JSON sidecar."""
        fourtitwo.write_matrix(matrix_path, self.A)
        if labels_path is None:
            labels_path = os.path.splitext(os.fspath(matrix_path))[0] + ".json"
        with open(labels_path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, matrix_path, labels_path=None) -> "ModelSpec":
        A = fourtitwo.read_matrix(matrix_path)
        if labels_path is None:
            labels_path = os.path.splitext(os.fspath(matrix_path))[0] + ".json"
        if os.path.exists(labels_path):
            with open(labels_path) as fh:
                meta = json.load(fh)
            size = {k: meta[k] for k in ("K", "r", "c") if k in meta}
            return cls(meta.get("family", "custom"), A, tuple(meta["xLabels"]), tuple(meta["yLabels"]), size)
        m, d = A.shape
        return cls("custom", A, tuple(str(j + 1) for j in range(d)), tuple(str(i + 1) for i in range(m)))


def _histories(alphabet: int, K: int):
    return list(itertools.product(range(alphabet), repeat=K))


def _code(digits) -> str:
    return "".join(str(d) for d in digits)


def observable_histories(K: int) -> list[tuple[int, ...]]:
    """The ``2**K - 1`` nonzero binary histories in ascending order."""
    return [h for h in _histories(2, K) if any(h)]


def build(family: str, **size) -> ModelSpec:
    """Dispatch to the builder for `family`."""
    builders = {
        "contingency": build_contingency,
        "mta": build_mta,
        "suffstats": build_suffstats,
        "bandmisread": build_bandmisread,
    }
    if family not in builders:
        raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    return builders[family](**size)


def build_contingency(r: int, c: int) -> ModelSpec:
    """``r x c`` table with column sums and the first ``r - 1`` row sums.

    Cells are vectorised column by column: ``x11, x21, ..., xr1, x12, ...``.
    """
    if r < 2 or c < 2:
        raise ValueError("contingency tables need r >= 2 and c >= 2")
    sep = "" if max(r, c) < 10 else ","
    A = np.zeros((c + r - 1, r * c), dtype=np.int64)
    x_labels = []
    for j in range(c):
        for i in range(r):
            k = j * r + i
            x_labels.append(f"{i + 1}{sep}{j + 1}")
            A[j, k] = 1
            if i < r - 1:
                A[c + i, k] = 1
    y_labels = [f"col{j + 1}" for j in range(c)] + [f"row{i + 1}" for i in range(r - 1)]
    return ModelSpec("contingency", A, tuple(x_labels), tuple(y_labels), {"r": r, "c": c})


def mta_generated(omega) -> list[tuple[int, ...]]:
    """Observed histories produced by the true history `omega`.

    The base history has a 1 wherever `omega` has event 1 (it is dropped if
    empty); each event 2 on occasion ``j`` adds a ghost caught only on ``j``.
    """
    K = len(omega)
    out = []
    base = tuple(int(e == 1) for e in omega)
    if any(base):
        out.append(base)
    for j, e in enumerate(omega):
        if e == 2:
            out.append(tuple(int(t == j) for t in range(K)))
    return out


def build_mta(K: int) -> ModelSpec:
    if not 1 <= K <= MTA_MAX_K:
        raise ValueError(f"mta needs 1 <= K <= {MTA_MAX_K}")
    obs = observable_histories(K)
    row = {h: i for i, h in enumerate(obs)}
    cols = _histories(3, K)
    A = np.zeros((len(obs), len(cols)), dtype=np.int64)
    for j, omega in enumerate(cols):
        for h in mta_generated(omega):
            A[row[h], j] = 1
    return ModelSpec("mta", A, tuple(map(_code, cols)), tuple(map(_code, obs)), {"K": K})


def build_suffstats(K: int) -> ModelSpec:
    """Complete histories summarised by ``f_1..f_K``, ``n_1..n_K`` and ``M.``."""
    if K < 2:
        raise ValueError("suffstats needs K >= 2")
    cols = observable_histories(K)
    A = np.zeros((2 * K + 1, len(cols)), dtype=np.int64)
    for j, omega in enumerate(cols):
        A[sum(omega) - 1, j] = 1
        A[K : 2 * K, j] = omega
        # marked animals available on each later occasion
        A[2 * K, j] = K - (omega.index(1) + 1)
    y_labels = [f"f{j}" for j in range(1, K + 1)] + [f"n{j}" for j in range(1, K + 1)] + ["M."]
    return ModelSpec("suffstats", A, tuple(map(_code, cols)), tuple(y_labels), {"K": K})


def bandmisread_histories(K: int) -> list[tuple[int, ...]]:
    """True histories over {0,1,2,3} whose first nonzero event is a 1."""
    out = []
    for h in _histories(4, K):
        first = next((e for e in h if e), None)
        if first == 1:
            out.append(h)
    return out


def build_bandmisread(K: int) -> ModelSpec:
    if K < 2:
        raise ValueError("bandmisread needs K >= 2")
    obs = observable_histories(K)
    row = {h: i for i, h in enumerate(obs)}
    cols = bandmisread_histories(K)
    n_obs = len(obs)
    A = np.zeros((n_obs + K - 1, len(cols)), dtype=np.int64)
    for j, omega in enumerate(cols):
        seen = tuple(int(e in (1, 3)) for e in omega)
        A[row[seen], j] = 1
        for t in range(1, K):
            A[n_obs + t - 1, j] = int(omega[t] == 2) - int(omega[t] == 3)
    y_labels = list(map(_code, obs)) + [f"bal{t + 1}" for t in range(1, K)]
    return ModelSpec("bandmisread", A, tuple(map(_code, cols)), tuple(y_labels), {"K": K})


# ---------------------------------------------------------------------------
# latent count distributions


@dataclass(frozen=True)
class UniformNPrior:
    """Log mass of the discrete uniform prior on ``{0, ..., n_max}``."""

    n_max: int

    def __call__(self, N: int) -> float:
        return -math.log(self.n_max + 1) if 0 <= N <= self.n_max else -math.inf


def uniform_n_prior(n_max: int) -> Callable[[int], float]:
    return UniformNPrior(int(n_max))


@dataclass(frozen=True, eq=False)
class LatentModel:
    """A configuration matrix plus a mass function ``[x | theta]``.

    `mass` is ``"uniform"`` (flat over the fiber), ``"mta"`` (multinomial
    over all ``3**K`` true histories, abundance ``N = sum(x)``) or ``"mt"``
    (model M_t on complete histories with abundance ``N`` a parameter and
    ``N - sum(x)`` animals never caught).
    """

    spec: ModelSpec
    mass: str = "uniform"
    theta: dict = field(default_factory=dict)
    n_max: int | None = None
    hyper: dict = field(default_factory=dict)
    n_log_prior: Callable[[int], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mass not in ("uniform", "mta", "mt"):
            raise ValueError(f"unknown mass {self.mass!r}")
        if self.mass == "mta" and self.spec.family != "mta":
            raise ValueError("the mta mass needs an mta configuration matrix")
        if self.mass == "mt" and self.spec.family != "suffstats":
            raise ValueError("the mt mass needs a suffstats configuration matrix")
        if self.mass != "uniform":
            if self.n_max is None or self.n_max < 0:
                raise ValueError("a nonnegative n_max is required")
            if self.n_log_prior is None:
                object.__setattr__(self, "n_log_prior", uniform_n_prior(self.n_max))
        if self.theta:
            check_theta(self, self.theta)

    @property
    def prior(self) -> dict:
        h = {"a_p": 1.0, "b_p": 1.0}
        if self.mass == "mta":
            h.update(a_alpha=19.0, b_alpha=1.0)
        h.update(self.hyper)
        return h


def uniform_model(spec: ModelSpec) -> LatentModel:
    return LatentModel(spec, "uniform")


def mta_model(spec: ModelSpec, n_max: int, p=None, alpha=None, **hyper) -> LatentModel:
    """Model M_t-alpha: time-varying capture probabilities ``p`` and correct-ID probability ``alpha``."""
    theta = {}
    if p is not None:
        theta["p"] = np.asarray(p, dtype=float)
    if alpha is not None:
        theta["alpha"] = float(alpha)
    return LatentModel(spec, "mta", theta, n_max, hyper)


def mt_model(spec: ModelSpec, n_max: int, N=None, p=None, **hyper) -> LatentModel:
    """Model M_t on complete capture histories, abundance `N` and capture probabilities `p`."""
    theta = {}
    if N is not None:
        theta["N"] = int(N)
    if p is not None:
        theta["p"] = np.asarray(p, dtype=float)
    return LatentModel(spec, "mt", theta, n_max, hyper)


def check_theta(model: LatentModel, theta: dict) -> None:
    K = model.spec.K
    p = np.asarray(theta.get("p", []), dtype=float)
    if "p" in theta and p.shape != (K,):
        raise ValueError(f"p must have length {K}")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("capture probabilities must lie in [0, 1]")
    if "alpha" in theta and not 0.0 <= theta["alpha"] <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if "N" in theta and theta["N"] < 0:
        raise ValueError("N must be nonnegative")


def cell_log_probs(model: LatentModel, theta: dict) -> np.ndarray:
    """``log pi`` for every latent cell (``-inf`` where the probability is 0).

    For the mt mass the returned vector has one extra trailing entry, the
    log probability of the all-zero (never caught) history.
    """
    check_theta(model, theta)
    p = np.asarray(theta["p"], dtype=float)
    spec = model.spec
    if model.mass == "mta":
        alpha = float(theta["alpha"])
        with np.errstate(divide="ignore"):
            per_event = np.log(np.stack([1 - p, p * alpha, p * (1 - alpha)]))  # (3, K)
        codes = spec.codes
        return per_event[codes, np.arange(spec.K)].sum(axis=1)
    if model.mass == "mt":
        with np.errstate(divide="ignore"):
            lp, lq = np.log(p), np.log1p(-p)
        codes = spec.codes
        seen = np.where(codes == 1, lp, lq)
        return np.append(seen.sum(axis=1), lq.sum())
    raise ValueError("the uniform mass has no cell probabilities")


def log_mass(model: LatentModel, x, theta: dict | None = None) -> float:
    """Log of ``[x | theta]`` up to a constant that does not depend on ``x``.

    Any negative entry gives ``-inf``. For the ``mta`` mass this is::

        log prior(N) + log N! - sum log x_w! + sum x_w log pi_w,   N = sum(x)

    For ``mt`` the never-caught animals ``N - sum(x)`` enter as one more
    multinomial cell. The uniform mass is 0 for every nonnegative ``x``.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (model.spec.A.shape[1],):
        raise ValueError(f"x has length {x.size}, expected {model.spec.A.shape[1]}")
    if np.any(x < 0):
        return -math.inf
    if model.mass == "uniform":
        return 0.0
    theta = model.theta if theta is None else theta
    logpi = cell_log_probs(model, theta)
    n = int(x.sum())
    if model.mass == "mta":
        lp = model.n_log_prior(n)
        if lp == -math.inf:
            return -math.inf
        return float(lp + gammaln(n + 1) - gammaln(x + 1).sum() + xlogy_safe(x, logpi).sum())
    N = int(theta["N"])
    if N < n:
        return -math.inf
    lp = model.n_log_prior(N)
    if lp == -math.inf:
        return -math.inf
    unseen = N - n
    return float(
        lp
        + gammaln(N + 1)
        - gammaln(unseen + 1)
        - gammaln(x + 1).sum()
        + xlogy_safe(x, logpi[:-1]).sum()
        + xlogy_safe(np.array([unseen]), logpi[-1:]).sum()
    )


def xlogy_safe(counts: np.ndarray, logpi: np.ndarray) -> np.ndarray:
    """``counts * logpi`` with ``0 * -inf`` taken as 0."""
    counts = np.asarray(counts)
    out = np.zeros(counts.shape)
    nz = counts != 0
    out[nz] = counts[nz] * np.broadcast_to(logpi, counts.shape)[nz]
    return out


__all__ = [
    "FAMILIES",
    "ModelSpec",
    "LatentModel",
    "build",
    "build_contingency",
    "build_mta",
    "build_suffstats",
    "build_bandmisread",
    "mta_generated",
    "observable_histories",
    "bandmisread_histories",
    "uniform_model",
    "mta_model",
    "mt_model",
    "uniform_n_prior",
    "UniformNPrior",
    "cell_log_probs",
    "log_mass",
]
