"""Metropolis-within-Gibbs sampling of latent counts and parameters.

Each x-proposal adds ``c * a_k`` to the current counts, with ``k`` drawn
uniformly from the move set and ``c`` uniformly from
``{-C, ..., -1, 1, ..., C}``. A proposal with a negative entry has mass 0
and is rejected; otherwise it is accepted with probability
``min(1, [x_cand | theta] / [x | theta])``. With ``C = 1`` this is the
textbook random-move sampler. Parameters are refreshed by conjugate draws
between x-updates.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from . import models
from .moveset import MoveSet, fingerprint

_BLOCK = 4096


@dataclass(frozen=True)
class SamplerConfig:
    """Run settings.

    `iterations` counts everything including burn-in. By default an
    iteration is one proposal under ``"random"`` move selection and one
    sweep through every move, in order, under ``"cycle"``;
    `x_per_iteration` overrides the number of proposals. Parameters (if
    any) are updated once per iteration, after the x-proposals.
    """

    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    move_selection: str = "random"
    coef_cap: int = 1
    coef_caps: tuple | None = None
    record: tuple = ("N",)
    x_per_iteration: int | None = None
    update_theta: bool = True
    track_states: bool = False
    debug: bool = False

    def __post_init__(self):
        if self.burn_in < 0 or self.iterations < self.burn_in:
            raise ValueError("need iterations >= burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.coef_cap < 1:
            raise ValueError("coef_cap must be at least 1")
        if self.coef_caps is not None and any(int(c) < 1 for c in self.coef_caps):
            raise ValueError("per-move caps must be at least 1")
        if self.x_per_iteration is not None and self.x_per_iteration < 1:
            raise ValueError("x_per_iteration must be at least 1")
        if self.move_selection not in ("random", "cycle"):
            raise ValueError("move_selection is 'random' or 'cycle'")
        object.__setattr__(self, "record", tuple(self.record))
        if self.coef_caps is not None:
            object.__setattr__(self, "coef_caps", tuple(int(c) for c in self.coef_caps))

    @property
    def n_records(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class ChainState:
    """Current counts and parameters plus the generator driving the chain."""

    x: np.ndarray
    theta: dict
    rng: np.random.Generator
    iteration: int = 0
    cursor: int = 0
    last_move: tuple | None = None

    def copy(self) -> "ChainState":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        theta = {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.theta.items()}
        return ChainState(self.x.copy(), theta, rng, self.iteration, self.cursor, self.last_move)


class _XKernel:
    """Incremental log-mass differences for proposals ``x -> x + c v``."""

    def __init__(self, model: models.LatentModel, moves: MoveSet, theta: dict):
        self.model = model
        self.mass = model.mass
        self.sparse = moves.sparse()
        self.move_sums = [sum(vals) for _, vals in self.sparse]
        self.set_theta(theta)

    def set_theta(self, theta: dict, lp=None) -> None:
        if self.mass == "uniform":
            return
        if lp is None:
            lp = models.cell_log_probs(self.model, theta)
        if self.mass == "mt":
            self.logpi = lp[:-1].tolist()
            self.logpi0 = float(lp[-1])
            self.N = int(theta["N"])
        else:
            self.logpi = lp.tolist()

    def log_ratio(self, x: list, n: int, k: int, c: int) -> float:
        idx, vals = self.sparse[k]
        for i, v in zip(idx, vals):
            if x[i] + c * v < 0:
                return -math.inf
        if self.mass == "uniform":
            return 0.0
        lg = math.lgamma
        logpi = self.logpi
        out = 0.0
        for i, v in zip(idx, vals):
            old = x[i]
            new = old + c * v
            lpi = logpi[i]
            if lpi == -math.inf:
                if new > 0:
                    return -math.inf
                continue
            out += lg(old + 1) - lg(new + 1) + (new - old) * lpi
        dn = c * self.move_sums[k]
        if self.mass == "mta":
            if dn:
                prior = self.model.n_log_prior
                lp_new = prior(n + dn)
                if lp_new == -math.inf:
                    return -math.inf
                out += lp_new - prior(n) + lg(n + dn + 1) - lg(n + 1)
        elif dn:
            unseen_old = self.N - n
            unseen_new = unseen_old - dn
            if unseen_new < 0:
                return -math.inf
            out += lg(unseen_old + 1) - lg(unseen_new + 1) + (unseen_new - unseen_old) * self.logpi0
        return out


def _caps(config: SamplerConfig, m: int) -> list[int]:
    if config.coef_caps is not None:
        if len(config.coef_caps) != m:
            raise ValueError(f"coef_caps has {len(config.coef_caps)} entries for {m} moves")
        return list(config.coef_caps)
    return [config.coef_cap] * m


def _draw_coefficient(rng: np.random.Generator, cap: int) -> int:
    mag = 1 if cap == 1 else int(rng.integers(1, cap + 1))
    return mag if rng.integers(0, 2) else -mag


def x_update(state: ChainState, model: models.LatentModel, moves: MoveSet, config: SamplerConfig) -> ChainState:
    """One proposal for the latent counts; returns the next state.

    ``state.last_move`` of the result records ``(k, c, accepted)``.
    """
    m = len(moves)
    if m == 0:
        raise ValueError("the move set is empty")
    caps = _caps(config, m)
    new = state.copy()
    rng = new.rng
    if config.move_selection == "random":
        k = int(rng.integers(0, m))
    else:
        k = new.cursor % m
        new.cursor = (k + 1) % m
    c = _draw_coefficient(rng, caps[k])
    kernel = _XKernel(model, moves, state.theta)
    xl = new.x.tolist()
    lr = kernel.log_ratio(xl, int(sum(xl)), k, c)
    u = rng.random()
    accepted = lr >= 0 or (lr > -math.inf and u < math.exp(lr))
    if accepted:
        new.x = new.x + c * moves.moves[k]
    new.last_move = (k, c, bool(accepted))
    return new


class _ThetaSampler:
    """Conjugate parameter draws with the label bookkeeping done once."""

    def __init__(self, model: models.LatentModel):
        self.model = model
        self.h = model.prior
        codes = model.spec.codes
        if model.mass == "mta":
            self.caught = (codes != 0).T.astype(np.int64)
            self.ones = (codes == 1).sum(axis=1)
            self.twos = (codes == 2).sum(axis=1)
            self.onehot = [(codes == e).astype(np.float64) for e in range(3)]
        elif model.mass == "mt":
            self.seen = codes.T.astype(np.int64)
            self.onehot = [(codes == e).astype(np.float64) for e in range(2)]
        else:
            raise ValueError(f"no parameters to update for the {model.mass!r} mass")

    def draw(self, rng: np.random.Generator, x: np.ndarray, theta: dict) -> dict:
        h = self.h
        if self.model.mass == "mta":
            N = int(x.sum())
            nj = self.caught @ x
            p = rng.beta(h["a_p"] + nj, h["b_p"] + N - nj)
            alpha = float(rng.beta(h["a_alpha"] + int(self.ones @ x), h["b_alpha"] + int(self.twos @ x)))
            return {"p": p, "alpha": alpha}
        n = int(x.sum())
        nj = self.seen @ x
        N = int(theta.get("N", n))
        p = rng.beta(h["a_p"] + nj, h["b_p"] + N - nj)
        return {"N": _draw_abundance(rng, self.model, n, p), "p": p}

    def log_probs(self, theta: dict) -> np.ndarray:
        """Same values as :func:`models.cell_log_probs`, without validation."""
        p = np.asarray(theta["p"], dtype=float)
        with np.errstate(divide="ignore"):
            if self.model.mass == "mta":
                a = theta["alpha"]
                logs = (np.log1p(-p), np.log(p * a), np.log(p * (1 - a)))
            else:
                logs = (np.log1p(-p), np.log(p))
        if not all(np.all(np.isfinite(v)) for v in logs):
            return models.cell_log_probs(self.model, theta)
        out = sum(oh @ v for oh, v in zip(self.onehot, logs))
        if self.model.mass == "mt":
            out = np.append(out, logs[0].sum())
        return out


def theta_update(state: ChainState, model: models.LatentModel) -> ChainState:
    """Draw the parameters from their full conditional given the counts.

    For ``mta``: ``p_j ~ Beta(a_p + n_j, b_p + N - n_j)`` where ``n_j``
    counts animals whose history is nonzero on occasion ``j``, and
    ``alpha ~ Beta(a_alpha + #1s, b_alpha + #2s)``. For ``mt``: ``p_j``
    given ``N``, then ``N`` given ``p`` on ``{sum(x), ..., n_max}``.
    """
    new = state.copy()
    new.theta = _ThetaSampler(model).draw(new.rng, new.x, new.theta)
    return new


def _draw_abundance(rng, model, n, p) -> int:
    # [N | p, x] on {n, ..., n_max}: prior(N) * N! / (N - n)! * q^(N - n)
    support = np.arange(n, model.n_max + 1)
    if support.size == 0:
        raise ValueError("n_max is smaller than the number of animals seen")
    logq = float(np.sum(np.log1p(-p))) if np.all(p < 1) else -np.inf
    unseen = support - n
    lw = np.array([model.n_log_prior(int(N)) for N in support]) + gammaln(support + 1) - gammaln(unseen + 1)
    lw = lw + np.where(unseen > 0, unseen * logq, 0.0)
    lw -= lw.max()
    w = np.exp(lw)
    u = rng.random() * w.sum()
    return int(support[min(np.searchsorted(np.cumsum(w), u, side="right"), support.size - 1)])


def initial_theta(rng: np.random.Generator, model: models.LatentModel, x: np.ndarray) -> dict:
    """Fixed values from the model when given, otherwise draws from the prior."""
    if model.mass == "uniform":
        return {}
    h = model.prior
    theta = dict(model.theta)
    K = model.spec.K
    if "p" not in theta:
        theta["p"] = rng.beta(h["a_p"], h["b_p"], size=K)
    if model.mass == "mta" and "alpha" not in theta:
        theta["alpha"] = float(rng.beta(h["a_alpha"], h["b_alpha"]))
    if model.mass == "mt" and "N" not in theta:
        theta["N"] = _draw_abundance(rng, model, int(x.sum()), np.asarray(theta["p"]))
    return theta


# ---------------------------------------------------------------------------
# chains


@dataclass
class ChainOutput:
    """Recorded iterations of one chain.

    `columns` maps field names to arrays of equal length, always starting
    with ``iteration``. `state_counts` tallies recorded x vectors when the
    run tracked states.
    """

    columns: dict
    meta: dict = field(default_factory=dict)
    state_counts: Counter | None = None
    final: ChainState | None = None

    def __len__(self) -> int:
        return len(self.columns["iteration"])

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"field {name!r} was not recorded") from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        w.writerow(names)
        cols = [self.columns[n] for n in names]
        fmt = [(lambda v: repr(int(v))) if c.dtype.kind in "iub" else (lambda v: format(float(v), ".17g")) for c in cols]
        for i in range(len(self)):
            w.writerow([f(c[i]) for f, c in zip(fmt, cols)])
        return buf.getvalue()

    def write(self, stem) -> tuple[str, str]:
        """Write ``<stem>.csv`` and the ``<stem>.json`` metadata sidecar."""
        stem = os.fspath(stem)
        csv_path, json_path = stem + ".csv", stem + ".json"
        with open(csv_path, "w") as fh:
            fh.write(self.to_csv())
        with open(json_path, "w") as fh:
            json.dump(self.meta, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path


def _field_weights(model, name):
    spec = model.spec
    d = spec.A.shape[1]
    if name == "N" and model.mass != "mt":
        return np.ones(d, dtype=np.int64)
    if name == "n":
        return np.ones(d, dtype=np.int64)
    if name == "errors":
        return spec.event_counts(2)
    if name.startswith("x:") or name.startswith("x_"):
        w = np.zeros(d, dtype=np.int64)
        w[spec.index(name[2:])] = 1
        return w
    return None


def _theta_field(name: str, K):
    if name == "alpha" or name == "N":
        return name, None
    if name.startswith("p") and name[1:].isdigit() and K and 1 <= int(name[1:]) <= K:
        return "p", int(name[1:]) - 1
    return None


def run_chain(model: models.LatentModel, moves: MoveSet, config: SamplerConfig, init_x, y=None, theta=None) -> ChainOutput:
    """Run one chain from `init_x` and return its recorded iterations.

    Recordable fields: ``N`` (abundance), ``n`` (animals seen), ``errors``
    (total event-2 count), ``x:<label>`` for one latent cell, ``p<j>``,
    ``alpha`` and ``accepted`` (proposals accepted in the iteration).
    """
    A = model.spec.A
    x0 = np.asarray(init_x, dtype=np.int64)
    if x0.shape != (A.shape[1],) or np.any(x0 < 0):
        raise ValueError("initial counts must be a nonnegative vector of the right length")
    target = A @ x0 if y is None else np.asarray(y, dtype=np.int64)
    if not np.array_equal(A @ x0, target):
        raise ValueError("initial counts are not in the fiber: A @ x != y")
    m = len(moves)
    if m == 0:
        raise ValueError("the move set is empty")
    moves.check_matrix(A)
    caps = _caps(config, m)

    ss = np.random.SeedSequence(config.seed)
    rng_x, rng_theta = (np.random.default_rng(s) for s in ss.spawn(2))
    theta = dict(theta) if theta is not None else initial_theta(rng_theta, model, x0)
    has_theta = model.mass != "uniform"
    do_theta = has_theta and config.update_theta
    kernel = _XKernel(model, moves, theta)
    tsampler = _ThetaSampler(model) if do_theta else None

    # recorded fields
    linear, tfields, want_accept = {}, {}, False
    for name in config.record:
        w = _field_weights(model, name)
        if w is not None:
            linear[name] = w
        elif name == "accepted":
            want_accept = True
        elif has_theta and _theta_field(name, model.spec.K):
            tfields[name] = _theta_field(name, model.spec.K)
        else:
            raise KeyError(f"cannot record field {name!r} for this model")
    lin_names = list(linear)
    lin_vals = [int(linear[n] @ x0) for n in lin_names]
    lin_step = [[int(linear[n] @ v) for v in moves.moves] for n in lin_names]

    n_rec = config.n_records
    cols = {"iteration": np.zeros(n_rec, dtype=np.int64)}
    for n in lin_names:
        cols[n] = np.zeros(n_rec, dtype=np.int64)
    for n, (key, _) in tfields.items():
        cols[n] = np.zeros(n_rec, dtype=np.int64 if key == "N" else np.float64)
    if want_accept:
        cols["accepted"] = np.zeros(n_rec, dtype=np.int64)
    states = Counter() if config.track_states else None

    x = x0.tolist()
    n_tot = sum(x)
    check_every = 1 if config.debug else 1000
    per_iter = config.x_per_iteration or (1 if config.move_selection == "random" else m)
    cycling = config.move_selection == "cycle"
    cursor = 0
    buf_k = buf_s = buf_u = buf_mag = None
    pos = _BLOCK
    rec = 0
    total_accepted = 0
    sparse = kernel.sparse
    uniform = model.mass == "uniform"
    for it in range(1, config.iterations + 1):
        acc_it = 0
        for _ in range(per_iter):
            if pos == _BLOCK:
                buf_k = rng_x.integers(0, m, _BLOCK).tolist()
                buf_s = rng_x.integers(0, 2, _BLOCK).tolist()
                buf_u = rng_x.random(_BLOCK).tolist()
                buf_mag = rng_x.random(_BLOCK).tolist()
                pos = 0
            if not cycling:
                k = buf_k[pos]
            else:
                k = cursor
                cursor = (cursor + 1) % m
            cap = caps[k]
            mag = 1 if cap == 1 else 1 + int(buf_mag[pos] * cap)
            c = mag if buf_s[pos] else -mag
            u = buf_u[pos]
            pos += 1
            idx, vals = sparse[k]
            if uniform:
                ok = True
                for i, v in zip(idx, vals):
                    if x[i] + c * v < 0:
                        ok = False
                        break
            else:
                lr = kernel.log_ratio(x, n_tot, k, c)
                ok = lr >= 0 or (lr > -math.inf and u < math.exp(lr))
            if ok:
                for i, v in zip(idx, vals):
                    x[i] += c * v
                n_tot += c * kernel.move_sums[k]
                for f in range(len(lin_vals)):
                    lin_vals[f] += c * lin_step[f][k]
                acc_it += 1
        total_accepted += acc_it
        if do_theta:
            theta = tsampler.draw(rng_theta, np.array(x, dtype=np.int64), theta)
            kernel.set_theta(theta, tsampler.log_probs(theta))
        if it % check_every == 0 and not np.array_equal(A @ np.array(x, dtype=np.int64), target):
            raise AssertionError(f"iteration {it}: A @ x left the fiber")
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            cols["iteration"][rec] = it
            for f, name in enumerate(lin_names):
                cols[name][rec] = lin_vals[f]
            for name, (key, j) in tfields.items():
                cols[name][rec] = theta[key] if j is None else theta[key][j]
            if want_accept:
                cols["accepted"][rec] = acc_it
            if states is not None:
                states[tuple(x)] += 1
            rec += 1

    final_x = np.array(x, dtype=np.int64)
    if not np.array_equal(A @ final_x, target):
        raise AssertionError("final state left the fiber")
    final = ChainState(final_x, theta, rng_x, config.iterations, cursor)
    meta = {
        "seed": config.seed,
        "config": _jsonable(asdict(config)),
        "matrixFingerprint": fingerprint(A),
        "moves": {"count": m, "provenance": moves.provenance, "fingerprint": _moves_digest(moves)},
        "model": {"family": model.spec.family, "mass": model.mass, "nMax": model.n_max, "prior": model.prior},
        "y": target.tolist(),
        "initX": x0.tolist(),
        "acceptanceRate": total_accepted / max(1, config.iterations * per_iter),
    }
    return ChainOutput(cols, meta, states, final)


def _moves_digest(moves: MoveSet) -> str:
    return hashlib.sha256(np.ascontiguousarray(moves.moves, dtype="<i8").tobytes()).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _run_one(args):
    return run_chain(*args)


def run_chains(model, moves, configs, inits, y=None, parallel: bool = False, max_workers=None) -> list[ChainOutput]:
    """Run several chains, one per ``(config, init)`` pair.

    Chains are independent: each has its own seed. With ``parallel=True``
    they run in separate processes; results are identical either way.
    """
    if len(configs) != len(inits):
        raise ValueError("need one initial value per config")
    jobs = [(model, moves, cfg, x0, y) for cfg, x0 in zip(configs, inits)]
    if not parallel:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=max_workers) as ex:
        return list(ex.map(_run_one, jobs))


def with_seed(config: SamplerConfig, seed: int) -> SamplerConfig:
    return replace(config, seed=seed)


# ---------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class Summary:
    """Histogram and empirical quantiles of one recorded field."""

    field: str
    edges: np.ndarray
    counts: np.ndarray
    quantiles: dict
    integer: bool

    def frequencies(self) -> dict:
        """``{value: count}`` for integer fields, ``{left_edge: count}`` otherwise."""
        keys = self.edges[:-1] if not self.integer else self.edges
        return {k.item(): int(c) for k, c in zip(keys, self.counts)}


QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


def summarize(output: ChainOutput, name: str, bins=None, quantiles=QUANTILES) -> Summary:
    """Exact histogram of `name`.

    Integer fields are tallied value by value unless `bins` (a bin width)
    is given; float fields use `bins` equal-width bins (default 50).
    """
    values = output[name]
    if len(values) == 0:
        raise ValueError(f"no recorded values for {name!r}")
    q = {float(p): float(v) for p, v in zip(quantiles, np.quantile(values, quantiles))}
    if values.dtype.kind in "iu":
        if bins is None:
            uniq, counts = np.unique(values, return_counts=True)
            return Summary(name, uniq, counts, q, True)
        width = int(bins)
        lo = (values.min() // width) * width
        idx = (values - lo) // width
        counts = np.bincount(idx)
        keep = counts > 0
        return Summary(name, (lo + width * np.arange(counts.size))[keep], counts[keep], q, True)
    nb = 50 if bins is None else int(bins)
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return Summary(name, np.array([lo, hi]), np.array([values.size]), q, False)
    counts, edges = np.histogram(values, bins=nb, range=(lo, hi))
    return Summary(name, edges, counts, q, False)


def total_variation(a, b) -> float:
    """Total variation distance between two histograms given as ``{key: count}``."""
    if isinstance(a, Summary):
        a = a.frequencies()
    if isinstance(b, Summary):
        b = b.frequencies()
    ta, tb = sum(a.values()), sum(b.values())
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0) / ta - b.get(k, 0) / tb) for k in keys)
