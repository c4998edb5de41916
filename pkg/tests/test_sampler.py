import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latentmult import fiber, fixtures, models, sampler
from latentmult.moveset import MoveSet
from latentmult.sampler import SamplerConfig

from conftest import (
    CONTINGENCY_A,
    CONTINGENCY_MB,
    CONTINGENCY_X1,
    MTA_LB,
    MTA_MB,
    MTA_X1,
    SUFF_LB,
    SUFF_X1,
)

MTA = models.build_mta(2)
SUFF = models.build_suffstats(4)


def mta_fixed(**kw):
    return models.mta_model(MTA, n_max=2000, p=[0.6, 0.7], alpha=0.9, **kw)


def mb(A, rows):
    return MoveSet.from_vectors(A, rows, "imported")


def state(x, theta, seed=0):
    return sampler.ChainState(np.array(x, dtype=np.int64), theta, np.random.default_rng(seed))


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(iterations=5, burn_in=6),
            dict(iterations=5, burn_in=-1),
            dict(iterations=5, thin=0),
            dict(iterations=5, coef_cap=0),
            dict(iterations=5, coef_caps=(1, 0)),
            dict(iterations=5, x_per_iteration=0),
            dict(iterations=5, move_selection="sweep"),
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SamplerConfig(**kw)

    def test_record_count(self):
        assert SamplerConfig(iterations=100, burn_in=10, thin=7).n_records == 12
        assert SamplerConfig(iterations=10, burn_in=10).n_records == 0

    def test_cap_length_checked(self):
        cfg = SamplerConfig(iterations=3, coef_caps=(1, 2))
        with pytest.raises(ValueError, match="coef_caps"):
            sampler.run_chain(models.uniform_model(models.build_contingency(3, 3)), mb(CONTINGENCY_A, CONTINGENCY_MB), cfg, CONTINGENCY_X1)


class TestXUpdate:
    def test_stuck_lattice_moves_always_rejected(self):
        model = mta_fixed()
        moves = mb(MTA.A, MTA_LB)
        st_ = state(MTA_X1, model.theta)
        cfg = SamplerConfig(iterations=1)
        seen = set()
        for _ in range(400):
            st_ = sampler.x_update(st_, model, moves, cfg)
            k, c, acc = st_.last_move
            if k in (1, 2, 4, 5):
                seen.add(k)
                assert not acc
            st_.x = np.array(MTA_X1)
        assert seen == {1, 2, 4, 5}

    def test_uniform_accepts_nonnegative(self):
        model = models.uniform_model(models.build_contingency(3, 3))
        moves = mb(CONTINGENCY_A, CONTINGENCY_MB)
        st_ = state(CONTINGENCY_X1, {})
        cfg = SamplerConfig(iterations=1, coef_cap=2)
        for _ in range(300):
            prev = st_.x
            st_ = sampler.x_update(st_, model, moves, cfg)
            k, c, acc = st_.last_move
            assert acc == bool(np.all(prev + c * moves.moves[k] >= 0))
            assert (CONTINGENCY_A @ st_.x == CONTINGENCY_A @ np.array(CONTINGENCY_X1)).all()

    def test_cycle_visits_in_order(self):
        model = models.uniform_model(models.build_contingency(3, 3))
        moves = mb(CONTINGENCY_A, CONTINGENCY_MB)
        st_ = state([2] * 9, {})
        cfg = SamplerConfig(iterations=1, move_selection="cycle")
        ks = []
        for _ in range(12):
            st_ = sampler.x_update(st_, model, moves, cfg)
            ks.append(st_.last_move[0])
        assert ks == list(range(9)) + [0, 1, 2]

    def test_empty_moves(self):
        model = models.uniform_model(models.build_contingency(3, 3))
        with pytest.raises(ValueError):
            sampler.x_update(state(CONTINGENCY_X1, {}), model, MoveSet.from_vectors(CONTINGENCY_A, [], "imported"), SamplerConfig(iterations=1))

    @pytest.mark.parametrize("k", [0, 1])
    def test_acceptance_matches_mass_ratio(self, k):
        model = mta_fixed()
        moves = mb(MTA.A, MTA_MB[k : k + 1])
        x = np.array(MTA_X1)
        cfg = SamplerConfig(iterations=1)
        ratio = {c: math.exp(min(0.0, models.log_mass(model, x + c * moves.moves[0]) - models.log_mass(model, x))) for c in (-1, 1)}
        st_ = state(x, model.theta, seed=3)
        tally = {-1: [0, 0], 1: [0, 0]}
        for _ in range(6000):
            st_ = sampler.x_update(st_, model, moves, cfg)
            _, c, acc = st_.last_move
            tally[c][0] += acc
            tally[c][1] += 1
            st_.x = x.copy()
        for c in (-1, 1):
            acc, n = tally[c]
            r = ratio[c]
            assert abs(acc / n - r) < 4 * math.sqrt(max(r * (1 - r), 1e-4) / n) + 1e-3


class TestKernelRatio:
    @given(st.integers(0, 5), st.integers(-3, 3).filter(bool), st.integers(0, 4))
    def test_mta_matches_log_mass(self, k, c, shift):
        model = mta_fixed()
        moves = mb(MTA.A, MTA_MB)
        x = np.array(MTA_X1) + shift * np.array([1, 0, 1, 0, 0, 1, 1, 1, 1])
        kern = sampler._XKernel(model, moves, model.theta)
        got = kern.log_ratio(x.tolist(), int(x.sum()), k, c)
        new = x + c * moves.moves[k]
        want = models.log_mass(model, new) - models.log_mass(model, x) if (new >= 0).all() else -math.inf
        assert got == pytest.approx(want, abs=1e-9) if want > -math.inf else got == -math.inf

    @given(st.integers(0, 6), st.integers(-2, 2).filter(bool))
    def test_mt_matches_log_mass(self, k, c):
        model = models.mt_model(SUFF, n_max=20000, N=16000, p=[0.2, 0.3, 0.4, 0.5])
        moves = mb(SUFF.A, SUFF_LB)
        x = np.array(SUFF_X1)
        kern = sampler._XKernel(model, moves, model.theta)
        got = kern.log_ratio(x.tolist(), int(x.sum()), k, c)
        new = x + c * moves.moves[k]
        want = models.log_mass(model, new) - models.log_mass(model, x)
        assert got == pytest.approx(want, abs=1e-8)

    def test_prior_support_enforced(self):
        model = models.mta_model(MTA, n_max=int(sum(MTA_X1)), p=[0.5, 0.5], alpha=0.9)
        kern = sampler._XKernel(model, mb(MTA.A, MTA_MB), model.theta)
        assert kern.log_ratio(list(MTA_X1), sum(MTA_X1), 0, 1) == -math.inf

    def test_zero_probability_cell(self):
        model = models.mta_model(MTA, n_max=2000, p=[0.5, 0.5], alpha=1.0)
        kern = sampler._XKernel(model, mb(MTA.A, MTA_MB), model.theta)
        # move 2 adds to history 02, impossible when alpha = 1
        assert kern.log_ratio(list(MTA_X1), sum(MTA_X1), 1, 1) == -math.inf
        assert kern.log_ratio(list(MTA_X1), sum(MTA_X1), 1, -1) == -math.inf  # negative count


class TestThetaUpdate:
    def test_null_history_gives_beta_1_1_plus_n(self):
        model = models.mta_model(MTA, n_max=2000)
        x = np.zeros(9, dtype=np.int64)
        x[0] = 40
        st_ = state(x, {"p": np.array([0.5, 0.5]), "alpha": 0.5}, seed=11)
        draws = []
        for _ in range(3000):
            st_ = sampler.theta_update(st_, model)
            draws.append(st_.theta["p"])
        draws = np.array(draws)
        mean, var = 1 / 42, 41 / (42**2 * 43)
        assert np.allclose(draws.mean(axis=0), mean, atol=4 * math.sqrt(var / 3000))

    def test_alpha_posterior_at_x1(self):
        # 733 single-event captures, none of the second kind: Beta(19 + 733, 1)
        model = models.mta_model(MTA, n_max=2000)
        st_ = state(MTA_X1, {"p": np.array([0.5, 0.5]), "alpha": 0.5}, seed=5)
        a = []
        for _ in range(3000):
            st_ = sampler.theta_update(st_, model)
            a.append(st_.theta["alpha"])
        mean = 752 / 753
        sd = math.sqrt(752 / (753**2 * 754))
        assert abs(np.mean(a) - mean) < 4 * sd / math.sqrt(3000)

    def test_mt_abundance_in_support(self):
        model = models.mt_model(SUFF, n_max=int(sum(SUFF_X1)) + 50)
        st_ = state(SUFF_X1, {"p": np.full(4, 0.9), "N": int(sum(SUFF_X1))}, seed=1)
        for _ in range(20):
            st_ = sampler.theta_update(st_, model)
            assert sum(SUFF_X1) <= st_.theta["N"] <= model.n_max

    def test_uniform_has_no_parameters(self):
        with pytest.raises(ValueError):
            sampler.theta_update(state(CONTINGENCY_X1, {}), models.uniform_model(models.build_contingency(3, 3)))

    def test_log_probs_fast_path(self):
        model = mta_fixed()
        ts = sampler._ThetaSampler(model)
        for theta in ({"p": np.array([0.3, 0.8]), "alpha": 0.7}, {"p": np.array([0.0, 1.0]), "alpha": 1.0}):
            np.testing.assert_allclose(ts.log_probs(theta), models.cell_log_probs(model, theta))


def contingency_chain(**kw):
    model = models.uniform_model(models.build_contingency(3, 3))
    cfg = SamplerConfig(**{"iterations": 2000, "seed": 4, "record": ("n", "x:11", "accepted"), **kw})
    return sampler.run_chain(model, mb(CONTINGENCY_A, CONTINGENCY_MB), cfg, CONTINGENCY_X1)


class TestRunChain:
    def test_deterministic(self):
        a, b = contingency_chain(), contingency_chain()
        assert a.to_csv() == b.to_csv()
        assert a.to_csv() != contingency_chain(seed=5).to_csv()

    def test_stays_in_fiber(self):
        out = contingency_chain(debug=True, coef_cap=3)
        assert (CONTINGENCY_A @ out.final.x == CONTINGENCY_A @ np.array(CONTINGENCY_X1)).all()
        assert (out["n"] == sum(CONTINGENCY_X1)).all()

    def test_burn_in_only(self):
        out = contingency_chain(iterations=50, burn_in=50)
        assert len(out) == 0
        assert out.to_csv().strip() == "iteration,n,x:11,accepted"

    def test_thinning(self):
        out = contingency_chain(iterations=100, burn_in=10, thin=9)
        assert out["iteration"].tolist() == [19, 28, 37, 46, 55, 64, 73, 82, 91, 100]

    def test_uniform_stationary_on_fiber(self):
        model = models.uniform_model(models.build_contingency(3, 3))
        F = fiber.enumerate_fiber(CONTINGENCY_A, CONTINGENCY_A @ np.array(CONTINGENCY_X1))
        cfg = SamplerConfig(iterations=60000, seed=2, record=(), track_states=True)
        out = sampler.run_chain(model, mb(CONTINGENCY_A, CONTINGENCY_MB), cfg, CONTINGENCY_X1)
        assert set(out.state_counts) == {tuple(r) for r in F.elements.tolist()}
        uniform = {tuple(r): 1 for r in F.elements.tolist()}
        assert sampler.total_variation(out.state_counts, uniform) < 0.05

    def test_bad_initial(self):
        model = models.uniform_model(models.build_contingency(3, 3))
        moves = mb(CONTINGENCY_A, CONTINGENCY_MB)
        with pytest.raises(ValueError):
            sampler.run_chain(model, moves, SamplerConfig(iterations=1), [-1] + [0] * 8)
        with pytest.raises(ValueError, match="fiber"):
            sampler.run_chain(model, moves, SamplerConfig(iterations=1), CONTINGENCY_X1, y=[0] * 5)

    def test_unknown_field(self):
        with pytest.raises(KeyError):
            contingency_chain(record=("alpha",))

    def test_parameter_fields(self):
        model = models.mta_model(MTA, n_max=2000)
        cfg = SamplerConfig(iterations=200, seed=1, record=("N", "p1", "p2", "alpha", "errors"), coef_cap=5)
        out = sampler.run_chain(model, mb(MTA.A, MTA_MB), cfg, MTA_X1)
        assert out["N"].dtype.kind == "i" and out["alpha"].dtype.kind == "f"
        assert ((out["p1"] > 0) & (out["p1"] < 1)).all()
        assert (out["N"] >= sum(MTA_X1) - 2 * 363).all()
        assert out.meta["model"]["mass"] == "mta"

    def test_csv_and_sidecar(self, tmp_path):
        out = contingency_chain(iterations=20)
        csv_path, json_path = out.write(tmp_path / "run")
        rows = list(csv.reader(open(csv_path)))
        assert rows[0] == ["iteration", "n", "x:11", "accepted"] and len(rows) == 21
        assert all(r[0].isdigit() for r in rows[1:])
        meta = json.load(open(json_path))
        assert meta["seed"] == 4 and meta["moves"]["count"] == 9 and meta["initX"] == CONTINGENCY_X1
        assert meta["config"]["iterations"] == 20

    def test_x_per_iteration(self):
        out = contingency_chain(iterations=50, x_per_iteration=7, coef_cap=1)
        assert out["accepted"].max() <= 7

    def test_parallel_equals_serial(self):
        model = models.mta_model(MTA, n_max=2000)
        cfgs = [SamplerConfig(iterations=300, seed=s, coef_cap=5) for s in (1, 2)]
        moves = mb(MTA.A, MTA_MB)
        ser = sampler.run_chains(model, moves, cfgs, [MTA_X1] * 2)
        par = sampler.run_chains(model, moves, cfgs, [MTA_X1] * 2, parallel=True, max_workers=2)
        assert [o.to_csv() for o in ser] == [o.to_csv() for o in par]
        with pytest.raises(ValueError):
            sampler.run_chains(model, moves, cfgs, [MTA_X1])


class TestSummaries:
    def test_integer_histogram(self):
        out = sampler.ChainOutput({"iteration": np.arange(6), "N": np.array([3, 3, 5, 7, 7, 7])})
        s = sampler.summarize(out, "N")
        assert s.frequencies() == {3: 2, 5: 1, 7: 3}
        assert s.quantiles[0.5] == 6.0
        assert sampler.summarize(out, "N", bins=4).frequencies() == {0: 2, 4: 4}

    def test_float_histogram(self):
        out = sampler.ChainOutput({"iteration": np.arange(4), "a": np.array([0.0, 0.25, 0.5, 1.0])})
        s = sampler.summarize(out, "a", bins=4)
        assert s.counts.tolist() == [1, 1, 1, 1] and not s.integer

    def test_empty(self):
        out = sampler.ChainOutput({"iteration": np.arange(0), "N": np.arange(0)})
        with pytest.raises(ValueError):
            sampler.summarize(out, "N")
        with pytest.raises(KeyError):
            out["p1"]

    def test_total_variation(self):
        assert sampler.total_variation({1: 1, 2: 1}, {1: 5, 2: 5}) == 0
        assert sampler.total_variation({1: 1}, {2: 3}) == 1
        assert sampler.total_variation({1: 3, 2: 1}, {1: 1, 2: 1}) == pytest.approx(0.25)
