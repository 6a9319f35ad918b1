import math

import numpy as np
import pytest
from scipy import stats

from sava.simgen import (
    COUNTEREXAMPLE2_MEANS,
    Gauss,
    TruncGauss,
    WorldConfig,
    arrival_times,
    gen_counterexample1,
    gen_counterexample2,
    gen_world,
    load_world,
    sample_truncnorm,
    save_world,
    truncnorm_mean,
)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(T=0), dict(p=0.0), dict(p=1.5), dict(pi_plus=-0.1)])
    def test_invalid(self, kw):
        base = dict(T=10, p=0.5, pi_plus=0.5, model=Gauss(1.0))
        with pytest.raises(ValueError):
            WorldConfig(**{**base, **kw})

    def test_models(self):
        with pytest.raises(ValueError):
            TruncGauss(0.0)
        with pytest.raises(ValueError):
            TruncGauss(1.0, K=0)
        with pytest.raises(ValueError):
            Gauss(-1.0)

    def test_dict_round_trip(self):
        cfg = WorldConfig(10, 0.5, 0.3, TruncGauss(1.0, 2.0), seed=4)
        assert WorldConfig.from_dict(cfg.to_dict()) == cfg


class TestWorld:
    def test_p_one(self):
        w = gen_world(WorldConfig(12, 1.0, 0.5, Gauss(1.0)))
        assert w.grid.arrivals == tuple(float(t) for t in range(1, 13))
        assert w.grid.times == tuple(float(t) for t in range(1, 13))

    def test_first_arrival_and_grid(self):
        w = gen_world(WorldConfig(200, 0.2, 0.5, Gauss(1.0), seed=3))
        assert w.grid.arrivals[0] == 1
        later = set(a - 1 for a in w.grid.arrivals[1:])
        assert set(w.grid.times) == later | {200}

    def test_one_arrival_per_interval(self):
        w = gen_world(WorldConfig(300, 0.3, 0.5, Gauss(1.0), seed=5))
        times = (-math.inf,) + w.grid.times
        for lo, hi in zip(times, times[1:]):
            assert sum(lo < a <= hi for a in w.grid.arrivals) == 1

    def test_deterministic(self):
        cfg = WorldConfig(100, 0.3, 0.5, TruncGauss(1.0), seed=9)
        a, b = gen_world(cfg), gen_world(cfg)
        assert a.grid == b.grid and a.truths == b.truths
        np.testing.assert_array_equal(a.stream(3), b.stream(3))

    def test_prefix_stable_in_horizon(self):
        short = gen_world(WorldConfig(100, 0.3, 0.5, TruncGauss(1.0), seed=9))
        long = gen_world(WorldConfig(200, 0.3, 0.5, TruncGauss(1.0), seed=9))
        n = short.n_tasks
        assert long.grid.arrivals[:n] == short.grid.arrivals
        assert long.truths[:n] == short.truths
        np.testing.assert_array_equal(long.stream(2)[:len(short.stream(2))], short.stream(2))

    def test_arrival_rate(self):
        T, p = 3000, 0.3
        a = arrival_times(T, p, seed=1)
        rate = (len(a) - 1) / (T - 1)
        assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / T)

    def test_truth_matches_mean_sign(self):
        w = gen_world(WorldConfig(200, 0.5, 0.3, Gauss(0.5), seed=2))
        assert all((m > 0) == (t == "A") for m, t in zip(w.means, w.truths))

    def test_sample_counts(self):
        w = gen_world(WorldConfig(100, 0.3, 0.5, TruncGauss(1.0), seed=7))
        times = w.grid.times
        for j in range(1, w.n_tasks + 1):
            a = w.grid.arrival(j)
            i = next(n for n, t in enumerate(times) if t >= a)
            first = w.samples(j, times[i - 1] if i else -math.inf, times[i])
            assert len(first) == times[i] - a + 1
            if i + 1 < len(times):
                assert len(w.samples(j, times[i], times[i + 1])) == times[i + 1] - times[i]
            # total up to horizon
            assert len(w.samples(j, -math.inf, times[-1])) == 100 - a + 1

    def test_truncated_support(self):
        w = gen_world(WorldConfig(50, 0.5, 0.5, TruncGauss(1.0, 2.0), seed=1))
        assert all(np.abs(w.stream(j)).max() <= 2.0 for j in range(1, w.n_tasks + 1))

    def test_fixture_round_trip(self, tmp_path):
        w = gen_world(WorldConfig(80, 0.4, 0.5, TruncGauss(1.0), seed=12))
        save_world(w, tmp_path / "w.json")
        back = load_world(tmp_path / "w.json")
        assert back.grid == w.grid and back.truths == w.truths
        np.testing.assert_array_equal(back.stream(5), w.stream(5))

    def test_fixture_version_checked(self, tmp_path):
        w = gen_world(WorldConfig(10, 0.4, 0.5, Gauss(1.0)))
        save_world(w, tmp_path / "w.json")
        text = (tmp_path / "w.json").read_text().replace('"version": 1', '"version": 99')
        (tmp_path / "w.json").write_text(text)
        with pytest.raises(ValueError):
            load_world(tmp_path / "w.json")


class TestTruncnorm:
    def test_support(self):
        x = sample_truncnorm(0.5, 1.0, -2.0, 2.0, np.random.default_rng(0), 10_000)
        assert x.min() >= -2 and x.max() <= 2

    def test_symmetric_mean(self):
        x = sample_truncnorm(0.0, 1.0, -2.0, 2.0, np.random.default_rng(1), 100_000)
        assert abs(x.mean()) <= 3 * x.std() / math.sqrt(x.size)

    def test_analytic_mean(self):
        x = sample_truncnorm(1.0, 1.0, -2.0, 2.0, np.random.default_rng(2), 100_000)
        # mu + sigma (phi(a) - phi(b)) / (Phi(b) - Phi(a)), a = -3, b = 1
        want = 1.0 + (stats.norm.pdf(-3) - stats.norm.pdf(1)) / (stats.norm.cdf(1) - stats.norm.cdf(-3))
        assert truncnorm_mean(1.0, 1.0, -2.0, 2.0) == pytest.approx(want)
        assert abs(x.mean() - want) <= 3 * x.std() / math.sqrt(x.size)

    def test_distribution_matches_scipy(self):
        x = sample_truncnorm(1.0, 1.0, -2.0, 2.0, np.random.default_rng(3), 20_000)
        ref = stats.truncnorm(-3.0, 1.0, loc=1.0)
        assert stats.kstest(x, ref.cdf).pvalue > 0.001

    def test_far_tail(self):
        x = sample_truncnorm(-6.0, 1.0, 0.0, 1.0, np.random.default_rng(4), 1000)
        assert np.all(np.isfinite(x)) and x.min() >= 0.0

    def test_degenerate(self):
        with pytest.raises(ValueError):
            sample_truncnorm(0, 1, 1.0, 1.0, np.random.default_rng(0))
        with pytest.raises(ValueError):
            sample_truncnorm(0, 0, -1.0, 1.0, np.random.default_rng(0))


class TestCounterexamples:
    def test_world1(self):
        w = gen_counterexample1(0)
        assert w.means.size == 500
        assert set(np.unique(w.means)) <= {-0.5, 0.5}
        assert w.n_tasks == 100 and w.T == 100 and w.alpha == 0.1
        assert w.grid.times == tuple(float(t) for t in range(1, 101))

    def test_one_uniform_direction(self):
        w = gen_counterexample1(1)
        for m, (pa, pb) in zip(w.means, w.pvalues):
            assert 0 < pa < 1 and 0 < pb < 1
        # informative direction: 1 - Phi(Y) with Y ~ N(0.5, 0.25) for A tasks
        pos = w.pvalues[w.means > 0, 0]
        assert stats.kstest(pos, lambda p: stats.norm.sf(stats.norm.isf(p), 0.5, 0.5)).pvalue > 1e-4

    def test_static_pvalues(self):
        w = gen_counterexample1(2)
        assert w.samples(3, 2, 3) == w.samples(3, 50, 51) == [tuple(w.pvalues[2])]
        assert w.samples(50, 0, 10) == []

    def test_world2(self):
        w = gen_counterexample2(0)
        assert w.means.size == 100
        assert (w.means[0], w.means[20], w.means[60]) == (2.5, 0.01, 0.001)
        assert set(w.truths) == {"A"}
        np.testing.assert_array_equal(w.means, COUNTEREXAMPLE2_MEANS)

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_counterexample1(5).pvalues, gen_counterexample1(5).pvalues)
