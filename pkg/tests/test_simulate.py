"""Simulator: sampling laws, engine equivalence, reproducibility, the
Monte Carlo harness, and the cooperative-exploration comparison."""

import numpy as np
import pytest

import chainexp as ce
from chainexp import _kernels
from chainexp.simulate import _tables_for

from conftest import build_two_state_spec, random_spec


class TestSampleStep:
    def test_deterministic_row(self, w2):
        spec = ce.coop_example_spec(5, 0.5, 0.5)
        gp, gt, gr = ce.derive_streams(1, 0, 0)
        for _ in range(20):
            y, _ = ce.sample_step(spec, 1, 2, gt, gr)
            assert y == 3

    def test_constant_reward(self, w2):
        gp, gt, gr = ce.derive_streams(2, 0, 0)
        for _ in range(20):
            _, r = ce.sample_step(w2.spec, 1, 0, gt, gr)
            assert r == 1.0

    def test_transition_frequencies(self, w2):
        # law of large numbers on the first row of chain 1
        t = _tables_for(w2.spec)
        rng = np.random.default_rng(3)
        u = rng.random(1_000_000)
        ys = np.where(u < t.trans_cdf[0, 0, 0], 0, 1)
        freq = np.bincount(ys, minlength=2) / u.size
        assert abs(freq[0] - 0.9) < 0.002
        assert abs(freq[1] - 0.1) < 0.002

    def test_reward_distributions_sampled_correctly(self):
        # empirical means of each family against closed forms
        rng = np.random.default_rng(4)
        dists = [
            ce.Constant(0.7),
            ce.Bernoulli(0.3),
            ce.Uniform(-1.0, 2.0),
            ce.DiscreteFinite((1.0, 2.0, 5.0), (0.2, 0.5, 0.3)),
        ]
        for dist in dists:
            u = rng.random(200_000)
            vals = np.array([dist.inv_cdf(v) for v in u])
            assert abs(vals.mean() - dist.mean()) < 0.01
            assert abs(vals.var() - dist.variance()) < 0.02


ALL_POLICIES = [
    ce.StationaryMarkov(np.array([0.6, 0.4])),
    ce.Regenerative(x_r=1, p_r=0.35),
    ce.Switchback(block_length=13),
    ce.SingleChain(2),
    ce.OnlineEtiConfig(),
    ce.OnlineEti2Config(x_r=0),
]


class TestEngineEquivalence:
    @pytest.mark.parametrize("policy", ALL_POLICIES, ids=lambda p: type(p).__name__)
    def test_kernel_matches_python_bitwise(self, w2, policy):
        rk = ce.run(w2.spec, policy, 4000, seed=42, checkpoint_every=1000, engine="kernel", keep_stats=True)
        rp = ce.run(w2.spec, policy, 4000, seed=42, checkpoint_every=1000, engine="python", keep_stats=True)
        sk, sp = rk.extras["stats"], rp.extras["stats"]
        for f in ("gamma", "phi", "theta", "psi", "upsilon"):
            np.testing.assert_array_equal(getattr(sk, f), getattr(sp, f))
        assert rk.alpha_mle == rp.alpha_mle
        assert rk.alpha_sae == rp.alpha_sae
        assert rk.diagnostics == rp.diagnostics
        for key in ("p_r_hat", "m", "alpha_cycle"):
            if key in rp.extras:
                assert rk.extras[key] == rp.extras[key]
        for a, b in zip(rk.checkpoints, rp.checkpoints):
            assert a[:3] == b[:3]
            np.testing.assert_array_equal(a[3], b[3])

    def test_engines_agree_on_random_specs(self):
        rng = np.random.default_rng(8)
        for k in range(3):
            spec = random_spec(rng)
            p = rng.uniform(0.2, 0.8, spec.n_states)
            rk = ce.run(spec, ce.StationaryMarkov(p), 2500, seed=k, engine="kernel")
            rp = ce.run(spec, ce.StationaryMarkov(p), 2500, seed=k, engine="python")
            assert rk.alpha_mle == rp.alpha_mle
            np.testing.assert_array_equal(rk.gamma_hat, rp.gamma_hat)


class TestReproducibility:
    def test_same_seed_identical(self, w2):
        a = ce.run(w2.spec, ce.StationaryMarkov(np.full(2, 0.5)), 50_000, seed=5)
        b = ce.run(w2.spec, ce.StationaryMarkov(np.full(2, 0.5)), 50_000, seed=5)
        assert a.alpha_mle == b.alpha_mle and a.alpha_sae == b.alpha_sae
        np.testing.assert_array_equal(a.gamma_hat, b.gamma_hat)

    def test_monte_carlo_thread_count_invariant(self, w2):
        kw = dict(n=5000, reps=30, base_seed=11)
        s1 = ce.monte_carlo(w2.spec, ce.StationaryMarkov(np.full(2, 0.5)), threads=1, **kw)
        s2 = ce.monte_carlo(w2.spec, ce.StationaryMarkov(np.full(2, 0.5)), threads=2, **kw)
        assert s1.mle == s2.mle
        assert s1.sae == s2.sae
        np.testing.assert_array_equal(s1.mean_gamma, s2.mean_gamma)

    def test_streams_are_independent_by_name(self):
        # the three named substreams of a replication never collide
        gp, gt, gr = ce.derive_streams(123, 7, 0)
        a, b, c = gp.random(4), gt.random(4), gr.random(4)
        assert not np.allclose(a, b) and not np.allclose(b, c)

    def test_lanes_are_distinct(self):
        g0 = ce.derive_streams(123, 7, 0)[1].random(4)
        g1 = ce.derive_streams(123, 7, 1)[1].random(4)
        assert not np.allclose(g0, g1)


class TestRun:
    def test_gamma_sums_to_one(self, w2):
        res = ce.run(w2.spec, ce.Regenerative(x_r=0, p_r=0.5), 12_345, seed=3)
        assert abs(res.gamma_hat.sum() - 1.0) < 1e-12

    def test_single_chain_estimate_accuracy(self, w2):
        # plug-in estimate of one chain's stationary reward: within three
        # standard errors nearly always
        n, reps = 100_000, 200
        se = np.sqrt(float(w2.analysis.sigma2_bar[0]) / n)
        hits = 0
        for k in range(reps):
            res = ce.run(w2.spec, ce.SingleChain(1), n, seed=71, rep=k, keep_stats=True)
            est = ce.mle_chain_alpha(res.extras["stats"], 1)
            hits += abs(est - 2 / 3) <= 3 * se
        assert hits / reps >= 0.99

    def test_checkpoint_marks(self, w2):
        res = ce.run(w2.spec, ce.SingleChain(1), 2500, seed=1, checkpoint_every=1000)
        assert [c[0] for c in res.checkpoints] == [1000, 2000, 2500]

    def test_switchback_interference_bias(self):
        # slow-mixing chains pulled toward opposite states: block alternation
        # inherits the other arm's state, biasing the naive sample average
        P1 = np.array([[0.98, 0.02], [0.1, 0.9]])
        P2 = np.array([[0.9, 0.1], [0.02, 0.98]])
        rewards = {}
        for ell in (1, 2):
            for x in range(2):
                for y in range(2):
                    rewards[(ell, x, y)] = ce.Constant(float(y))
        spec = ce.make_spec(np.stack([P1, P2]), rewards)
        an = ce.analyze(spec)
        summary = ce.monte_carlo(
            spec, ce.Switchback(block_length=100), 20_000, 400, base_seed=17, threads=2
        )
        assert abs(summary.sae.bias) > 5 * np.sqrt(summary.sae.scaled_var / summary.n / summary.reps)


class TestMcSummary:
    def test_scaled_variance_and_ci(self, w2):
        s = ce.monte_carlo(
            w2.spec, ce.StationaryMarkov(np.full(2, 0.5)), 2000, 400, base_seed=23, threads=2, collect=True
        )
        assert s.mle.scaled_var >= 0
        assert s.sae.scaled_var >= 0
        assert s.mle.scaled_var_ci_half > 0
        direct = s.n * np.var(s.samples_mle, ddof=1)
        assert abs(direct - s.mle.scaled_var) < 1e-12

    def test_reps_floor(self, w2):
        with pytest.raises(ValueError):
            ce.monte_carlo(w2.spec, ce.SingleChain(1), 10, 1, base_seed=0)


class TestCltReport:
    def test_markov_half_ratio(self, w2, scenarios):
        kappa = ce.kappa_from_markov(np.full(2, 0.5), w2.spec.P(1), w2.spec.P(2))
        predicted = ce.mle_variance(kappa, w2.analysis.pi, w2.analysis.sigma2)
        summary = scenarios.get("markov_half")
        ratio = summary.mle.scaled_var / predicted
        assert 0.9 <= ratio <= 1.1

    def test_report_fields(self, w2):
        kappa = ce.kappa_from_markov(np.full(2, 0.5), w2.spec.P(1), w2.spec.P(2))
        predicted = ce.mle_variance(kappa, w2.analysis.pi, w2.analysis.sigma2)
        rep = ce.clt_report(
            w2.spec, ce.StationaryMarkov(np.full(2, 0.5)), 20_000, 300, 29, predicted, threads=2
        )
        assert 0.75 <= rep.variance_ratio <= 1.25
        assert rep.ad_statistic >= 0.0

    def test_degenerate_spec_exact(self):
        # deterministic transitions and rewards: zero predicted variance and
        # an exactly recovered effect once both chains have been observed
        spec = ce.coop_example_spec(3, 0.5, 0.5)
        rewards = {k: ce.Constant(1.0 if k[0] == 2 else 0.0) for k in spec.rewards}
        det = ce.make_spec(spec.transition, rewards)
        an = ce.analyze(det)
        assert np.all(an.sigma2 == 0.0)
        res = ce.run(det, ce.StationaryMarkov(np.full(3, 0.5)), 5000, seed=2)
        assert abs(res.alpha_mle - an.treatment_effect) < 1e-12


class TestCoopExample:
    def test_degenerate_two_states(self):
        spec = ce.coop_example_spec(2, 0.4, 0.8)
        np.testing.assert_array_equal(spec.P(1), spec.P(2))

    def test_effect_value(self):
        an = ce.analyze(ce.coop_example_spec(6, 0.2, 0.8))
        assert abs(an.treatment_effect - (0.8 - 0.2) / 6) < 1e-13

    def test_comparison_reward_level_flatness(self):
        reports = {
            s: ce.coop_comparison(s, 0.5, 0.5, n=20_000, reps=400, base_seed=101, threads=2)
            for s in (4, 8)
        }
        vals = [r.designed_var_reward_level for r in reports.values()]
        assert abs(vals[0] - vals[1]) / vals[0] < 0.35
        assert reports[8].ratio > reports[4].ratio
