"""Chain model: validation, stationary/Poisson solves, variances.

The two-state oracle values asserted here were derived by hand: the
stationary distribution from the 2x2 balance system, the Poisson solution
from (I - P) g = r - (pi r) e with pi g = pi r, and the per-state
variances by direct substitution.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import chainexp as ce
from chainexp.chains import ValidationIssue

from conftest import build_two_state_spec, random_spec


class TestValidation:
    def test_two_state_benchmark_accepted(self):
        spec = build_two_state_spec()
        assert spec.n_states == 2
        assert spec.P(1)[0, 0] == 0.9

    def test_row_sum_violation(self):
        bad = np.array([[[0.5, 0.6], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]]])
        with pytest.raises(ce.SpecValidationError) as ei:
            ce.make_spec(bad, {}, default_reward=ce.Constant(0.0))
        issues = ei.value.issues
        assert ValidationIssue("not_stochastic", chain=1, x=0, detail=issues[0].detail) == issues[0]

    def test_identity_is_reducible(self):
        bad = np.array([[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]]])
        with pytest.raises(ce.SpecValidationError) as ei:
            ce.make_spec(bad, {}, default_reward=ce.Constant(0.0))
        assert any(i.code == "reducible" and i.chain == 1 for i in ei.value.issues)

    def test_missing_reward_reported(self):
        P = np.array([[[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]]])
        with pytest.raises(ce.SpecValidationError) as ei:
            ce.make_spec(P, {})
        codes = {(i.code, i.chain, i.x, i.y) for i in ei.value.issues}
        assert ("missing_reward", 1, 0, 0) in codes

    def test_invalid_distribution(self):
        P = np.array([[[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]]])
        with pytest.raises(ce.SpecValidationError) as ei:
            ce.make_spec(
                P,
                {(1, 0, 0): ce.Bernoulli(1.5)},
                default_reward=ce.Constant(0.0),
            )
        assert any(i.code == "invalid_distribution" for i in ei.value.issues)

    def test_discrete_probs_must_sum_to_one(self):
        P = np.array([[[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]]])
        with pytest.raises(ce.SpecValidationError):
            ce.make_spec(
                P,
                {(1, 0, 0): ce.DiscreteFinite((0.0, 1.0), (0.6, 0.6))},
                default_reward=ce.Constant(0.0),
            )


class TestIrreducible:
    def test_two_cycle(self):
        assert ce.is_irreducible(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_identity(self):
        assert not ce.is_irreducible(np.eye(2))

    def test_forward_cycle_any_size(self):
        for s in (2, 5, 9):
            P = np.zeros((s, s))
            for x in range(s):
                P[x, (x + 1) % s] = 1.0
            assert ce.is_irreducible(P)

    def test_zero_row_fails(self):
        P = np.array([[0.5, 0.5], [0.0, 0.0]])
        assert not ce.is_irreducible(P)


class TestStationary:
    def test_doubly_stochastic_symmetric(self):
        pi = ce.stationary_distribution(np.full((2, 2), 0.5))
        np.testing.assert_allclose(pi, [0.5, 0.5], atol=1e-15)

    def test_two_state_benchmark_chain1(self):
        pi = ce.stationary_distribution(np.array([[0.9, 0.1], [0.2, 0.8]]))
        np.testing.assert_allclose(pi, [2 / 3, 1 / 3], atol=1e-14)

    def test_cycle_uniform(self):
        for s in (3, 6):
            P = np.zeros((s, s))
            for x in range(s):
                P[x, (x + 1) % s] = 1.0
            np.testing.assert_allclose(ce.stationary_distribution(P), np.full(s, 1 / s), atol=1e-13)

    def test_not_irreducible_raises(self):
        with pytest.raises(ce.NotIrreducibleError):
            ce.stationary_distribution(np.eye(3))


class TestPoisson:
    def test_constant_reward_gives_constant_solution(self):
        P = np.array([[0.9, 0.1], [0.2, 0.8]])
        g = ce.poisson_solve(P, np.array([3.5, 3.5]))
        np.testing.assert_allclose(g, [3.5, 3.5], atol=1e-12)

    def test_two_state_benchmark_value(self):
        P = np.array([[0.9, 0.1], [0.2, 0.8]])
        g = ce.poisson_solve(P, np.array([1.0, 0.0]))
        np.testing.assert_allclose(g, [16 / 9, -14 / 9], atol=1e-13)
        pi = ce.stationary_distribution(P)
        assert abs(pi @ g - 2 / 3) < 1e-13

    def test_defining_residual_random(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            S = int(rng.integers(2, 7))
            P = rng.uniform(0.05, 1, (S, S))
            P /= P.sum(axis=1, keepdims=True)
            r = rng.normal(size=S)
            pi = ce.stationary_distribution(P)
            g = ce.poisson_solve(P, r, pi=pi)
            resid = (np.eye(S) - P) @ g - (r - (pi @ r) * np.ones(S))
            assert np.max(np.abs(resid)) <= 1e-10
            assert abs(pi @ g - pi @ r) <= 1e-10


class TestStateVariance:
    def test_deterministic_everything_is_zero(self):
        s = 4
        spec = ce.coop_example_spec(s, 0.5, 0.5)
        # strip the randomness: replace Bernoulli rewards with constants
        rewards = {k: ce.Constant(0.25) for k in spec.rewards}
        det = ce.make_spec(spec.transition, rewards)
        an = ce.analyze(det)
        np.testing.assert_allclose(an.sigma2, 0.0, atol=1e-18)

    def test_two_state_benchmark_chain1(self, w2):
        np.testing.assert_allclose(w2.analysis.sigma2[0], [1.0, 16 / 9], atol=1e-12)

    def test_two_state_benchmark_chain2_reward_only(self, w2):
        np.testing.assert_allclose(w2.analysis.sigma2[1], [0.25, 0.25], atol=1e-15)


class TestAnalyze:
    def test_identical_chains_zero_effect(self):
        P = np.array([[0.3, 0.7], [0.6, 0.4]])
        rewards = {}
        for ell in (1, 2):
            for x in range(2):
                for y in range(2):
                    rewards[(ell, x, y)] = ce.Uniform(0.0, float(x + 1))
        spec = ce.make_spec(np.stack([P, P]), rewards)
        an = ce.analyze(spec)
        assert abs(an.treatment_effect) < 1e-14

    def test_two_state_benchmark_closed_forms(self, w2):
        an = w2.analysis
        assert abs(an.alpha[0] - 2 / 3) < 1e-13
        assert abs(an.alpha[1] - 0.5) < 1e-15
        assert abs(an.treatment_effect + 1 / 6) < 1e-13
        assert abs(an.sigma2_bar[0] - 34 / 27) < 1e-12
        assert abs(an.sigma2_bar[1] - 0.25) < 1e-14
        np.testing.assert_allclose(an.eta[0], [1.5, 3.0], atol=1e-12)
        np.testing.assert_allclose(an.eta[1], [2.0, 2.0], atol=1e-12)

    def test_cycles_example_effect(self):
        for s, q1, q2 in ((3, 0.2, 0.9), (8, 0.5, 0.5), (5, 0.4, 0.1)):
            an = ce.analyze(ce.coop_example_spec(s, q1, q2))
            np.testing.assert_allclose(an.pi, np.full((2, s), 1 / s), atol=1e-13)
            assert abs(an.alpha[0] - q1 / s) < 1e-13
            assert abs(an.alpha[1] - q2 / s) < 1e-13
            assert abs(an.treatment_effect - (q2 - q1) / s) < 1e-13


class TestSingleChainCltVariance:
    def test_constant_reward(self):
        P = np.array([[0.9, 0.1], [0.2, 0.8]])
        assert ce.single_chain_clt_variance(P, np.array([2.0, 2.0])) < 1e-13

    def test_two_state_benchmark(self):
        P = np.array([[0.9, 0.1], [0.2, 0.8]])
        assert abs(ce.single_chain_clt_variance(P, np.array([1.0, 0.0])) - 34 / 27) < 1e-12

    def test_deterministic_alternation(self):
        P = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert ce.single_chain_clt_variance(P, np.array([1.0, 0.0])) < 1e-13


class TestInvariants:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_random_spec_residuals(self, seed):
        spec = random_spec(np.random.default_rng(seed))
        an = ce.analyze(spec)
        for ell in (1, 2):
            a = ell - 1
            P = spec.P(ell)
            assert np.max(np.abs(an.pi[a] @ P - an.pi[a])) <= 1e-12
            r = an.mean_reward[a]
            resid = (np.eye(spec.n_states) - P) @ an.gtilde[a] - (r - (an.pi[a] @ r))
            assert np.max(np.abs(resid)) <= 1e-10
            assert abs(an.pi[a] @ an.gtilde[a] - an.pi[a] @ r) <= 1e-10
            assert (an.sigma2[a] >= 0.0).all()

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10**6))
    def test_variance_decomposition(self, seed):
        # pi-weighted sigma^2 splits into the single-chain CLT variance plus
        # the pi,P-weighted reward variances
        spec = random_spec(np.random.default_rng(seed))
        an = ce.analyze(spec)
        _, var_r = spec.reward_moments()
        for ell in (1, 2):
            a = ell - 1
            trans_part = ce.single_chain_clt_variance(spec.P(ell), an.mean_reward[a])
            reward_part = float(an.pi[a] @ np.einsum("xy,xy->x", spec.P(ell), var_r[a]))
            assert abs(an.sigma2_bar[a] - (trans_part + reward_part)) <= 1e-10

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(11)
        spec = random_spec(rng, n_states=4)
        perm = np.array([2, 0, 3, 1])
        inv = np.argsort(perm)
        P_new = spec.transition[:, perm][:, :, perm]
        rewards_new = {
            (ell, int(inv[x]), int(inv[y])): d for (ell, x, y), d in spec.rewards.items()
        }
        permuted = ce.make_spec(P_new, rewards_new)
        an = ce.analyze(spec)
        an_p = ce.analyze(permuted)
        for a in range(2):
            np.testing.assert_allclose(an_p.pi[a], an.pi[a][perm], atol=1e-10)
            np.testing.assert_allclose(an_p.gtilde[a], an.gtilde[a][perm], atol=1e-10)
            np.testing.assert_allclose(an_p.sigma2[a], an.sigma2[a][perm], atol=1e-10)
        assert abs(an_p.treatment_effect - an.treatment_effect) < 1e-10
        np.testing.assert_allclose(an_p.sigma2_bar, an.sigma2_bar, atol=1e-10)
        sol = ce.solve_optimal_kappa(an.pi, an.sigma2, spec.P(1), spec.P(2))
        sol_p = ce.solve_optimal_kappa(an_p.pi, an_p.sigma2, permuted.P(1), permuted.P(2))
        assert abs(sol.objective - sol_p.objective) < 1e-10

    def test_monte_carlo_variance_oracle(self, w2):
        # single-chain CLT: empirical variance of sqrt(n) (mean reward - alpha)
        # must match the pi-weighted sigma^2 within 10%
        n, reps = 100_000, 2000
        for ell in (1, 2):
            summary = ce.monte_carlo(
                w2.spec,
                ce.SingleChain(ell),
                n,
                reps,
                base_seed=400 + ell,
                threads=2,
                alpha_true=float(w2.analysis.alpha[ell - 1]),
                collect=True,
            )
            # single chain: the SAE reduces to (+/-) the running mean reward
            emp = n * np.var(summary.samples_sae, ddof=1)
            target = float(w2.analysis.sigma2_bar[ell - 1])
            assert abs(emp - target) / target < 0.10
