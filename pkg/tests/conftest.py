"""Shared fixtures: the two-state reference instance, its closed-form
constants, random instance generation, and a session cache of the heavy
Monte Carlo scenarios reused by several test modules."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pytest

import chainexp as ce


def build_two_state_spec() -> ce.ChainSpec:
    """Two-state benchmark: chain 1 drifts with deterministic rewards (1, 0),
    chain 2 is uniform coin-flipping with Bernoulli(1/2) rewards."""
    transition = np.array(
        [
            [[0.9, 0.1], [0.2, 0.8]],
            [[0.5, 0.5], [0.5, 0.5]],
        ]
    )
    rewards = {
        (1, 0, 0): ce.Constant(1.0),
        (1, 0, 1): ce.Constant(1.0),
        (1, 1, 0): ce.Constant(0.0),
        (1, 1, 1): ce.Constant(0.0),
        (2, 0, 0): ce.Bernoulli(0.5),
        (2, 0, 1): ce.Bernoulli(0.5),
        (2, 1, 0): ce.Bernoulli(0.5),
        (2, 1, 1): ce.Bernoulli(0.5),
    }
    return ce.make_spec(transition, rewards, note="two-state benchmark")


@dataclass(frozen=True)
class TwoStateBundle:
    spec: ce.ChainSpec
    analysis: ce.ChainAnalysis
    design: ce.DesignSolution
    regen: ce.RegenerativeDesign
    # frozen closed forms, derived by hand from the 2x2 balance equations
    pi1 = (Fraction(2, 3), Fraction(1, 3))
    gtilde1 = (Fraction(16, 9), Fraction(-14, 9))
    sigma2_chain1 = (Fraction(1), Fraction(16, 9))
    sigma2_bar1 = Fraction(34, 27)
    sigma2_bar2 = Fraction(1, 4)
    alpha = Fraction(-1, 6)
    eta = ((Fraction(3, 2), Fraction(3)), (Fraction(2), Fraction(2)))


@pytest.fixture(scope="session")
def w2() -> TwoStateBundle:
    spec = build_two_state_spec()
    analysis = ce.analyze(spec)
    design = ce.solve_optimal_kappa(analysis.pi, analysis.sigma2, spec.P(1), spec.P(2))
    regen = ce.optimal_regenerative(analysis, 0)
    return TwoStateBundle(spec=spec, analysis=analysis, design=design, regen=regen)


def random_spec(rng: np.random.Generator, n_states: int | None = None) -> ce.ChainSpec:
    """Random strictly-positive (hence irreducible) instance with a mix of
    reward families on every transition."""
    S = int(n_states if n_states is not None else rng.integers(2, 7))
    P = rng.uniform(0.05, 1.0, size=(2, S, S))
    P /= P.sum(axis=2, keepdims=True)
    rewards: dict[tuple[int, int, int], ce.RewardDist] = {}
    for ell in (1, 2):
        for x in range(S):
            for y in range(S):
                kind = rng.integers(0, 4)
                if kind == 0:
                    rewards[(ell, x, y)] = ce.Constant(float(rng.uniform(-2, 2)))
                elif kind == 1:
                    rewards[(ell, x, y)] = ce.Bernoulli(float(rng.uniform(0.05, 0.95)))
                elif kind == 2:
                    a = float(rng.uniform(-2, 1))
                    rewards[(ell, x, y)] = ce.Uniform(a, a + float(rng.uniform(0.1, 2)))
                else:
                    k = int(rng.integers(2, 5))
                    probs = rng.uniform(0.1, 1.0, k)
                    probs /= probs.sum()
                    rewards[(ell, x, y)] = ce.DiscreteFinite(
                        tuple(float(v) for v in rng.uniform(-2, 2, k)),
                        tuple(float(p) for p in probs),
                    )
    return ce.make_spec(P, rewards)


# ---------------------------------------------------------------------------
# Session cache of heavy Monte Carlo scenarios (shared across modules).
# Scenario definitions are frozen here so every consumer sees the same data.

N_BIG = 100_000
REPS_BIG = 2000
THREADS = 2


SCENARIO_SEEDS = {
    "markov_kstar": 1201,
    "markov_half": 1202,
    "regen_q_half": 1203,
    "regen_pstar": 1204,
    "eti": 1205,
}


class ScenarioCache:
    def __init__(self, w2b: TwoStateBundle):
        self.w2 = w2b
        self._cache: dict[str, ce.McSummary] = {}

    def _compute(self, name: str) -> ce.McSummary:
        b = self.w2
        spec, an = b.spec, b.analysis
        seed = SCENARIO_SEEDS[name]
        if name == "markov_kstar":
            policy = ce.StationaryMarkov(b.design.p_star[0])
        elif name == "markov_half":
            policy = ce.StationaryMarkov(np.full(2, 0.5))
        elif name == "regen_q_half":
            p_r = ce.p_from_q(0.5, float(an.eta[0, 0]), float(an.eta[1, 0]))
            policy = ce.Regenerative(x_r=0, p_r=p_r)
        elif name == "regen_pstar":
            policy = ce.Regenerative(x_r=0, p_r=b.regen.p_star)
        elif name == "eti":
            return ce.monte_carlo(
                spec, ce.OnlineEtiConfig(), N_BIG, 500, seed, threads=THREADS, collect=True
            )
        else:
            raise KeyError(name)
        return ce.monte_carlo(spec, policy, N_BIG, REPS_BIG, seed, threads=THREADS, collect=True)

    def get(self, name: str) -> ce.McSummary:
        if name not in self._cache:
            self._cache[name] = self._compute(name)
        return self._cache[name]


@pytest.fixture(scope="session")
def scenarios(w2) -> ScenarioCache:
    return ScenarioCache(w2)
