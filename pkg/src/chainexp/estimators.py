"""Online sufficient statistics and the two treatment-effect estimators.

:class:`SufficientStats` accumulates the five count/sum families from a
single experiment trajectory.  From them the plug-in MLE reconstructs the
transition matrices, stationary distributions, reward moments, Poisson
solutions and per-state variances; the sample-average estimator (SAE)
needs only the per-chain reward totals.

Before the stopping time at which both estimated transition matrices
become irreducible, the MLE falls back to the fixed convention: uniform
stationary estimates, zero reward estimates, zero treatment effect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import is_irreducible, poisson_solve, stationary_distribution


class OutOfOrderStepError(ValueError):
    pass


@dataclass(frozen=True)
class StepRecord:
    """One observed transition: at step ``step`` the policy ran ``action``
    from ``prev_state``, received ``reward`` and landed in ``next_state``."""

    step: int
    prev_state: int
    action: int
    reward: float
    next_state: int


@dataclass
class SufficientStats:
    """Count and reward-sum families for one run (single-owner mutable).

    ``gamma[ell-1, x]`` counts (chain, state) visits, ``phi`` transition
    counts, ``theta`` reward sums per (chain, state), ``psi`` and
    ``upsilon`` reward sums and squared-reward sums per transition.
    Arrays are float64 so that exact synthetic (non-integer) counts can be
    fed to the estimators in closed-loop tests.

    ``j_reached`` flips to True at the first update after which both
    estimated transition matrices are irreducible; the check runs only
    when a previously unseen transition is recorded and never again once
    it has passed.
    """

    n_states: int
    gamma: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    upsilon: np.ndarray
    n: int = 0
    j_reached: bool = False
    j: int | None = None

    @classmethod
    def empty(cls, n_states: int) -> "SufficientStats":
        S = n_states
        return cls(
            n_states=S,
            gamma=np.zeros((2, S)),
            phi=np.zeros((2, S, S)),
            theta=np.zeros((2, S)),
            psi=np.zeros((2, S, S)),
            upsilon=np.zeros((2, S, S)),
        )

    def update(self, rec: StepRecord) -> "SufficientStats":
        """Apply one step record in order; returns self for chaining."""
        if rec.step != self.n + 1:
            raise OutOfOrderStepError(f"expected step {self.n + 1}, got {rec.step}")
        if rec.action not in (1, 2):
            raise ValueError("action must be 1 or 2")
        a, x, y, r = rec.action - 1, rec.prev_state, rec.next_state, rec.reward
        new_edge = self.phi[a, x, y] == 0.0
        self.gamma[a, x] += 1.0
        self.phi[a, x, y] += 1.0
        self.theta[a, x] += r
        self.psi[a, x, y] += r
        self.upsilon[a, x, y] += r * r
        self.n += 1
        if not self.j_reached and new_edge:
            self.recheck_irreducibility()
        return self

    def recheck_irreducibility(self) -> bool:
        """Re-run the stopping-time check against the current counts."""
        if not self.j_reached and is_irreducible(self.phi[0]) and is_irreducible(self.phi[1]):
            self.j_reached = True
            self.j = self.n
        return self.j_reached

    def visit_counts(self) -> np.ndarray:
        """M(x) = gamma(1, x) + gamma(2, x)."""
        return self.gamma.sum(axis=0)


def stats_update(stats: SufficientStats, rec: StepRecord) -> SufficientStats:
    """Functional alias for :meth:`SufficientStats.update`."""
    return stats.update(rec)


@dataclass(frozen=True)
class MleEstimate:
    """Everything the plug-in MLE derives from one set of sufficient stats.

    With ``pre_j`` set, ``pi_hat`` is uniform and ``r_hat``, ``gtilde_hat``,
    ``sigma2_hat`` and ``alpha_hat`` are zero by convention; ``p_hat``,
    ``s_hat`` and ``t_hat`` are always the raw count ratios.
    """

    p_hat: np.ndarray
    pi_hat: np.ndarray
    r_hat: np.ndarray
    s_hat: np.ndarray
    t_hat: np.ndarray
    sigma2_hat: np.ndarray
    gtilde_hat: np.ndarray
    alpha_hat: float
    pre_j: bool


def mle_transition(stats: SufficientStats) -> np.ndarray:
    """P_hat(ell, x, y) = phi / max(gamma, 1); unvisited rows stay all-zero."""
    denom = np.maximum(stats.gamma, 1.0)
    return stats.phi / denom[:, :, None]


def mle_stationary(p1_hat: np.ndarray, p2_hat: np.ndarray) -> tuple[np.ndarray, bool]:
    """Stationary estimates for both chains, or the uniform sentinel.

    Returns ``(pi_hat, pre_j)`` where ``pre_j`` is True when either matrix
    fails irreducibility (all-zero rows included); the sentinel is the
    uniform distribution on both chains.
    """
    S = p1_hat.shape[0]
    if is_irreducible(p1_hat) and is_irreducible(p2_hat):
        return np.stack([stationary_distribution(p1_hat), stationary_distribution(p2_hat)]), False
    return np.full((2, S), 1.0 / S), True


def mle_alpha(stats: SufficientStats) -> MleEstimate:
    """Assemble the full nonparametric MLE from the sufficient statistics."""
    S = stats.n_states
    denom = np.maximum(stats.gamma, 1.0)
    denom_t = np.maximum(stats.phi, 1.0)
    p_hat = stats.phi / denom[:, :, None]
    s_hat = stats.psi / denom_t
    t_hat = stats.upsilon / denom_t
    if not stats.j_reached:
        return MleEstimate(
            p_hat=p_hat,
            pi_hat=np.full((2, S), 1.0 / S),
            r_hat=np.zeros((2, S)),
            s_hat=s_hat,
            t_hat=t_hat,
            sigma2_hat=np.zeros((2, S)),
            gtilde_hat=np.zeros((2, S)),
            alpha_hat=0.0,
            pre_j=True,
        )
    r_hat = stats.theta / denom
    pi_hat = np.zeros((2, S))
    gtilde_hat = np.zeros((2, S))
    sigma2_hat = np.zeros((2, S))
    for a in range(2):
        pi_hat[a] = stationary_distribution(p_hat[a])
        gtilde_hat[a] = poisson_solve(p_hat[a], r_hat[a], pi=pi_hat[a])
        pg = p_hat[a] @ gtilde_hat[a]
        trans = np.einsum("xy,xy->x", p_hat[a], (gtilde_hat[a][None, :] - pg[:, None]) ** 2)
        reward = np.einsum("xy,xy->x", p_hat[a], t_hat[a] - s_hat[a] ** 2)
        sigma2_hat[a] = np.maximum(trans + reward, 0.0)
    alpha_hat = float(pi_hat[1] @ r_hat[1] - pi_hat[0] @ r_hat[0])
    return MleEstimate(
        p_hat=p_hat,
        pi_hat=pi_hat,
        r_hat=r_hat,
        s_hat=s_hat,
        t_hat=t_hat,
        sigma2_hat=sigma2_hat,
        gtilde_hat=gtilde_hat,
        alpha_hat=alpha_hat,
        pre_j=False,
    )


def mle_chain_alpha(stats: SufficientStats, ell: int) -> float | None:
    """Plug-in estimate of one chain's stationary reward, pi_hat r_hat,
    using only that chain's counts.  Returns None while the chain's own
    estimated matrix is still reducible (e.g. early in a single-chain run)."""
    a = ell - 1
    p_hat = stats.phi[a] / np.maximum(stats.gamma[a], 1.0)[:, None]
    if not is_irreducible(p_hat):
        return None
    pi_hat = stationary_distribution(p_hat)
    r_hat = stats.theta[a] / np.maximum(stats.gamma[a], 1.0)
    return float(pi_hat @ r_hat)


def alpha_known_pi(stats: SufficientStats, pi: np.ndarray) -> float:
    """Treatment-effect estimate sum_x pi(2,x) r_hat(2,x) - pi(1,x) r_hat(1,x)
    when the stationary distributions are known exactly (deterministic
    transition structures); only the rewards are estimated."""
    r_hat = stats.theta / np.maximum(stats.gamma, 1.0)
    pi = np.asarray(pi, dtype=float)
    return float(pi[1] @ r_hat[1] - pi[0] @ r_hat[0])


def sae_alpha(stats: SufficientStats) -> float:
    """Sample-average estimator: mean chain-2 reward minus mean chain-1 reward.

    Ordered to estimate the treatment effect alpha(2) - alpha(1); empty
    chains contribute zero via the max(1, count) guard.
    """
    n1 = stats.gamma[0].sum()
    n2 = stats.gamma[1].sum()
    return float(stats.theta[1].sum() / max(1.0, n2) - stats.theta[0].sum() / max(1.0, n1))
