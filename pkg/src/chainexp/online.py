"""Adaptive experimental designs.

Two online policies are provided behind the same decide/observe interface
the simulator drives:

* the per-state adaptive design (``eti``): maintains the full plug-in
  estimate, repeatedly re-solves the optimal-limits program, and samples
  each state with the solved proportion plus a forced-exploration floor
  that decays like (state visit count)^-beta;
* the regenerative adaptive design (``eti2``): switches chains only at a
  fixed regeneration state, estimates per-chain cycle statistics, and
  steers the per-regeneration probability toward the closed-form optimum
  with an m^-1/2 exploration floor (m = completed cycles).

Re-solve scheduling for the per-state design defaults to "pow2" (re-solve
whenever some state's visit count crosses a power of two, warm-started);
"every-step" re-solves after every observation, matching the idealized
per-step description at a large constant cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .design import solve_optimal_kappa
from .estimators import MleEstimate, StepRecord, SufficientStats, mle_alpha
from .policies import PolicyDecision

RESOLVE_MODES = ("pow2", "every-step")


@dataclass(frozen=True)
class OnlineEtiConfig:
    resolve: str = "pow2"
    beta: float = 0.5

    def __post_init__(self):
        if self.resolve not in RESOLVE_MODES:
            raise ValueError(f"resolve must be one of {RESOLVE_MODES}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")


@dataclass(frozen=True)
class OnlineEti2Config:
    x_r: int

    def __post_init__(self):
        if self.x_r < 0:
            raise ValueError("x_r must be a valid state index")


class OnlineEtiState:
    """Single-run mutable state of the per-state adaptive design."""

    def __init__(self, n_states: int, config: OnlineEtiConfig = OnlineEtiConfig()):
        self.config = config
        self.stats = SufficientStats.empty(n_states)
        self.visit_counts = np.zeros(n_states, dtype=np.int64)
        self.next_pow2 = np.ones(n_states, dtype=np.int64)
        self.kappa_hat: np.ndarray | None = None
        # chain-1 proportion per state; negative marks "no design yet"
        self.kappa_prop1 = np.full(n_states, -1.0)
        self.estimate: MleEstimate | None = None
        self.solver_failures = 0
        self.resolves = 0

    @property
    def j_reached(self) -> bool:
        return self.stats.j_reached

    def decision_p1(self, x: int) -> float:
        return float(
            _kernels.eti_decision_p1(
                self.kappa_prop1[x],
                self.visit_counts[x],
                1 if self.stats.j_reached else 0,
                0 if self.kappa_hat is None else 1,
                self.config.beta,
            )
        )

    def decide(self, x: int, u: float) -> PolicyDecision:
        p1 = self.decision_p1(x)
        return PolicyDecision(1 if u <= p1 else 2, p1)

    def observe(self, rec: StepRecord) -> "OnlineEtiState":
        was_j = self.stats.j_reached
        self.stats.update(rec)  # also runs the incremental stopping-time check
        self.visit_counts[rec.prev_state] += 1
        if not was_j and self.stats.j_reached:
            self.init_thresholds()
            self.resolve_now()
        elif self.stats.j_reached:
            if self.config.resolve == "every-step":
                self.resolve_now()
            elif self.visit_counts[rec.prev_state] >= self.next_pow2[rec.prev_state]:
                self.resolve_now()
                self.bump_threshold(rec.prev_state)
        return self

    # -- hooks shared with the segmented compiled driver ------------------

    def init_thresholds(self) -> None:
        for x in range(self.next_pow2.shape[0]):
            np2 = 1
            while np2 <= self.visit_counts[x]:
                np2 *= 2
            self.next_pow2[x] = np2

    def bump_threshold(self, x: int) -> None:
        while self.next_pow2[x] <= self.visit_counts[x]:
            self.next_pow2[x] *= 2

    def resolve_now(self) -> None:
        """Refresh the plug-in estimate and re-solve the design program;
        on a failed solve (including an ill-conditioned fundamental-matrix
        inverse) the previous design and estimate are kept and counted."""
        try:
            est = mle_alpha(self.stats)
        except Exception:
            self.solver_failures += 1
            return
        self.estimate = est
        if est.pre_j:
            return
        start = None
        if self.kappa_hat is not None and (self.kappa_prop1 > 0.0).all() and (self.kappa_prop1 < 1.0).all():
            start = self.kappa_prop1
        try:
            sol = solve_optimal_kappa(
                est.pi_hat, est.sigma2_hat, est.p_hat[0], est.p_hat[1], start_p=start
            )
        except Exception:
            self.solver_failures += 1
            return
        self.kappa_hat = sol.kappa_star
        mass = sol.kappa_star.sum(axis=0)
        self.kappa_prop1 = np.where(mass > 0.0, sol.kappa_star[0] / mass, -1.0)
        self.resolves += 1

    def alpha_hat(self) -> float:
        return mle_alpha(self.stats).alpha_hat


def eti_step(state: OnlineEtiState, x: int, u: float) -> PolicyDecision:
    return state.decide(x, u)


def eti_observe(state: OnlineEtiState, rec: StepRecord) -> OnlineEtiState:
    return state.observe(rec)


class OnlineEti2State:
    """Single-run mutable state of the regenerative adaptive design.

    Cycle statistics are held as running sums (Y, eta, Y^2, Y eta, eta^2
    per chain) so the centered cycle variance is O(1) per regeneration.
    """

    def __init__(self, n_states: int, config: OnlineEti2Config):
        self.config = config
        self.x_r = config.x_r
        self.stats = SufficientStats.empty(n_states)
        self.m = 0
        self.cycles = np.zeros(2)
        self.sum_y = np.zeros(2)
        self.sum_eta = np.zeros(2)
        self.sum_yy = np.zeros(2)
        self.sum_yeta = np.zeros(2)
        self.sum_etaeta = np.zeros(2)
        self.alpha_chain = np.zeros(2)
        self.eta_hat = np.zeros(2)
        self.sbar_hat = np.zeros(2)
        self.p_r_hat = 0.5
        self.latch: int | None = None
        self.open_chain: int | None = None
        self.cycle_y = 0.0
        self.cycle_len = 0.0
        self.estimates_valid = False

    def _close_open_cycle(self) -> None:
        if self.open_chain is None:
            return
        a = self.open_chain
        y, ln = self.cycle_y, self.cycle_len
        self.cycles[a] += 1.0
        self.sum_y[a] += y
        self.sum_eta[a] += ln
        self.sum_yy[a] += y * y
        self.sum_yeta[a] += y * ln
        self.sum_etaeta[a] += ln * ln
        self.open_chain = None

    def _refresh_estimates(self) -> None:
        """Per-chain cycle estimates from completed cycles (both chains seen)."""
        for a in range(2):
            self.alpha_chain[a] = self.sum_y[a] / self.sum_eta[a]
            self.eta_hat[a] = self.sum_eta[a] / self.cycles[a]
            ss = (
                self.sum_yy[a]
                - 2.0 * self.alpha_chain[a] * self.sum_yeta[a]
                + self.alpha_chain[a] ** 2 * self.sum_etaeta[a]
            )
            self.sbar_hat[a] = np.sqrt(max(ss, 0.0) / self.sum_eta[a])
        self.estimates_valid = True

    def decide(self, x: int, u: float) -> PolicyDecision:
        if x == self.x_r or self.latch is None:
            self._close_open_cycle()
            self.m += 1
            if self.cycles[0] > 0.0 and self.cycles[1] > 0.0:
                self._refresh_estimates()
                if self.sbar_hat[0] > 0.0 and self.sbar_hat[1] > 0.0:
                    p_text = (
                        self.eta_hat[1]
                        * self.sbar_hat[0]
                        / (self.eta_hat[1] * self.sbar_hat[0] + self.eta_hat[0] * self.sbar_hat[1])
                    )
                    d = 1.0 / np.sqrt(self.m)
                    self.p_r_hat = (1.0 - d) * p_text + 0.5 * d
                else:
                    self.p_r_hat = 0.5
            else:
                self.p_r_hat = 0.5
            a = 1 if u <= self.p_r_hat else 2
            self.latch = a
            self.open_chain = a - 1
            self.cycle_y = 0.0
            self.cycle_len = 0.0
            return PolicyDecision(a, self.p_r_hat)
        return PolicyDecision(self.latch, 1.0 if self.latch == 1 else 0.0)

    def observe(self, rec: StepRecord) -> "OnlineEti2State":
        self.stats.update(rec)
        self.cycle_y += rec.reward
        self.cycle_len += 1.0
        return self

    def alpha_hat(self) -> float:
        """Cycle-based estimate alpha(2) - alpha(1); zero until both chains
        have a completed cycle."""
        if not self.estimates_valid:
            return 0.0
        return float(self.alpha_chain[1] - self.alpha_chain[0])

    def started_cycles(self, ell: int) -> float:
        """Cycles of chain ell begun so far (the open one included)."""
        a = ell - 1
        return float(self.cycles[a] + (1.0 if self.open_chain == a else 0.0))

    def total_cycle_steps(self) -> float:
        return float(self.sum_eta.sum() + self.cycle_len)


def eti2_step(state: OnlineEti2State, x: int, u: float) -> PolicyDecision:
    return state.decide(x, u)


def eti2_observe(state: OnlineEti2State, rec: StepRecord) -> OnlineEti2State:
    return state.observe(rec)
