"""Sampling policies and policy-limit bookkeeping.

Every policy exposes the same step-decision interface: ``decide(x, u)``
returns the chain to run at the current state ``x`` given one uniform
draw ``u`` (consumed whether or not the decision is random, which keeps
random streams aligned across engines).  The rule is always
"chain 1 iff u <= p(1, x)".

A policy-limit candidate ``kappa`` is an array of shape ``(2, S)`` of
long-run visit fractions per (chain, state).  Membership in the limit
polytope requires balance, unit mass, and nonnegativity; see
:func:`kappa_membership`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chains import NotIrreducibleError, is_irreducible, stationary_distribution

BALANCE_TOL = 1e-9
MASS_TOL = 1e-12
NONNEG_TOL = -1e-12


class ZeroMassError(ValueError):
    """kappa(1, x) + kappa(2, x) = 0, no conditional probability exists."""


class MixtureReducibleError(ValueError):
    """The policy-induced mixture kernel is not irreducible."""


class UninitializedLatchError(RuntimeError):
    """A latched policy was asked to repeat before any latch was drawn."""


@dataclass(frozen=True)
class PolicyDecision:
    """Chosen chain plus the chain-1 probability used (for martingale audits)."""

    action: int
    p1: float


# ---------------------------------------------------------------------------
# Policy configurations (immutable, shareable)


@dataclass(frozen=True)
class StationaryMarkov:
    """Sample chain 1 at state x with fixed probability p1[x]."""

    p1: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p1, dtype=float))
        if p.ndim == 2:  # accept a full (2, S) table, keep the chain-1 row
            p = p[0]
        if (p < 0).any() or (p > 1).any():
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "p1", p)


@dataclass(frozen=True)
class Regenerative:
    """Redraw the chain only on visits to x_r (chain 1 w.p. p_r), else repeat."""

    x_r: int
    p_r: float

    def __post_init__(self):
        if not 0.0 <= self.p_r <= 1.0:
            raise ValueError("p_r must lie in [0, 1]")
        if self.x_r < 0:
            raise ValueError("x_r must be a valid state index")


@dataclass(frozen=True)
class Switchback:
    """Alternate chains in fixed blocks of block_length steps (biased baseline)."""

    block_length: int = 100

    def __post_init__(self):
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")


@dataclass(frozen=True)
class SingleChain:
    ell: int

    def __post_init__(self):
        if self.ell not in (1, 2):
            raise ValueError("ell must be 1 or 2")


@dataclass(frozen=True)
class CoopAlternating:
    """Cooperative design for the opposite-cycles example: run chain 1 at the
    top state, chain 2 at interior states, and alternate chains on successive
    visits to state 0."""

    n_states: int

    def __post_init__(self):
        if self.n_states < 2:
            raise ValueError("need at least two states")


PolicyConfig = StationaryMarkov | Regenerative | Switchback | SingleChain | CoopAlternating


# ---------------------------------------------------------------------------
# Runtime policy states (single-run mutable, never shared)


class _MarkovState:
    def __init__(self, cfg: StationaryMarkov):
        self.p1 = cfg.p1

    def decide(self, x: int, u: float) -> PolicyDecision:
        p1 = float(self.p1[x])
        return PolicyDecision(1 if u <= p1 else 2, p1)


class _RegenerativeState:
    # If the run does not start at x_r the initial latch is drawn at time 0
    # as if a regeneration had just occurred (same p_r, same limits).
    def __init__(self, cfg: Regenerative):
        self.x_r = cfg.x_r
        self.p_r = cfg.p_r
        self.latch: int | None = None

    def decide(self, x: int, u: float) -> PolicyDecision:
        if x == self.x_r or self.latch is None:
            self.latch = 1 if u <= self.p_r else 2
            return PolicyDecision(self.latch, self.p_r)
        return PolicyDecision(self.latch, 1.0 if self.latch == 1 else 0.0)


class _SwitchbackState:
    def __init__(self, cfg: Switchback):
        self.D = cfg.block_length
        self.step = 0

    def decide(self, x: int, u: float) -> PolicyDecision:
        a = 1 if (self.step // self.D) % 2 == 0 else 2
        self.step += 1
        return PolicyDecision(a, 1.0 if a == 1 else 0.0)


class _SingleChainState:
    def __init__(self, cfg: SingleChain):
        self.ell = cfg.ell

    def decide(self, x: int, u: float) -> PolicyDecision:
        return PolicyDecision(self.ell, 1.0 if self.ell == 1 else 0.0)


class _CoopState:
    def __init__(self, cfg: CoopAlternating):
        self.top = cfg.n_states - 1
        self.next_at_zero = 1

    def decide(self, x: int, u: float) -> PolicyDecision:
        if x == self.top:
            return PolicyDecision(1, 1.0)
        if x != 0:
            return PolicyDecision(2, 0.0)
        a = self.next_at_zero
        self.next_at_zero = 3 - a
        return PolicyDecision(a, 1.0 if a == 1 else 0.0)


def make_policy_state(config: PolicyConfig):
    """Fresh runtime state for one run of ``config``."""
    if isinstance(config, StationaryMarkov):
        return _MarkovState(config)
    if isinstance(config, Regenerative):
        return _RegenerativeState(config)
    if isinstance(config, Switchback):
        return _SwitchbackState(config)
    if isinstance(config, SingleChain):
        return _SingleChainState(config)
    if isinstance(config, CoopAlternating):
        return _CoopState(config)
    raise TypeError(f"unknown policy config {type(config).__name__}")


def decide(state, x: int, u: float) -> PolicyDecision:
    """Step-decision entry point shared by all policy families."""
    return state.decide(x, u)


# ---------------------------------------------------------------------------
# Policy-limit machinery


def markov_from_kappa(kappa: np.ndarray) -> np.ndarray:
    """Conditional sampling probabilities p(ell, x) = kappa / (kappa1 + kappa2).

    Returns shape (2, S).  Raises :class:`ZeroMassError` where both entries
    vanish.
    """
    kappa = np.asarray(kappa, dtype=float)
    mass = kappa.sum(axis=0)
    zero = np.nonzero(mass == 0.0)[0]
    if zero.size:
        raise ZeroMassError(f"kappa mass is zero at states {zero.tolist()}")
    return kappa / mass


def kappa_from_markov(p: np.ndarray, P1: np.ndarray, P2: np.ndarray) -> np.ndarray:
    """Policy limits of a stationary Markov policy.

    Builds the mixture kernel Q(x, y) = p(1,x) P1(x,y) + p(2,x) P2(x,y),
    finds its stationary distribution zeta, and returns
    kappa(ell, x) = zeta(x) p(ell, x).
    """
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = np.stack([p, 1.0 - p])
    Q = p[0][:, None] * np.asarray(P1) + p[1][:, None] * np.asarray(P2)
    try:
        zeta = stationary_distribution(Q)
    except NotIrreducibleError as exc:
        raise MixtureReducibleError(str(exc)) from exc
    return zeta[None, :] * p


def regenerative_markov_equivalent(q_r: float, pi1: np.ndarray, pi2: np.ndarray) -> np.ndarray:
    """Markov policy with the same limits as a regenerative policy whose
    long-run chain-1 sample fraction is q_r:
    p(x) = q_r pi1(x) / (q_r pi1(x) + (1 - q_r) pi2(x))."""
    pi1 = np.asarray(pi1, dtype=float)
    pi2 = np.asarray(pi2, dtype=float)
    w1 = q_r * pi1
    return w1 / (w1 + (1.0 - q_r) * pi2)


def q_from_p(p_r: float, eta1: float, eta2: float) -> float:
    """Long-run chain-1 sample fraction of a stationary regenerative policy:
    q = p eta1 / (p eta1 + (1-p) eta2)."""
    return p_r * eta1 / (p_r * eta1 + (1.0 - p_r) * eta2)


def p_from_q(q_r: float, eta1: float, eta2: float) -> float:
    """Inverse of :func:`q_from_p`: the per-regeneration chain-1 probability
    that yields sample fraction q: p = q eta2 / ((1-q) eta1 + q eta2)."""
    return q_r * eta2 / ((1.0 - q_r) * eta1 + q_r * eta2)


@dataclass(frozen=True)
class KappaMembership:
    """Residual report for the three policy-limit constraints."""

    balance_residual: float
    mass_error: float
    min_entry: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "passed",
            self.balance_residual <= BALANCE_TOL
            and abs(self.mass_error) <= MASS_TOL
            and self.min_entry >= NONNEG_TOL,
        )


def kappa_membership(kappa: np.ndarray, P1: np.ndarray, P2: np.ndarray) -> KappaMembership:
    """Check kappa against the policy-limit polytope.

    Constraints: for every y, kappa(1,y) + kappa(2,y) equals the inflow
    sum_{ell,x} kappa(ell,x) P(ell,x,y); total mass is 1; entries are
    nonnegative.  Tolerances 1e-9 / 1e-12 / -1e-12.
    """
    kappa = np.asarray(kappa, dtype=float)
    inflow = kappa[0] @ np.asarray(P1) + kappa[1] @ np.asarray(P2)
    outflow = kappa.sum(axis=0)
    return KappaMembership(
        balance_residual=float(np.max(np.abs(outflow - inflow))),
        mass_error=float(kappa.sum() - 1.0),
        min_entry=float(kappa.min()),
    )


def empirical_limits(gamma_counts: np.ndarray, n: int) -> np.ndarray:
    """Realized visit fractions Gamma_n / n, shape (2, S)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.asarray(gamma_counts, dtype=float) / n
