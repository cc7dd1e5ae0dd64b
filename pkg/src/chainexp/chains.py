"""Two-chain environment model and its closed-form ground truth.

A :class:`ChainSpec` holds two irreducible transition matrices on a common
finite state space together with a bounded reward distribution for every
transition with positive probability.  Chains are labelled 1 and 2 (array
axis 0 holds chain 1 at index 0); states are integers ``0 .. n_states-1``.

:func:`analyze` derives everything the design and validation machinery
needs in closed form: stationary distributions, centered solutions of the
associated Poisson equations, per-state conditional variances, expected
return times, and the treatment effect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-12
POISSON_TOL = 1e-10
PROB_SUM_TOL = 1e-12


class SpecValidationError(ValueError):
    """Raised when a raw spec fails validation; carries the full issue list."""

    def __init__(self, issues: list["ValidationIssue"]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


class NotIrreducibleError(ValueError):
    pass


class SingularSystemError(RuntimeError):
    """Linear solve failed for an input that should have been regular."""


@dataclass(frozen=True)
class ValidationIssue:
    """One structured validation failure.

    ``code`` is one of ``not_stochastic``, ``reducible``, ``missing_reward``,
    ``invalid_distribution``; the remaining fields locate the problem.
    """

    code: str
    chain: int | None = None
    x: int | None = None
    y: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        loc = ",".join(
            str(v) for v in (self.chain, self.x, self.y) if v is not None
        )
        return f"{self.code}({loc}) {self.detail}".strip()


# ---------------------------------------------------------------------------
# Reward distributions


@dataclass(frozen=True)
class Constant:
    value: float

    def mean(self) -> float:
        return self.value

    def variance(self) -> float:
        return 0.0

    def support(self) -> tuple[float, float]:
        return (self.value, self.value)

    def inv_cdf(self, u: float) -> float:
        return self.value


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def mean(self) -> float:
        return self.p

    def variance(self) -> float:
        return self.p * (1.0 - self.p)

    def support(self) -> tuple[float, float]:
        return (0.0, 1.0)

    def inv_cdf(self, u: float) -> float:
        # F(0) = 1-p, so the generalized inverse maps u <= 1-p to 0.
        return 0.0 if u <= 1.0 - self.p else 1.0


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def variance(self) -> float:
        return (self.hi - self.lo) ** 2 / 12.0

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def inv_cdf(self, u: float) -> float:
        return self.lo + u * (self.hi - self.lo)


@dataclass(frozen=True)
class DiscreteFinite:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot(self.probs, (np.asarray(self.values) - m) ** 2))

    def support(self) -> tuple[float, float]:
        return (min(self.values), max(self.values))

    def inv_cdf(self, u: float) -> float:
        c = 0.0
        for v, p in zip(self.values, self.probs):
            c += p
            if u < c:
                return v
        return self.values[-1]


RewardDist = Constant | Bernoulli | Uniform | DiscreteFinite


def _check_dist(dist: RewardDist) -> str | None:
    """Return a reason string when ``dist`` is invalid, else None."""
    if isinstance(dist, Constant):
        if not np.isfinite(dist.value):
            return "constant value not finite"
    elif isinstance(dist, Bernoulli):
        if not (0.0 <= dist.p <= 1.0):
            return f"bernoulli p={dist.p} outside [0,1]"
    elif isinstance(dist, Uniform):
        if not (np.isfinite(dist.lo) and np.isfinite(dist.hi)):
            return "uniform bounds not finite"
        if dist.hi < dist.lo:
            return "uniform bounds reversed"
    elif isinstance(dist, DiscreteFinite):
        if len(dist.values) == 0 or len(dist.values) != len(dist.probs):
            return "discrete values/probs length mismatch"
        if not all(np.isfinite(v) for v in dist.values):
            return "discrete value not finite"
        if any(p < 0 for p in dist.probs):
            return "discrete negative probability"
        if abs(sum(dist.probs) - 1.0) > PROB_SUM_TOL:
            return f"discrete probs sum to {sum(dist.probs)!r}"
    else:
        return f"unsupported distribution {type(dist).__name__}"
    return None


# ---------------------------------------------------------------------------
# Spec


@dataclass(frozen=True)
class ChainSpec:
    """Validated two-chain experiment universe.

    ``transition`` has shape ``(2, S, S)``; ``rewards`` maps ``(ell, x, y)``
    with ``ell`` in {1, 2} to a distribution for every transition with
    positive probability.  Instances are immutable and safe to share across
    workers.  Construct via :func:`make_spec` or :func:`validate_spec`.
    """

    n_states: int
    transition: np.ndarray
    rewards: dict[tuple[int, int, int], RewardDist]
    chain_names: tuple[str, str] = ("chain-1", "chain-2")
    state_names: tuple[str, ...] = ()
    note: str = ""

    def P(self, ell: int) -> np.ndarray:
        """Transition matrix of chain ``ell`` (1 or 2)."""
        return self.transition[ell - 1]

    def reward_dist(self, ell: int, x: int, y: int) -> RewardDist:
        return self.rewards[(ell, x, y)]

    def mean_reward(self) -> np.ndarray:
        """r(ell, x) = sum_y P(ell,x,y) * E[R | ell,x,y], shape (2, S)."""
        r = np.zeros((2, self.n_states))
        for (ell, x, y), dist in self.rewards.items():
            r[ell - 1, x] += self.transition[ell - 1, x, y] * dist.mean()
        return r

    def reward_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-transition mean and variance arrays, each shape (2, S, S)."""
        m = np.zeros((2, self.n_states, self.n_states))
        v = np.zeros((2, self.n_states, self.n_states))
        for (ell, x, y), dist in self.rewards.items():
            m[ell - 1, x, y] = dist.mean()
            v[ell - 1, x, y] = dist.variance()
        return m, v


@dataclass(frozen=True)
class ChainAnalysis:
    """Closed-form ground truth derived from a :class:`ChainSpec`.

    All arrays are indexed ``[ell-1]`` on the first axis.  ``eta[ell-1, x]``
    is the expected return time to ``x`` under chain ``ell`` (equal to
    ``1 / pi(ell, x)``); ``sigma2_bar`` is the pi-weighted mean of
    ``sigma2``; ``treatment_effect`` is ``alpha(2) - alpha(1)``.
    """

    pi: np.ndarray
    mean_reward: np.ndarray
    gtilde: np.ndarray
    sigma2: np.ndarray
    sigma2_bar: np.ndarray
    eta: np.ndarray
    alpha: np.ndarray
    treatment_effect: float


# ---------------------------------------------------------------------------
# Operations


def is_irreducible(P: np.ndarray) -> bool:
    """True iff the directed graph on edges {(x, y): P[x, y] > 0} is strongly
    connected.  Rows of all zeros therefore fail."""
    P = np.asarray(P)
    n = P.shape[0]
    if n == 0:
        return False
    adj = P > 0.0
    for mat in (adj, adj.T):
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            x = stack.pop()
            for y in np.nonzero(mat[x])[0]:
                if not seen[y]:
                    seen[y] = True
                    stack.append(int(y))
        if not seen.all():
            return False
    return True


def _solve_refined(A: np.ndarray, b: np.ndarray, rounds: int = 2) -> np.ndarray:
    """Dense LU solve with a couple of iterative-refinement rounds."""
    try:
        x = np.linalg.solve(A, b)
        for _ in range(rounds):
            resid = b - A @ x
            if np.max(np.abs(resid)) < 1e-15:
                break
            x = x + np.linalg.solve(A, resid)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    return x


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Unique pi with pi P = pi, sum(pi) = 1 for an irreducible row-stochastic P.

    Solves (P^T - I) with the last row replaced by the normalization row.
    Raises :class:`NotIrreducibleError` when P is not irreducible.
    """
    P = np.asarray(P, dtype=float)
    if not is_irreducible(P):
        raise NotIrreducibleError("matrix is not irreducible")
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = _solve_refined(A, b)
    return pi


def poisson_solve(P: np.ndarray, r: np.ndarray, pi: np.ndarray | None = None) -> np.ndarray:
    """Centered Poisson solution gtilde = (I - P + Pi)^{-1} r.

    Pi is the rank-one matrix with every row equal to the stationary
    distribution; the returned solution satisfies (I - P) g = r - (pi r) e
    and pi g = pi r.
    """
    P = np.asarray(P, dtype=float)
    r = np.asarray(r, dtype=float)
    if pi is None:
        pi = stationary_distribution(P)
    n = P.shape[0]
    fundamental = np.eye(n) - P + np.tile(pi, (n, 1))
    return _solve_refined(fundamental, r)


def state_variance(spec: ChainSpec, ell: int, gtilde: np.ndarray | None = None) -> np.ndarray:
    """sigma^2(ell, x): conditional variance of gtilde(X1) + R1 given state x.

    Sum of the transition term sum_y P [g(y) - (Pg)(x)]^2 and the reward
    term sum_y P Var(R | ell, x, y), both exact from closed-form moments.
    """
    P = spec.P(ell)
    if gtilde is None:
        gtilde = poisson_solve(P, spec.mean_reward()[ell - 1])
    pg = P @ gtilde
    trans_term = np.einsum("xy,xy->x", P, (gtilde[None, :] - pg[:, None]) ** 2)
    _, var_r = spec.reward_moments()
    reward_term = np.einsum("xy,xy->x", P, var_r[ell - 1])
    return trans_term + reward_term


def single_chain_clt_variance(P: np.ndarray, r: np.ndarray) -> float:
    """Asymptotic variance of sqrt(n) times the centered running reward
    average for a single irreducible chain: pi g^2 - pi (P g)^2."""
    pi = stationary_distribution(P)
    g = poisson_solve(P, np.asarray(r, dtype=float), pi=pi)
    val = float(pi @ g**2 - pi @ (np.asarray(P) @ g) ** 2)
    return max(val, 0.0)


def analyze(spec: ChainSpec) -> ChainAnalysis:
    """Compute the full closed-form ground truth for a validated spec."""
    S = spec.n_states
    pi = np.zeros((2, S))
    gtilde = np.zeros((2, S))
    sigma2 = np.zeros((2, S))
    r = spec.mean_reward()
    for ell in (1, 2):
        pi[ell - 1] = stationary_distribution(spec.P(ell))
        gtilde[ell - 1] = poisson_solve(spec.P(ell), r[ell - 1], pi=pi[ell - 1])
        sigma2[ell - 1] = state_variance(spec, ell, gtilde=gtilde[ell - 1])
    alpha = np.einsum("ls,ls->l", pi, r)
    return ChainAnalysis(
        pi=pi,
        mean_reward=r,
        gtilde=gtilde,
        sigma2=sigma2,
        sigma2_bar=np.einsum("ls,ls->l", pi, sigma2),
        eta=1.0 / pi,
        alpha=alpha,
        treatment_effect=float(alpha[1] - alpha[0]),
    )


# ---------------------------------------------------------------------------
# Validation


def make_spec(
    transition: np.ndarray,
    rewards: dict[tuple[int, int, int], RewardDist],
    *,
    default_reward: RewardDist | None = None,
    chain_names: tuple[str, str] = ("chain-1", "chain-2"),
    state_names: tuple[str, ...] = (),
    note: str = "",
) -> ChainSpec:
    """Validate raw arrays and reward maps into a :class:`ChainSpec`.

    Collects every violation (row sums, negative entries, reducibility,
    missing or invalid rewards) and raises :class:`SpecValidationError`
    with the full list rather than stopping at the first.  Transitions
    with positive probability and no reward entry take ``default_reward``
    when given, otherwise they are reported as ``missing_reward``.
    """
    transition = np.asarray(transition, dtype=float)
    if transition.ndim != 3 or transition.shape[0] != 2 or transition.shape[1] != transition.shape[2]:
        raise SpecValidationError(
            [ValidationIssue("invalid_distribution", detail="transition must have shape (2, S, S)")]
        )
    S = transition.shape[1]
    issues: list[ValidationIssue] = []

    for ell in (1, 2):
        P = transition[ell - 1]
        rows_ok = True
        for x in range(S):
            row = P[x]
            if (row < 0.0).any() or (row > 1.0).any() or abs(row.sum() - 1.0) > ROW_SUM_TOL:
                rows_ok = False
                issues.append(
                    ValidationIssue("not_stochastic", chain=ell, x=x, detail=f"row sums to {row.sum()!r}")
                )
        if rows_ok and not is_irreducible(P):
            issues.append(ValidationIssue("reducible", chain=ell))

    full_rewards = dict(rewards)
    for (ell, x, y), dist in rewards.items():
        reason = _check_dist(dist)
        if reason is not None:
            issues.append(ValidationIssue("invalid_distribution", chain=ell, x=x, y=y, detail=reason))
    for ell in (1, 2):
        for x in range(S):
            for y in range(S):
                if transition[ell - 1, x, y] > 0.0 and (ell, x, y) not in full_rewards:
                    if default_reward is not None:
                        full_rewards[(ell, x, y)] = default_reward
                    else:
                        issues.append(ValidationIssue("missing_reward", chain=ell, x=x, y=y))

    if issues:
        raise SpecValidationError(issues)
    if not state_names:
        state_names = tuple(str(x) for x in range(S))
    return ChainSpec(
        n_states=S,
        transition=transition,
        rewards=full_rewards,
        chain_names=chain_names,
        state_names=state_names,
        note=note,
    )


def dist_from_dict(d: dict) -> RewardDist:
    """Parse one reward distribution from its JSON form."""
    kind = d.get("type")
    if kind == "constant":
        return Constant(float(d["value"]))
    if kind == "bernoulli":
        return Bernoulli(float(d["p"]))
    if kind == "uniform":
        return Uniform(float(d["a"]), float(d["b"]))
    if kind == "discrete":
        return DiscreteFinite(tuple(float(v) for v in d["values"]), tuple(float(p) for p in d["probs"]))
    raise SpecValidationError(
        [ValidationIssue("invalid_distribution", detail=f"unknown type {kind!r}")]
    )


def validate_spec(raw: dict) -> ChainSpec:
    """Validate a raw spec document (parsed JSON) into a :class:`ChainSpec`.

    Schema::

        {"n_states": S,
         "chains": [{"P": [[...]], "rewards": [{"x": 0, "y": 1,
                                                "dist": {"type": "bernoulli", "p": 0.5}}]},
                    {...}],
         "chain_names": [...], "state_names": [...], "note": "..."}

    Omitted (x, y) rewards default to Constant(0).
    """
    try:
        S = int(raw["n_states"])
        chains = raw["chains"]
        if len(chains) != 2:
            raise KeyError("exactly two chains required")
        transition = np.array([np.asarray(c["P"], dtype=float) for c in chains])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError(
            [ValidationIssue("invalid_distribution", detail=f"malformed document: {exc}")]
        ) from exc
    if transition.shape != (2, S, S):
        raise SpecValidationError(
            [ValidationIssue("invalid_distribution", detail=f"P shape {transition.shape} != (2, {S}, {S})")]
        )
    rewards: dict[tuple[int, int, int], RewardDist] = {}
    for ell, c in enumerate(chains, start=1):
        for entry in c.get("rewards", []):
            rewards[(ell, int(entry["x"]), int(entry["y"]))] = dist_from_dict(entry["dist"])
    return make_spec(
        transition,
        rewards,
        default_reward=Constant(0.0),
        chain_names=tuple(raw.get("chain_names", ("chain-1", "chain-2"))),
        state_names=tuple(raw.get("state_names", ())),
        note=str(raw.get("note", "")),
    )
