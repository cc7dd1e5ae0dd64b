"""Trajectory simulation and seeded Monte Carlo validation harness.

Randomness
----------
Each replication draws from three named Philox (counter-based) substreams,
derived as::

    SeedSequence(entropy=base_seed, spawn_key=(rep, lane)).spawn(3)
    -> policy stream, transition stream, reward stream   (in that order)

``lane`` separates auxiliary runs that belong to the same replication
(e.g. the two single-chain runs of the isolation baseline).  Every step
consumes exactly one uniform from each stream, used or not, so results are
reproducible across engines, platforms with IEEE-754 doubles, and any
thread count.

Engines
-------
``run`` drives a compiled kernel for every policy family by default, with
a pure-python reference loop behind ``engine="python"`` (and for the
per-step re-solve schedule of the adaptive design).  Both consume
identical streams through the same draw helpers and produce bit-identical
results; the tests assert this.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .chains import ChainSpec, Constant, Bernoulli, DiscreteFinite, Uniform, analyze, make_spec
from .estimators import (
    StepRecord,
    SufficientStats,
    alpha_known_pi,
    mle_alpha,
    mle_chain_alpha,
    sae_alpha,
)
from .online import OnlineEti2Config, OnlineEti2State, OnlineEtiConfig, OnlineEtiState
from .policies import (
    CoopAlternating,
    PolicyConfig,
    Regenerative,
    SingleChain,
    StationaryMarkov,
    Switchback,
    make_policy_state,
)

AnyPolicy = PolicyConfig | OnlineEtiConfig | OnlineEti2Config


# ---------------------------------------------------------------------------
# Spec encoding shared by both engines


@dataclass(frozen=True)
class SpecTables:
    trans_cdf: np.ndarray
    rew_kind: np.ndarray
    rew_a: np.ndarray
    rew_b: np.ndarray
    disc_off: np.ndarray
    disc_len: np.ndarray
    disc_val: np.ndarray
    disc_cdf: np.ndarray


def encode_tables(spec: ChainSpec) -> SpecTables:
    S = spec.n_states
    trans_cdf = np.cumsum(spec.transition, axis=2)
    rew_kind = np.zeros((2, S, S), dtype=np.int8)
    rew_a = np.zeros((2, S, S))
    rew_b = np.zeros((2, S, S))
    disc_off = np.zeros((2, S, S), dtype=np.int64)
    disc_len = np.zeros((2, S, S), dtype=np.int64)
    pool_val: list[float] = []
    pool_cdf: list[float] = []
    for (ell, x, y), dist in sorted(spec.rewards.items()):
        a = ell - 1
        if isinstance(dist, Constant):
            rew_kind[a, x, y] = 0
            rew_a[a, x, y] = dist.value
        elif isinstance(dist, Bernoulli):
            rew_kind[a, x, y] = 1
            rew_a[a, x, y] = dist.p
        elif isinstance(dist, Uniform):
            rew_kind[a, x, y] = 2
            rew_a[a, x, y] = dist.lo
            rew_b[a, x, y] = dist.hi
        elif isinstance(dist, DiscreteFinite):
            rew_kind[a, x, y] = 3
            disc_off[a, x, y] = len(pool_val)
            disc_len[a, x, y] = len(dist.values)
            pool_val.extend(dist.values)
            c = 0.0
            for p in dist.probs:
                c += p
                pool_cdf.append(c)
        else:
            raise TypeError(f"unsupported reward distribution {type(dist).__name__}")
    disc_val = np.asarray(pool_val if pool_val else [0.0])
    disc_cdf = np.asarray(pool_cdf if pool_cdf else [1.0])
    return SpecTables(trans_cdf, rew_kind, rew_a, rew_b, disc_off, disc_len, disc_val, disc_cdf)


def _tables_for(spec: ChainSpec) -> SpecTables:
    cached = spec.__dict__.get("_tables")
    if cached is None:
        cached = encode_tables(spec)
        object.__setattr__(spec, "_tables", cached)
    return cached


# ---------------------------------------------------------------------------
# Streams


def derive_streams(base_seed: int, rep: int = 0, lane: int = 0):
    """(policy, transition, reward) generators for one replication."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(rep, lane))
    kids = ss.spawn(3)
    return tuple(np.random.Generator(np.random.Philox(k)) for k in kids)


def sample_step(spec: ChainSpec, ell: int, x: int, rng_transition, rng_reward) -> tuple[int, float]:
    """One environment step of chain ``ell`` from state ``x``.

    The next state comes from one uniform of the transition stream by
    inverse CDF, the reward from one uniform of the independent reward
    stream.
    """
    t = _tables_for(spec)
    a = ell - 1
    y = int(_kernels.draw_next(t.trans_cdf, a, x, rng_transition.random()))
    r = float(
        _kernels.draw_reward(
            t.rew_kind, t.rew_a, t.rew_b, t.disc_off, t.disc_len, t.disc_val, t.disc_cdf,
            a, x, y, rng_reward.random(),
        )
    )
    return y, r


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class RunResult:
    seed: int
    rep: int
    n: int
    alpha_mle: float
    alpha_sae: float
    checkpoints: list[tuple[int, float, float, np.ndarray]]
    gamma_hat: np.ndarray
    diagnostics: dict
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EstimatorSummary:
    mean: float
    bias: float
    scaled_var: float
    scaled_var_ci_half: float


@dataclass(frozen=True)
class McSummary:
    reps: int
    n: int
    alpha_true: float
    mle: EstimatorSummary
    sae: EstimatorSummary
    mean_gamma: np.ndarray
    known_pi: EstimatorSummary | None = None
    samples_mle: np.ndarray | None = None
    samples_sae: np.ndarray | None = None


def _summarize(samples: np.ndarray, n: int, alpha_true: float) -> EstimatorSummary:
    mean = float(samples.mean())
    dev = samples - mean
    m2 = float((dev**2).mean())
    m4 = float((dev**4).mean())
    scaled_var = n * float(samples.var(ddof=1))
    half = 1.96 * n * math.sqrt(max(m4 - m2 * m2, 0.0) / samples.size)
    return EstimatorSummary(mean=mean, bias=mean - alpha_true, scaled_var=scaled_var, scaled_var_ci_half=half)


# ---------------------------------------------------------------------------
# Run driver


def _checkpoint_marks(n: int, every: int) -> list[int]:
    if every <= 0:
        return []
    marks = list(range(every, n + 1, every))
    if not marks or marks[-1] != n:
        marks.append(n)
    return marks


def _estimates(stats: SufficientStats) -> tuple[float, float]:
    return mle_alpha(stats).alpha_hat, sae_alpha(stats)


def run(
    spec: ChainSpec,
    policy: AnyPolicy,
    n: int,
    seed: int,
    *,
    rep: int = 0,
    lane: int = 0,
    x0: int = 0,
    checkpoint_every: int = 0,
    engine: str = "auto",
    known_pi: np.ndarray | None = None,
    keep_stats: bool = False,
) -> RunResult:
    """Simulate ``n`` steps of ``policy`` on ``spec``, estimating as it goes.

    Deterministic given (spec, policy, n, seed, rep, lane, x0).  The
    regenerative adaptive design always starts at its regeneration state.
    ``known_pi`` additionally computes the fixed-weight estimate for
    designs whose stationary distributions are known exactly;
    ``keep_stats`` attaches the raw sufficient statistics to the result.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_policy_shape(policy, spec.n_states)
    if isinstance(policy, StationaryMarkov) and policy.p1.shape[0] != spec.n_states:
        policy = StationaryMarkov(np.full(spec.n_states, float(policy.p1[0])))
    if isinstance(policy, OnlineEti2Config):
        x0 = policy.x_r
    if engine == "auto":
        if isinstance(policy, OnlineEtiConfig) and policy.resolve == "every-step":
            engine = "python"
        else:
            engine = "kernel"
    args = (spec, policy, n, seed, rep, lane, x0, checkpoint_every, known_pi, keep_stats)
    if engine == "kernel" and isinstance(policy, OnlineEtiConfig):
        return _run_eti_kernel(*args)
    if engine == "kernel" and isinstance(policy, OnlineEti2Config):
        return _run_eti2_kernel(*args)
    if engine == "kernel":
        return _run_static_kernel(*args)
    if engine == "python":
        return _run_python(*args)
    raise ValueError(f"unknown engine {engine!r}")


def _check_policy_shape(policy: AnyPolicy, n_states: int) -> None:
    if isinstance(policy, StationaryMarkov) and policy.p1.shape[0] not in (1, n_states):
        raise ValueError(f"policy has {policy.p1.shape[0]} states, spec has {n_states}")
    if isinstance(policy, (Regenerative, OnlineEti2Config)) and not 0 <= policy.x_r < n_states:
        raise ValueError(f"x_r={policy.x_r} outside [0, {n_states})")
    if isinstance(policy, CoopAlternating) and policy.n_states != n_states:
        raise ValueError(f"policy built for {policy.n_states} states, spec has {n_states}")


def _uniforms(seed: int, rep: int, lane: int, n: int):
    gp, gt, gr = derive_streams(seed, rep, lane)
    return gp.random(n), gt.random(n), gr.random(n)


def _static_kernel_args(policy: PolicyConfig, S: int):
    p1_arr = np.full(S, 0.5)
    kind, x_r, p_r, D, fixed_a, latch0 = _kernels.MARKOV, 0, 0.0, 1, 0, 0
    if isinstance(policy, StationaryMarkov):
        p1_arr = np.broadcast_to(policy.p1, (S,)).astype(float)
    elif isinstance(policy, Regenerative):
        kind, x_r, p_r, latch0 = _kernels.REGENERATIVE, policy.x_r, policy.p_r, -1
    elif isinstance(policy, Switchback):
        kind, D = _kernels.SWITCHBACK, policy.block_length
    elif isinstance(policy, SingleChain):
        kind, fixed_a = _kernels.SINGLE, policy.ell - 1
    elif isinstance(policy, CoopAlternating):
        kind, latch0 = _kernels.COOP, 0
    else:
        raise TypeError(f"no kernel for policy {type(policy).__name__}")
    return kind, p1_arr, x_r, p_r, D, fixed_a, latch0


def _finalize(
    spec, seed, rep, n, stats, checkpoints, switch_count, known_pi, keep_stats, extras=None
) -> RunResult:
    alpha_m, alpha_s = _estimates(stats)
    extras = dict(extras or {})
    if known_pi is not None:
        extras["alpha_known_pi"] = alpha_known_pi(stats, known_pi)
    if keep_stats:
        extras["stats"] = stats
    return RunResult(
        seed=seed,
        rep=rep,
        n=n,
        alpha_mle=alpha_m,
        alpha_sae=alpha_s,
        checkpoints=checkpoints,
        gamma_hat=stats.gamma / n,
        diagnostics={
            "j": stats.j,
            "switch_count": int(switch_count),
            "solver_failures": int(extras.pop("_solver_failures", 0)),
        },
        extras=extras,
    )


def _run_static_kernel(spec, policy, n, seed, rep, lane, x0, checkpoint_every, known_pi, keep_stats):
    S = spec.n_states
    t = _tables_for(spec)
    u_pol, u_trans, u_rew = _uniforms(seed, rep, lane, n)
    stats = SufficientStats.empty(S)
    kind, p1_arr, x_r, p_r, D, fixed_a, latch0 = _static_kernel_args(policy, S)
    istate = np.array([x0, latch0, -1, 0, 0], dtype=np.int64)
    marks = _checkpoint_marks(n, checkpoint_every)
    checkpoints: list[tuple[int, float, float, np.ndarray]] = []
    j = 0
    next_mark = iter(marks)
    mark = next(next_mark, None)
    while j < n:
        j_limit = mark if mark is not None else n
        taken, _ = _kernels.run_static(
            kind, p1_arr, x_r, p_r, D, fixed_a,
            j, j_limit, 0 if stats.j_reached else 1,
            u_pol, u_trans, u_rew,
            t.trans_cdf, t.rew_kind, t.rew_a, t.rew_b,
            t.disc_off, t.disc_len, t.disc_val, t.disc_cdf,
            stats.gamma, stats.phi, stats.theta, stats.psi, stats.upsilon,
            istate,
        )
        j += taken
        stats.n = j
        if not stats.j_reached:
            stats.recheck_irreducibility()
        if mark is not None and j == mark:
            am, asae = _estimates(stats)
            checkpoints.append((j, am, asae, stats.gamma / j))
            mark = next(next_mark, None)
    return _finalize(spec, seed, rep, n, stats, checkpoints, istate[_kernels.ISWITCH], known_pi, keep_stats)


def _run_eti2_kernel(spec, policy, n, seed, rep, lane, x0, checkpoint_every, known_pi, keep_stats):
    S = spec.n_states
    t = _tables_for(spec)
    u_pol, u_trans, u_rew = _uniforms(seed, rep, lane, n)
    stats = SufficientStats.empty(S)
    istate = np.array([x0, -1, -1, 0, 0, 0, -1], dtype=np.int64)
    fstate = np.zeros(_kernels.ETI2_STATE_LEN)
    fstate[_kernels.FP_HAT] = 0.5
    marks = _checkpoint_marks(n, checkpoint_every)
    checkpoints: list[tuple[int, float, float, np.ndarray]] = []
    j = 0
    next_mark = iter(marks)
    mark = next(next_mark, None)
    while j < n:
        j_limit = mark if mark is not None else n
        taken, _ = _kernels.run_eti2(
            policy.x_r,
            j, j_limit, 0 if stats.j_reached else 1,
            u_pol, u_trans, u_rew,
            t.trans_cdf, t.rew_kind, t.rew_a, t.rew_b,
            t.disc_off, t.disc_len, t.disc_val, t.disc_cdf,
            stats.gamma, stats.phi, stats.theta, stats.psi, stats.upsilon,
            istate, fstate,
        )
        j += taken
        stats.n = j
        if not stats.j_reached:
            stats.recheck_irreducibility()
        if mark is not None and j == mark:
            am, asae = _estimates(stats)
            checkpoints.append((j, am, asae, stats.gamma / j))
            mark = next(next_mark, None)
    k = _kernels
    cycles = fstate[[k.FC, k.FC + 1]]
    alpha_cycle = 0.0
    sbar = np.zeros(2)
    if cycles[0] > 0.0 and cycles[1] > 0.0:
        a0 = fstate[k.FY] / fstate[k.FETA]
        a1 = fstate[k.FY + 1] / fstate[k.FETA + 1]
        alpha_cycle = float(a1 - a0)
        for c, a_hat in ((0, a0), (1, a1)):
            ss = (
                fstate[k.FYY + c]
                - 2.0 * a_hat * fstate[k.FYETA + c]
                + a_hat * a_hat * fstate[k.FETAETA + c]
            )
            sbar[c] = np.sqrt(max(ss, 0.0) / fstate[k.FETA + c])
    extras = {
        "p_r_hat": float(fstate[k.FP_HAT]),
        "m": int(istate[k.IM]),
        "alpha_cycle": alpha_cycle,
        "sigma_bar_hat": sbar,
    }
    return _finalize(spec, seed, rep, n, stats, checkpoints, istate[k.ISWITCH], known_pi, keep_stats, extras)


def _run_eti_kernel(spec, policy, n, seed, rep, lane, x0, checkpoint_every, known_pi, keep_stats):
    S = spec.n_states
    t = _tables_for(spec)
    u_pol, u_trans, u_rew = _uniforms(seed, rep, lane, n)
    state = OnlineEtiState(S, policy)
    stats = state.stats
    istate = np.array([x0, 0, -1, 0, 0], dtype=np.int64)
    marks = _checkpoint_marks(n, checkpoint_every)
    checkpoints: list[tuple[int, float, float, np.ndarray]] = []
    p_snapshots: list[tuple[int, list[float]]] = []
    j = 0
    next_mark = iter(marks)
    mark = next(next_mark, None)
    while j < n:
        j_limit = mark if mark is not None else n
        taken, reason = _kernels.run_eti_segment(
            j, j_limit,
            u_pol, u_trans, u_rew,
            t.trans_cdf, t.rew_kind, t.rew_a, t.rew_b,
            t.disc_off, t.disc_len, t.disc_val, t.disc_cdf,
            stats.gamma, stats.phi, stats.theta, stats.psi, stats.upsilon,
            state.visit_counts, state.next_pow2, state.kappa_prop1,
            0 if state.kappa_hat is None else 1,
            1 if stats.j_reached else 0,
            policy.beta,
            istate,
        )
        j += taken
        stats.n = j
        if reason == _kernels.NEW_EDGE:
            if stats.recheck_irreducibility():
                state.init_thresholds()
                state.resolve_now()
        elif reason == _kernels.POW2_CROSSED:
            state.resolve_now()
            for x in range(S):
                state.bump_threshold(x)
        if mark is not None and j == mark:
            am, asae = _estimates(stats)
            checkpoints.append((j, am, asae, stats.gamma / j))
            p_snapshots.append((j, [state.decision_p1(x) for x in range(S)]))
            mark = next(next_mark, None)
    extras = {
        "kappa_hat": None if state.kappa_hat is None else state.kappa_hat.copy(),
        "resolves": state.resolves,
        "p_snapshots": p_snapshots,
        "_solver_failures": state.solver_failures,
    }
    return _finalize(spec, seed, rep, n, stats, checkpoints, istate[_kernels.ISWITCH], known_pi, keep_stats, extras)


def _run_python(spec, policy, n, seed, rep, lane, x0, checkpoint_every, known_pi, keep_stats):
    S = spec.n_states
    t = _tables_for(spec)
    u_pol, u_trans, u_rew = _uniforms(seed, rep, lane, n)
    if isinstance(policy, OnlineEtiConfig):
        state = OnlineEtiState(S, policy)
    elif isinstance(policy, OnlineEti2Config):
        state = OnlineEti2State(S, policy)
    else:
        state = make_policy_state(policy)
    online = hasattr(state, "observe")
    stats = state.stats if online else SufficientStats.empty(S)
    marks = set(_checkpoint_marks(n, checkpoint_every))
    checkpoints: list[tuple[int, float, float, np.ndarray]] = []
    p_snapshots: list[tuple[int, list[float]]] = []
    x = x0
    prev_a = -1
    switches = 0
    for j in range(n):
        dec = state.decide(x, u_pol[j])
        a = dec.action - 1
        y = int(_kernels.draw_next(t.trans_cdf, a, x, u_trans[j]))
        r = float(
            _kernels.draw_reward(
                t.rew_kind, t.rew_a, t.rew_b, t.disc_off, t.disc_len, t.disc_val, t.disc_cdf,
                a, x, y, u_rew[j],
            )
        )
        rec = StepRecord(step=j + 1, prev_state=x, action=dec.action, reward=r, next_state=y)
        if online:
            state.observe(rec)
        else:
            stats.update(rec)
        if prev_a >= 0 and a != prev_a:
            switches += 1
        prev_a = a
        x = y
        if (j + 1) in marks:
            am, asae = _estimates(stats)
            checkpoints.append((j + 1, am, asae, stats.gamma / (j + 1)))
            if isinstance(state, OnlineEtiState):
                p_snapshots.append((j + 1, [state.decision_p1(s) for s in range(S)]))
    extras: dict = {}
    if isinstance(state, OnlineEtiState):
        extras = {
            "kappa_hat": None if state.kappa_hat is None else state.kappa_hat.copy(),
            "resolves": state.resolves,
            "p_snapshots": p_snapshots,
            "_solver_failures": state.solver_failures,
        }
    elif isinstance(state, OnlineEti2State):
        extras = {
            "p_r_hat": state.p_r_hat,
            "m": state.m,
            "alpha_cycle": state.alpha_hat(),
            "sigma_bar_hat": state.sbar_hat.copy(),
        }
    return _finalize(spec, seed, rep, n, stats, checkpoints, switches, known_pi, keep_stats, extras)


# ---------------------------------------------------------------------------
# Monte Carlo harness


def monte_carlo(
    spec: ChainSpec,
    policy: AnyPolicy,
    n: int,
    reps: int,
    base_seed: int,
    *,
    threads: int = 1,
    alpha_true: float | None = None,
    engine: str = "auto",
    x0: int = 0,
    known_pi: np.ndarray | None = None,
    collect: bool = False,
) -> McSummary:
    """Seeded independent replications of :func:`run`, aggregated.

    Replication ``k`` uses substreams derived from (base_seed, k); the
    aggregation is a deterministic reduction in replication order, so the
    summary is independent of ``threads``.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if alpha_true is None:
        alpha_true = analyze(spec).treatment_effect
    mle_s = np.empty(reps)
    sae_s = np.empty(reps)
    kp_s = np.empty(reps) if known_pi is not None else None
    gamma_acc = np.zeros((2, spec.n_states))
    results: list[RunResult | None] = [None] * reps
    _tables_for(spec)  # encode once before fanning out

    def one(k: int) -> None:
        results[k] = run(
            spec, policy, n, base_seed, rep=k, x0=x0, engine=engine, known_pi=known_pi
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, range(reps)))
    else:
        for k in range(reps):
            one(k)
    for k in range(reps):
        res = results[k]
        mle_s[k] = res.alpha_mle
        sae_s[k] = res.alpha_sae
        if kp_s is not None:
            kp_s[k] = res.extras["alpha_known_pi"]
        gamma_acc += res.gamma_hat
    return McSummary(
        reps=reps,
        n=n,
        alpha_true=alpha_true,
        mle=_summarize(mle_s, n, alpha_true),
        sae=_summarize(sae_s, n, alpha_true),
        mean_gamma=gamma_acc / reps,
        known_pi=None if kp_s is None else _summarize(kp_s, n, alpha_true),
        samples_mle=mle_s if collect else None,
        samples_sae=sae_s if collect else None,
    )


# ---------------------------------------------------------------------------
# CLT validation report


@dataclass(frozen=True)
class CltReport:
    n: int
    reps: int
    predicted_var: float
    scaled_var: float
    variance_ratio: float
    ad_statistic: float
    ad_critical_5pct: float
    normal_ok: bool


def clt_report(
    spec: ChainSpec,
    policy: AnyPolicy,
    n: int,
    reps: int,
    base_seed: int,
    predicted_var: float,
    *,
    estimator: str = "mle",
    threads: int = 1,
    alpha_true: float | None = None,
) -> CltReport:
    """Compare the empirical law of sqrt(n) (alpha_hat - alpha) with its
    predicted normal limit: variance ratio plus an Anderson-Darling
    statistic on the standardized values."""
    from scipy import stats as sps

    summary = monte_carlo(
        spec, policy, n, reps, base_seed, threads=threads, alpha_true=alpha_true, collect=True
    )
    samples = summary.samples_mle if estimator == "mle" else summary.samples_sae
    emp = getattr(summary, estimator).scaled_var
    if predicted_var > 0.0:
        z = math.sqrt(n) * (samples - summary.alpha_true) / math.sqrt(predicted_var)
        ad = sps.anderson(z, dist="norm")
        crit = float(ad.critical_values[2])  # 5% level
        stat = float(ad.statistic)
    else:
        stat, crit = 0.0, math.inf
    return CltReport(
        n=n,
        reps=reps,
        predicted_var=predicted_var,
        scaled_var=emp,
        variance_ratio=emp / predicted_var if predicted_var > 0 else math.inf,
        ad_statistic=stat,
        ad_critical_5pct=crit,
        normal_ok=stat <= crit,
    )


# ---------------------------------------------------------------------------
# Opposite-cycles example (cooperative exploration)


def coop_example_spec(s: int, q1: float, q2: float) -> ChainSpec:
    """Two opposite deterministic cycles on s states with Bernoulli rewards
    earned only when leaving state 0: chain 1 walks forward, chain 2
    backward."""
    if s < 2:
        raise ValueError("s must be >= 2")
    P1 = np.zeros((s, s))
    P2 = np.zeros((s, s))
    for x in range(s):
        P1[x, (x + 1) % s] = 1.0
        P2[x, (x - 1) % s] = 1.0
    rewards = {
        (1, 0, 1 % s): Bernoulli(q1),
        (2, 0, (s - 1) % s): Bernoulli(q2),
    }
    return make_spec(
        np.stack([P1, P2]),
        rewards,
        default_reward=Constant(0.0),
        note=f"opposite {s}-cycles, rewards only at state 0",
    )


def coop_designed_policy(s: int) -> CoopAlternating:
    return CoopAlternating(n_states=s)


def isolation_difference(spec: ChainSpec, n: int, base_seed: int, rep: int) -> float:
    """Difference of per-chain plug-in estimates from two separate runs of
    ``n`` steps each, one per chain (lanes 1 and 2 of the replication).
    A chain whose estimated matrix is still reducible contributes zero."""
    vals = []
    for ell in (1, 2):
        res = run(spec, SingleChain(ell), n, base_seed, rep=rep, lane=ell, keep_stats=True)
        est = mle_chain_alpha(res.extras["stats"], ell)
        vals.append(0.0 if est is None else est)
    return vals[1] - vals[0]


@dataclass(frozen=True)
class CoopReport:
    s: int
    n: int
    reps: int
    alpha_true: float
    designed: EstimatorSummary
    isolation: EstimatorSummary
    designed_var_reward_level: float
    isolation_var_reward_level: float
    ratio: float


def coop_comparison(
    s: int,
    q1: float,
    q2: float,
    n: int,
    reps: int,
    base_seed: int,
    *,
    threads: int = 1,
) -> CoopReport:
    """Cooperative design vs running each chain in isolation.

    The designed policy estimates with the exact (uniform) stationary
    weights, as the deterministic transition structure is known; isolation
    uses the standard per-chain plug-in estimate.  ``*_reward_level``
    fields rescale the scaled variances by s^2, i.e. the variance of the
    estimated reward-probability difference, which is the quantity whose
    variance is flat in s under the cooperative design.
    """
    spec = coop_example_spec(s, q1, q2)
    alpha_true = (q2 - q1) / s
    pi_uniform = np.full((2, s), 1.0 / s)
    designed = monte_carlo(
        spec,
        coop_designed_policy(s),
        n,
        reps,
        base_seed,
        threads=threads,
        alpha_true=alpha_true,
        known_pi=pi_uniform,
    )
    iso = np.empty(reps)

    def one(k: int) -> None:
        iso[k] = isolation_difference(spec, n, base_seed, k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, range(reps)))
    else:
        for k in range(reps):
            one(k)
    isolation = _summarize(iso, n, alpha_true)
    designed_sum = designed.known_pi
    return CoopReport(
        s=s,
        n=n,
        reps=reps,
        alpha_true=alpha_true,
        designed=designed_sum,
        isolation=isolation,
        designed_var_reward_level=designed_sum.scaled_var * s * s,
        isolation_var_reward_level=isolation.scaled_var * s * s,
        ratio=isolation.scaled_var / designed_sum.scaled_var,
    )
