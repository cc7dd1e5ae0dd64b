"""chainexp: experiments comparing two Markov-chain policies on a shared
state space, with temporal interference handled by design.

The library covers the full pipeline: validated two-chain models with
closed-form ground truth (:mod:`chainexp.chains`), online sufficient
statistics and the plug-in / sample-average estimators
(:mod:`chainexp.estimators`), the sampling-policy family and policy-limit
polytope (:mod:`chainexp.policies`), optimal offline designs
(:mod:`chainexp.design`), adaptive online designs (:mod:`chainexp.online`),
and a seeded, reproducible Monte Carlo simulator (:mod:`chainexp.simulate`).
"""

from .chains import (
    Bernoulli,
    ChainAnalysis,
    ChainSpec,
    Constant,
    DiscreteFinite,
    NotIrreducibleError,
    RewardDist,
    SingularSystemError,
    SpecValidationError,
    Uniform,
    analyze,
    is_irreducible,
    make_spec,
    poisson_solve,
    single_chain_clt_variance,
    state_variance,
    stationary_distribution,
    validate_spec,
)
from .design import (
    DegenerateChainError,
    DesignSolution,
    DivisionByZeroMassError,
    RegenerativeDesign,
    VarianceGapReport,
    grid_search_2state,
    mle_variance,
    optimal_regenerative,
    sae_variance,
    solve_optimal_kappa,
    variance_gap_report,
)
from .estimators import (
    MleEstimate,
    OutOfOrderStepError,
    StepRecord,
    SufficientStats,
    alpha_known_pi,
    mle_alpha,
    mle_chain_alpha,
    mle_stationary,
    mle_transition,
    sae_alpha,
    stats_update,
)
from .online import (
    OnlineEti2Config,
    OnlineEti2State,
    OnlineEtiConfig,
    OnlineEtiState,
    eti2_observe,
    eti2_step,
    eti_observe,
    eti_step,
)
from .policies import (
    CoopAlternating,
    KappaMembership,
    MixtureReducibleError,
    PolicyConfig,
    PolicyDecision,
    Regenerative,
    SingleChain,
    StationaryMarkov,
    Switchback,
    ZeroMassError,
    decide,
    empirical_limits,
    kappa_from_markov,
    kappa_membership,
    make_policy_state,
    markov_from_kappa,
    p_from_q,
    q_from_p,
    regenerative_markov_equivalent,
)
from .simulate import (
    CltReport,
    CoopReport,
    EstimatorSummary,
    McSummary,
    RunResult,
    clt_report,
    coop_comparison,
    coop_designed_policy,
    coop_example_spec,
    derive_streams,
    isolation_difference,
    monte_carlo,
    run,
    sample_step,
)

__version__ = "0.1.0"
