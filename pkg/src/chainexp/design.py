"""Efficient experimental designs over the policy-limit polytope.

The optimal visit-fraction vector minimizes the scaled asymptotic variance
of the plug-in estimator,

    sum_{ell, x} pi(ell,x)^2 sigma^2(ell,x) / kappa(ell,x),

over the polytope of achievable limits (balance + mass + nonnegativity).
The objective is strictly convex on the interior and the problem is tiny,
so we solve it with an equality-constrained barrier Newton method: one
redundant balance row is dropped, the nonnegativity constraints enter
through a log barrier, and the barrier weight is decimated until both the
duality gap and the projected-gradient residual are negligible.

The one-parameter family of regenerative designs has a closed form; see
:func:`optimal_regenerative` and :func:`sae_variance`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import ChainAnalysis, ChainSpec, analyze
from .policies import kappa_from_markov, markov_from_kappa

SIGMA2_FLOOR = 1e-6
GAP_TOL = 1e-10
KKT_TOL = 1e-9


class DivisionByZeroMassError(ZeroDivisionError):
    """kappa vanishes at a coordinate with positive variance weight."""


class DegenerateChainError(ValueError):
    """A chain has zero aggregate variance, the regenerative optimum is undefined."""


class InfeasibleStartError(RuntimeError):
    pass


class MaxIterationsError(RuntimeError):
    pass


@dataclass(frozen=True)
class DesignSolution:
    """Solver output: optimal limits, induced Markov policy, certificates."""

    kappa_star: np.ndarray
    p_star: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    regularized: bool


@dataclass(frozen=True)
class RegenerativeDesign:
    """Optimal one-parameter regenerative design anchored at state x_r."""

    x_r: int
    q_star: float
    p_star: float
    variance: float
    kappa: np.ndarray


@dataclass(frozen=True)
class VarianceGapReport:
    markov_variance: float
    regenerative_variance: float
    ratio: float
    regularized: bool


def mle_variance(kappa: np.ndarray, pi: np.ndarray, sigma2: np.ndarray) -> float:
    """Scaled asymptotic variance sum pi^2 sigma^2 / kappa of the plug-in
    estimator under constant positive policy limits ``kappa``.

    Coordinates where both kappa and the numerator vanish contribute
    nothing; a zero kappa against a positive numerator raises
    :class:`DivisionByZeroMassError`.
    """
    kappa = np.asarray(kappa, dtype=float)
    num = np.asarray(pi, dtype=float) ** 2 * np.asarray(sigma2, dtype=float)
    bad = (kappa == 0.0) & (num > 0.0)
    if bad.any():
        a, x = np.argwhere(bad)[0]
        raise DivisionByZeroMassError(f"kappa({a + 1}, {x}) = 0 with positive weight")
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(num > 0.0, num / kappa, 0.0)
    return float(terms.sum())


def _constraints(P1: np.ndarray, P2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Equality system A kappa = b over the flattened (2S,) variable.

    S-1 balance rows (the S balance equations sum to zero, so the last is
    dropped) plus the unit-mass row.
    """
    S = P1.shape[0]
    A = np.zeros((S, 2 * S))
    for y in range(S - 1):
        for a, P in enumerate((P1, P2)):
            for x in range(S):
                A[y, a * S + x] = (1.0 if x == y else 0.0) - P[x, y]
    A[S - 1, :] = 1.0
    b = np.zeros(S)
    b[S - 1] = 1.0
    return A, b


def solve_optimal_kappa(
    pi: np.ndarray,
    sigma2: np.ndarray,
    P1: np.ndarray,
    P2: np.ndarray,
    *,
    sigma2_floor: float = SIGMA2_FLOOR,
    gap_tol: float = GAP_TOL,
    kkt_tol: float = KKT_TOL,
    start_p: np.ndarray | None = None,
    max_newton: int = 2000,
) -> DesignSolution:
    """Minimize the scaled-variance objective over the policy-limit polytope.

    Degenerate inputs with some sigma^2 below ``sigma2_floor`` are lifted
    to the floor and the solution is flagged ``regularized`` (the strict
    convexity argument needs positive variances).  ``start_p`` optionally
    supplies the chain-1 probabilities of a Markov policy whose limits seed
    the interior point (defaults to 1/2 everywhere, which is strictly
    feasible whenever both matrices are irreducible).
    """
    pi = np.asarray(pi, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    S = P1.shape[0]
    regularized = bool((sigma2 < sigma2_floor).any())
    c = (pi**2 * np.maximum(sigma2, sigma2_floor)).ravel()

    A, b = _constraints(np.asarray(P1, dtype=float), np.asarray(P2, dtype=float))
    p0 = np.full(S, 0.5) if start_p is None else np.asarray(start_p, dtype=float)
    try:
        kappa = kappa_from_markov(p0, P1, P2).ravel()
    except Exception as exc:
        raise InfeasibleStartError(str(exc)) from exc
    if (kappa <= 0.0).any():
        raise InfeasibleStartError("interior start has nonpositive coordinates")

    m = 2 * S
    t = 1.0
    total_iters = 0

    def kkt_residual(k: np.ndarray) -> float:
        g_obj = -c / k**2
        lam, *_ = np.linalg.lstsq(A.T, g_obj, rcond=None)
        return float(np.max(np.abs(g_obj - A.T @ lam)))

    while True:
        # Center: minimize f(kappa) - (1/t) sum log kappa subject to A kappa = b.
        # Centering stops when the Newton step is negligible relative to
        # kappa; decrement-based tests drown in roundoff once t is large.
        for _ in range(200):
            total_iters += 1
            if total_iters > max_newton:
                raise MaxIterationsError(f"barrier Newton exceeded {max_newton} iterations")
            g = -c / kappa**2 - 1.0 / (t * kappa)
            h = 2.0 * c / kappa**3 + 1.0 / (t * kappa**2)
            invh = 1.0 / h
            M = (A * invh[None, :]) @ A.T
            w = np.linalg.solve(M, -A @ (invh * g))
            dx = -invh * (g + A.T @ w)
            if float(np.max(np.abs(dx) / kappa)) <= 1e-13:
                break
            dec2 = float(-g @ dx)
            phi0 = float(c @ (1.0 / kappa) - np.log(kappa).sum() / t)
            neg = dx < 0.0
            smax = float(np.min(-kappa[neg] / dx[neg])) if neg.any() else np.inf
            s = min(1.0, 0.99 * smax)
            # Backtrack only while the predicted decrease is resolvable in
            # float64; microscopic steps are accepted as-is.
            if dec2 > 1e-13 * (1.0 + abs(phi0)):
                for _ in range(60):
                    cand = kappa + s * dx
                    phi1 = float(c @ (1.0 / cand) - np.log(cand).sum() / t)
                    if phi1 <= phi0 - 0.25 * s * dec2:
                        break
                    s *= 0.5
            kappa = kappa + s * dx
        if m / t <= gap_tol and kkt_residual(kappa) <= kkt_tol:
            break
        if t > 1e18:
            raise MaxIterationsError("barrier parameter exhausted without certificate")
        t *= 10.0

    kappa_mat = kappa.reshape(2, S)
    return DesignSolution(
        kappa_star=kappa_mat,
        p_star=markov_from_kappa(kappa_mat),
        objective=float(c @ (1.0 / kappa)),
        kkt_residual=kkt_residual(kappa),
        iterations=total_iters,
        regularized=regularized,
    )


def grid_search_2state(
    pi: np.ndarray,
    sigma2: np.ndarray,
    P1: np.ndarray,
    P2: np.ndarray,
    *,
    lo: float = 0.01,
    hi: float = 0.99,
    res: float = 0.002,
) -> tuple[float, np.ndarray]:
    """Brute-force oracle over two-state Markov policies.

    Sweeps the chain-1 probabilities (p(x0), p(x1)) on a grid, maps each
    policy to its limits through the mixture chain's closed-form two-state
    stationary distribution, and returns the best objective value and the
    grid point attaining it.  Exists to anchor :func:`solve_optimal_kappa`.
    """
    if P1.shape[0] != 2:
        raise ValueError("grid oracle is for two-state instances only")
    c = np.asarray(pi, dtype=float) ** 2 * np.asarray(sigma2, dtype=float)
    grid = np.arange(lo, hi + res / 2, res)
    pa, pb = np.meshgrid(grid, grid, indexing="ij")
    # mixture kernel off-diagonals: q01 from state 0, q10 from state 1
    q01 = pa * P1[0, 1] + (1.0 - pa) * P2[0, 1]
    q10 = pb * P1[1, 0] + (1.0 - pb) * P2[1, 0]
    z0 = q10 / (q01 + q10)
    z1 = 1.0 - z0
    k = np.stack([z0 * pa, z1 * pb, z0 * (1.0 - pa), z1 * (1.0 - pb)])
    cflat = c.reshape(4, 1, 1)
    obj = (cflat / k).sum(axis=0)
    idx = np.unravel_index(np.argmin(obj), obj.shape)
    return float(obj[idx]), np.array([pa[idx], pb[idx]])


def optimal_regenerative(analysis: ChainAnalysis, x_r: int) -> RegenerativeDesign:
    """Closed-form optimal stationary regenerative design anchored at x_r.

    The optimal chain-1 sample fraction is sbar(1) / (sbar(1) + sbar(2))
    where sbar(ell) is the root of the pi-weighted variance; its scaled
    asymptotic variance (sbar(1) + sbar(2))^2 does not depend on x_r.
    """
    sbar = np.sqrt(analysis.sigma2_bar)
    for ell in (1, 2):
        if sbar[ell - 1] <= 0.0:
            raise DegenerateChainError(f"chain {ell} has zero aggregate variance")
    eta1 = analysis.eta[0, x_r]
    eta2 = analysis.eta[1, x_r]
    q_star = float(sbar[0] / (sbar[0] + sbar[1]))
    p_star = float(eta2 * sbar[0] / (eta2 * sbar[0] + eta1 * sbar[1]))
    kappa = np.stack([q_star * analysis.pi[0], (1.0 - q_star) * analysis.pi[1]])
    return RegenerativeDesign(
        x_r=x_r,
        q_star=q_star,
        p_star=p_star,
        variance=float((sbar[0] + sbar[1]) ** 2),
        kappa=kappa,
    )


def sae_variance(q_r: float, sigma_bar1: float, sigma_bar2: float) -> float:
    """Scaled asymptotic SAE variance of a stationary regenerative policy
    with chain-1 sample fraction q_r: sbar1^2/q + sbar2^2/(1-q).

    Arguments are the non-squared sbar values.
    """
    return sigma_bar1**2 / q_r + sigma_bar2**2 / (1.0 - q_r)


def variance_gap_report(spec: ChainSpec, x_r: int, analysis: ChainAnalysis | None = None) -> VarianceGapReport:
    """Optimal Markov variance vs optimal regenerative variance.

    The ratio is at least 1 up to solver tolerance: regenerative limits are
    a one-parameter slice of the full polytope.  When the Markov solve
    needed variance regularization the report says so.
    """
    if analysis is None:
        analysis = analyze(spec)
    sol = solve_optimal_kappa(analysis.pi, analysis.sigma2, spec.P(1), spec.P(2))
    reg = optimal_regenerative(analysis, x_r)
    return VarianceGapReport(
        markov_variance=sol.objective,
        regenerative_variance=reg.variance,
        ratio=reg.variance / sol.objective,
        regularized=sol.regularized,
    )
