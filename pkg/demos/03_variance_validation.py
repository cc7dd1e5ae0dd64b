"""Monte Carlo check of the asymptotic variance predictions.

Runs seeded replications of two fixed designs and compares the empirical
scaled variance n Var(alpha_hat) with the closed-form predictions, plus a
normality check on the standardized errors.
"""

import numpy as np

import chainexp as ce
from _benchmark import build_spec

N, REPS, THREADS = 50_000, 600, 2

spec = build_spec()
an = ce.analyze(spec)
sol = ce.solve_optimal_kappa(an.pi, an.sigma2, spec.P(1), spec.P(2))

print(f"{REPS} replications of n={N} steps per design\n")

for label, policy, predicted in [
    ("optimal Markov design", ce.StationaryMarkov(sol.p_star[0]), sol.objective),
    (
        "half-half Markov design",
        ce.StationaryMarkov(np.full(2, 0.5)),
        ce.mle_variance(
            ce.kappa_from_markov(np.full(2, 0.5), spec.P(1), spec.P(2)), an.pi, an.sigma2
        ),
    ),
]:
    rep = ce.clt_report(spec, policy, N, REPS, base_seed=42, predicted_var=predicted, threads=THREADS)
    print(f"{label}:")
    print(f"  predicted nVar = {predicted:.4f}, empirical = {rep.scaled_var:.4f} (ratio {rep.variance_ratio:.3f})")
    print(f"  Anderson-Darling on standardized errors: {rep.ad_statistic:.3f} "
          f"(5% critical {rep.ad_critical_5pct:.3f}, normal-looking: {rep.normal_ok})\n")

reg = ce.optimal_regenerative(an, 0)
summary = ce.monte_carlo(
    spec, ce.Regenerative(x_r=0, p_r=reg.p_star), N, REPS, base_seed=43, threads=THREADS
)
print("optimal regenerative design (sample-average estimator):")
print(f"  predicted nVar = {reg.variance:.4f}, empirical = {summary.sae.scaled_var:.4f}")
print(f"  bias = {summary.sae.bias:+.5f} (half-width of the variance CI: {summary.sae.scaled_var_ci_half:.4f})")
