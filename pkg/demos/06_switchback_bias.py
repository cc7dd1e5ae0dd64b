"""Why naive switchbacks mislead under temporal interference.

Chain 1 pulls the system toward state 0, chain 2 toward state 1, and the
reward is the indicator of landing in state 1.  A block-alternating
switchback hands each block the closing state of the other arm, so the
sample-average estimate is biased; a regenerative design that switches
only in a fixed state is consistent at the same horizon.
"""

import numpy as np

import chainexp as ce

P1 = np.array([[0.98, 0.02], [0.1, 0.9]])
P2 = np.array([[0.9, 0.1], [0.02, 0.98]])
rewards = {(ell, x, y): ce.Constant(float(y)) for ell in (1, 2) for x in range(2) for y in range(2)}
spec = ce.make_spec(np.stack([P1, P2]), rewards, note="slow-mixing opposed drifts")
an = ce.analyze(spec)
print(f"true treatment effect: {an.treatment_effect:+.4f}\n")

N, REPS = 20_000, 400
for label, policy in [
    ("switchback, blocks of 100", ce.Switchback(block_length=100)),
    ("switchback, blocks of 1000", ce.Switchback(block_length=1000)),
    ("regenerative at state 0, p=1/2", ce.Regenerative(x_r=0, p_r=0.5)),
]:
    s = ce.monte_carlo(spec, policy, N, REPS, base_seed=31, threads=2)
    se_mean = np.sqrt(s.sae.scaled_var / N / REPS)
    flag = "BIASED" if abs(s.sae.bias) > 5 * se_mean else "ok"
    print(f"{label:>32}: sample-average bias {s.sae.bias:+.4f} "
          f"(+-{se_mean:.4f} MC error)  [{flag}]")
print("\nlonger blocks shrink the bias but waste the horizon; the")
print("regenerative design removes it outright.")
