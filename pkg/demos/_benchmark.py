"""Shared two-state benchmark instance for the demo scripts."""

import numpy as np

import chainexp as ce


def build_spec() -> ce.ChainSpec:
    transition = np.array(
        [
            [[0.9, 0.1], [0.2, 0.8]],  # chain 1: sticky drift
            [[0.5, 0.5], [0.5, 0.5]],  # chain 2: fair coin flips
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
