"""
Entropy-based exploration numerics.

The action distribution of a state is the softmax of its Q-values, computed with
the max trick. Its Shannon entropy, normalised by log|A|, is the scaled entropy
H(s) in [0, 1]; an agent explores in s with probability H(s).
"""

import numpy as np


def as_q_values(q):
    """Validate Q-values and return them as a float64 vector"""
    values = np.asarray(q, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("Q-values must be a non-empty vector")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"Q-values must be finite, got {values}")
    return values


def action_distribution(q):
    """Softmax over Q-values with the maximum subtracted before exponentiation"""
    values = as_q_values(q)
    weights = np.exp(values - values.max())
    return weights / weights.sum()


def scaled_entropy(q):
    """Entropy of the action distribution in base |A|, clamped to [0, 1]"""
    probs = action_distribution(q)
    if probs.size == 1:
        # A single action leaves nothing to explore.
        return 0.0

    # 0 * log 0 is taken as 0
    nonzero = probs[probs > 0.0]
    entropy = -np.sum(nonzero * np.log(nonzero)) / np.log(probs.size)
    return float(min(max(entropy, 0.0), 1.0))


def explore_decision(h, rng):
    """Return True (explore) with probability h"""
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"Scaled entropy must lie in [0, 1], got {h}")
    return bool(rng.random() < h)


def mean_episode_entropy(entropies):
    """Average scaled entropy over the steps of one episode (H0)"""
    values = np.asarray(list(entropies), dtype=np.float64)
    if values.size == 0:
        raise ValueError("Cannot average the entropy of an empty episode")
    return float(min(max(values.mean(), 0.0), 1.0))
