"""
Roulette-wheel and greedy selection helpers shared by the solver phases.
"""
import math
from typing import Sequence

import numpy as np

EXP_CLAMP = 50.0


def roulette_index(weights: Sequence[float], rng: np.random.Generator) -> int:
    """
    Sample an index with probability proportional to its weight.

    Negative and NaN weights count as zero. If some weights are +inf, one of
    those is drawn uniformly. If no weight is positive, the draw is uniform
    over all indices.

    Args:
        weights: Non-negative weights
        rng: Random stream

    Returns:
        Selected index
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ValueError("roulette over an empty candidate list")

    infinite = np.isposinf(w)
    if infinite.any():
        candidates = np.flatnonzero(infinite)
        return int(candidates[rng.integers(candidates.size)])

    w = np.where(np.isfinite(w) & (w > 0.0), w, 0.0)
    total = float(w.sum())
    if not total > 0.0 or not math.isfinite(total):
        return int(rng.integers(w.size))

    cumulative = np.cumsum(w)
    r = rng.random() * cumulative[-1]
    idx = int(np.searchsorted(cumulative, r, side="right"))
    return min(idx, w.size - 1)


def reservoir_argmin(scores: Sequence[float], rng: np.random.Generator) -> int:
    """
    Index of the minimum score; exact ties are broken uniformly at random.

    Ties are resolved by reservoir sampling in a single pass.

    Args:
        scores: Scores to minimize
        rng: Random stream

    Returns:
        Selected index
    """
    best = 0
    seen = 1
    for k in range(1, len(scores)):
        if scores[k] < scores[best]:
            best = k
            seen = 1
        elif scores[k] == scores[best]:
            seen += 1
            if rng.random() * seen < 1.0:
                best = k
    return best


def exp_weights(deltas: np.ndarray, z: float) -> np.ndarray:
    """
    exp(delta / z) with the exponent clamped to [-50, 50].

    Args:
        deltas: Move gains
        z: Current objective value (scale)

    Returns:
        Positive weights
    """
    scale = z if z > 0.0 else 1.0
    return np.exp(np.clip(np.asarray(deltas, dtype=float) / scale, -EXP_CLAMP, EXP_CLAMP))
