"""Weight bookkeeping: effective sample size and systematic resampling."""

from __future__ import annotations

import numpy as np


def ess(weights: np.ndarray) -> float:
    """Effective sample size 1 / sum(w^2) of normalized weights."""
    w = np.asarray(weights, dtype=np.float64)
    s = float((w * w).sum())
    return 1.0 / s if s > 0 else 0.0


def normalize_log_weights(logw: np.ndarray) -> np.ndarray:
    """Exponentiate and normalize log-weights stably."""
    logw = np.asarray(logw, dtype=np.float64)
    m = logw.max()
    w = np.exp(logw - m)
    tot = w.sum()
    if tot <= 0 or not np.isfinite(tot):
        raise ValueError("log-weights cannot be normalized")
    return w / tot


def systematic_indices(weights: np.ndarray, n: int, u: float) -> np.ndarray:
    """Systematic resampling indices from one uniform u in [0, 1).

    Deterministic given (weights, n, u); preserves expectations and has
    minimal resampling variance among the common schemes.
    """
    w = np.asarray(weights, dtype=np.float64)
    positions = (u + np.arange(n)) / n
    cumulative = np.cumsum(w)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="left")


def systematic_resample(weights: np.ndarray, n: int,
                        rng: np.random.Generator) -> np.ndarray:
    return systematic_indices(weights, n, float(rng.random()))
