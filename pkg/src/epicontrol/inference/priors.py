"""Prior over the per-action transmission rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..model.params import N_ACTIONS

# Weakly informative default: independent LogNormal(log 0.25, 0.5^2) per
# rate, sorted to satisfy the strict stringency ordering.
DEFAULT_MU = math.log(0.25)
DEFAULT_SIGMA = 0.5


@dataclass(frozen=True)
class PriorSpec:
    """Independent log-normals on beta_1..beta_4, sorted descending."""

    mu: tuple[float, ...] = (DEFAULT_MU,) * N_ACTIONS
    sigma: tuple[float, ...] = (DEFAULT_SIGMA,) * N_ACTIONS
    ordered: bool = True

    def __post_init__(self):
        if len(self.mu) != N_ACTIONS or len(self.sigma) != N_ACTIONS:
            raise ValueError(f"prior needs {N_ACTIONS} (mu, sigma) pairs")
        if any(s <= 0 for s in self.sigma):
            raise ValueError("prior sigmas must be positive")

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        """Draw n rate vectors (n, 4), each strictly ordered descending."""
        mu = np.asarray(self.mu)
        sigma = np.asarray(self.sigma)
        out = np.empty((n, N_ACTIONS))
        for i in range(n):
            while True:
                draw = np.exp(rng.normal(mu, sigma))
                draw = np.sort(draw)[::-1] if self.ordered else draw
                # sorting yields strict ordering almost surely; re-draw ties
                if not self.ordered or np.all(np.diff(draw) < 0):
                    out[i] = draw
                    break
        return out

    def logpdf(self, theta: np.ndarray) -> float:
        """Log-density at a rate vector; -inf off the ordered region.

        The constant 4! factor from sorting is omitted (it cancels in
        Metropolis ratios between ordered points).
        """
        th = np.asarray(theta, dtype=np.float64)
        if th.shape != (N_ACTIONS,) or np.any(th <= 0):
            return -np.inf
        if self.ordered and not np.all(np.diff(th) < 0):
            return -np.inf
        lp = 0.0
        for j in range(N_ACTIONS):
            z = (math.log(th[j]) - self.mu[j]) / self.sigma[j]
            lp += (-0.5 * z * z - math.log(th[j] * self.sigma[j])
                   - 0.5 * math.log(2.0 * math.pi))
        return lp
