"""Two-state toy HMM with an exact forward-algorithm oracle."""

import math

import numpy as np

from epicontrol.inference import pf_update

TOY_T = np.array([[0.85, 0.15],
                  [0.30, 0.70]])
TOY_EM = np.array([[0.70, 0.20, 0.10],
                   [0.10, 0.30, 0.60]])
TOY_PI0 = np.array([0.6, 0.4])


def toy_forward_loglik(ys) -> float:
    """Exact log p(y_1..y_T) by the forward algorithm."""
    alpha = TOY_PI0.copy()
    ll = 0.0
    for y in ys:
        alpha = alpha @ TOY_T
        alpha = alpha * TOY_EM[:, y]
        s = alpha.sum()
        ll += math.log(s)
        alpha /= s
    return ll


def toy_pf_loglik(ys, n_x: int, rng) -> float:
    """Bootstrap-filter estimate of the same log-likelihood."""
    particles = (rng.random(n_x) < TOY_PI0[1]).astype(np.int64)
    weights = np.full(n_x, 1.0 / n_x)
    total = 0.0
    for y in ys:
        u = rng.random(n_x)
        particles = (u < TOY_T[particles, 1]).astype(np.int64)
        logw_obs = np.log(TOY_EM[particles, y])
        particles, weights, inc, _ = pf_update(particles, weights, logw_obs, rng)
        total += inc
    return total


def toy_observations(length: int, rng) -> list[int]:
    x = int(rng.random() < TOY_PI0[1])
    ys = []
    for _ in range(length):
        x = int(rng.random() < TOY_T[x, 1])
        ys.append(int(rng.choice(3, p=TOY_EM[x])))
    return ys
