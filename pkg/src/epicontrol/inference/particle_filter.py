"""Bootstrap particle filter over the latent compartment states.

The generic update (`pf_update`) accepts arbitrary propagation and
log-density callables so small discrete models can exercise the same
code path the epidemic filter uses; `pf_step` binds the SEIR-VU
transition kernel and NegBin observation weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import kernels
from ..model.params import ModelParams
from ..model.state import VaccinationStream
from .resampling import ess, normalize_log_weights, systematic_resample

WEIGHT_TOL = 1e-12


class DegeneracyError(RuntimeError):
    """Every particle weight hit the impossible-observation floor."""


@dataclass(frozen=True)
class InnerParticleSet:
    """Weighted latent-state particles for one parameter vector."""

    counts: np.ndarray                  # (N_x, 14) int64
    weights: np.ndarray                 # (N_x,), normalized
    day: int
    loglik_increments: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must be normalized, sum={w.sum()!r}")
        if self.counts.ndim != 2 or self.counts.shape[0] != len(w) or len(w) < 1:
            raise ValueError("counts must be (N_x, 14) with N_x >= 1 matching weights")

    @property
    def n_particles(self) -> int:
        return self.counts.shape[0]

    @property
    def total_loglik(self) -> float:
        return float(self.loglik_increments.sum())

    @classmethod
    def dirac(cls, x0: np.ndarray, n_x: int, day: int = 0) -> "InnerParticleSet":
        counts = np.tile(np.asarray(x0, dtype=np.int64), (n_x, 1))
        return cls(counts=counts, weights=np.full(n_x, 1.0 / n_x), day=day)


def pf_update(particles: np.ndarray, weights: np.ndarray, logw_obs: np.ndarray,
              rng: np.random.Generator, resample_fraction: float = 0.5):
    """One reweight(-resample) update given per-particle observation log-pdfs.

    Returns (particles, weights, loglik_increment, resampled).  The
    increment estimates log p(y_t | y_{1:t-1}) as
    log sum_i W_{t-1,i} * p(y_t | x_t^i).
    """
    n = len(weights)
    if np.all(logw_obs <= kernels.LOG_WEIGHT_FLOOR):
        raise DegeneracyError("all particle weights at the sentinel floor")
    logw = np.log(np.maximum(weights, 1e-300)) + logw_obs
    m = logw.max()
    increment = float(m + np.log(np.exp(logw - m).sum()))
    new_w = normalize_log_weights(logw)
    resampled = False
    if ess(new_w) < resample_fraction * n:
        idx = systematic_resample(new_w, n, rng)
        particles = particles[idx]
        new_w = np.full(n, 1.0 / n)
        resampled = True
    return particles, new_w, increment, resampled


def pf_step(inner: InnerParticleSet, theta: ModelParams, action: int,
            vax: VaccinationStream, y: int, rng: np.random.Generator,
            resample_fraction: float = 0.5) -> tuple[InnerParticleSet, float]:
    """Assimilate the observation for day inner.day + 1.

    Propagates every particle one day under `action`, weights by the
    NegBin likelihood of y, resamples systematically when the effective
    sample size drops below `resample_fraction * N_x`.
    """
    df, ds = vax.doses_on(inner.day)
    new_counts, logw_obs = kernels.pf_step_kernel(
        inner.counts, theta.beta_for(action), theta.p_ei, theta.p_ir,
        theta.p_iu, theta.p_ur, theta.p_vv, theta.eps_array, theta.psi_array,
        theta.population, df, ds, int(y), theta.k_obs,
        theta.exposure_form == "exponential", rng)
    new_counts, new_w, increment, _ = pf_update(
        new_counts, inner.weights, logw_obs, rng, resample_fraction)
    return InnerParticleSet(
        counts=new_counts, weights=new_w, day=inner.day + 1,
        loglik_increments=np.append(inner.loglik_increments, increment),
    ), increment


def pf_run(theta: ModelParams, x0: np.ndarray, ys, actions,
           vax: VaccinationStream, n_x: int, rng: np.random.Generator,
           start_day: int = 0,
           resample_fraction: float = 0.5) -> tuple[InnerParticleSet, float]:
    """Run a fresh filter over ys (days start_day+1 .. start_day+len(ys)).

    actions[i] is the action deployed on day start_day + i.  Returns the
    terminal particle set and the total log-likelihood estimate.
    """
    inner = InnerParticleSet.dirac(x0, n_x, day=start_day)
    for i, y in enumerate(ys):
        inner, _ = pf_step(inner, theta, int(actions[i]), vax, int(y), rng,
                           resample_fraction)
    return inner, inner.total_loglik
