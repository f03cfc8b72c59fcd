"""Nested sequential Monte Carlo over transmission rates and latent states.

An outer population of weighted rate vectors theta^(i) each carries an
inner bootstrap filter over compartment states.  Assimilating a new ICU
observation multiplies each outer weight by its inner filter's estimate
of the incremental likelihood; when the outer effective sample size
degrades, the cloud is resampled and rejuvenated with particle-MCMC
moves whose filters rerun from day 0 over the full assimilated history
(full-posterior targeting rather than an online approximation).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from ..model.params import ModelParams, N_ACTIONS
from ..model.state import CompartmentState, Observation, VaccinationStream
from .particle_filter import DegeneracyError, InnerParticleSet, pf_run, pf_step
from .priors import PriorSpec
from .resampling import ess, normalize_log_weights, systematic_resample

WEIGHT_TOL = 1e-12

# Floor applied to a parameter particle whose inner filter degenerated:
# effectively removes it at the next normalization without losing the cloud.
_DEGENERATE_LOGLIK = -1.0e30


@dataclass(frozen=True)
class Smc2Config:
    n_theta: int = 500
    n_x: int = 200
    ess_fraction: float = 0.5       # outer resample-move trigger
    inner_resample_fraction: float = 0.5
    n_moves: int = 3                # PMMH moves per rejuvenation
    proposal_scale: float = 0.5     # multiple of the weighted log-theta covariance

    def __post_init__(self):
        if self.n_theta < 1 or self.n_x < 1:
            raise ValueError("particle counts must be >= 1")
        if not 0.0 < self.ess_fraction <= 1.0:
            raise ValueError("ess_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class PosteriorCloud:
    """Weighted joint posterior sample over rates and latent states."""

    thetas: np.ndarray                      # (N_theta, 4)
    weights: np.ndarray                     # (N_theta,), normalized
    inners: tuple[InnerParticleSet, ...]
    logliks: np.ndarray                     # cumulative p_hat(y_{1:t} | theta)
    t: int                                  # last assimilated day
    base_params: ModelParams
    prior: PriorSpec
    config: Smc2Config
    x0: np.ndarray                          # initial latent state (day 0)
    history_y: np.ndarray                   # observations for days 1..t
    history_a: np.ndarray                   # actions deployed on days 0..t-1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"cloud weights must be normalized, sum={w.sum()!r}")
        if np.any(np.diff(self.thetas, axis=1) >= 0):
            raise ValueError("every theta must satisfy the strict beta ordering")
        if len(self.history_y) != self.t or len(self.history_a) != self.t:
            raise ValueError("history length must match the assimilated day index")

    @property
    def n_theta(self) -> int:
        return self.thetas.shape[0]

    def ess(self) -> float:
        return ess(self.weights)

    def params_for(self, i: int) -> ModelParams:
        return self.base_params.with_beta(self.thetas[i])

    def beta_quantiles(self, qs=(0.05, 0.5, 0.95)) -> np.ndarray:
        """Weighted posterior quantiles, shape (len(qs), 4)."""
        out = np.empty((len(qs), N_ACTIONS))
        for j in range(N_ACTIONS):
            order = np.argsort(self.thetas[:, j])
            vals = self.thetas[order, j]
            cum = np.cumsum(self.weights[order])
            cum /= cum[-1]
            out[:, j] = np.interp(qs, cum, vals)
        return out

    def posterior_mean(self) -> np.ndarray:
        return self.weights @ self.thetas


def init_cloud(prior: PriorSpec, base_params: ModelParams, x0: np.ndarray,
               config: Smc2Config, rng: np.random.Generator) -> PosteriorCloud:
    """Prior cloud at day 0 with Dirac inner filters at x0."""
    thetas = prior.sample(rng, config.n_theta)
    inners = tuple(InnerParticleSet.dirac(x0, config.n_x) for _ in range(config.n_theta))
    n = config.n_theta
    return PosteriorCloud(
        thetas=thetas, weights=np.full(n, 1.0 / n), inners=inners,
        logliks=np.zeros(n), t=0, base_params=base_params, prior=prior,
        config=config, x0=np.asarray(x0, dtype=np.int64),
        history_y=np.zeros(0, dtype=np.int64), history_a=np.zeros(0, dtype=np.int64))


def smc2_assimilate(cloud: PosteriorCloud, y: Observation | int, action: int,
                    vax: VaccinationStream, rng: np.random.Generator) -> PosteriorCloud:
    """Advance the cloud by one observation day.

    Each theta's inner filter is propagated under `action` and weighted
    by the likelihood of y; outer weights are multiplied by the
    increment estimates.  Triggers resample-move when the outer ESS
    falls below the configured fraction.
    """
    yv = y.y if isinstance(y, Observation) else int(y)
    if isinstance(y, Observation) and y.day != cloud.t + 1:
        raise ValueError(f"observation day {y.day} != cloud.t + 1 = {cloud.t + 1}")
    cfg = cloud.config
    increments = np.empty(cloud.n_theta)
    new_inners: list[InnerParticleSet] = []
    n_degenerate = 0
    for i in range(cloud.n_theta):
        try:
            inner, inc = pf_step(cloud.inners[i], cloud.params_for(i), action,
                                 vax, yv, rng, cfg.inner_resample_fraction)
        except DegeneracyError:
            inner = replace(cloud.inners[i], day=cloud.inners[i].day + 1)
            inc = _DEGENERATE_LOGLIK
            n_degenerate += 1
        increments[i] = inc
        new_inners.append(inner)
    if n_degenerate == cloud.n_theta:
        raise DegeneracyError("every parameter particle's inner filter degenerated")

    logw = np.log(np.maximum(cloud.weights, 1e-300)) + increments
    new_w = normalize_log_weights(logw)
    cloud = replace(
        cloud, weights=new_w, inners=tuple(new_inners),
        logliks=cloud.logliks + increments, t=cloud.t + 1,
        history_y=np.append(cloud.history_y, yv),
        history_a=np.append(cloud.history_a, action))

    if cloud.ess() < cfg.ess_fraction * cloud.n_theta:
        cloud = resample_move(cloud, vax, rng)
    return cloud


def _weighted_log_cov(thetas: np.ndarray, weights: np.ndarray) -> np.ndarray:
    logt = np.log(thetas)
    mean = weights @ logt
    centred = logt - mean
    cov = (centred * weights[:, None]).T @ centred
    # keep the proposal usable when the cloud has collapsed
    return cov + 1e-10 * np.eye(thetas.shape[1])


def resample_move(cloud: PosteriorCloud, vax: VaccinationStream,
                  rng: np.random.Generator) -> PosteriorCloud:
    """Systematic resample of the thetas followed by PMMH rejuvenation.

    Each move proposes a correlated random walk on log beta and accepts
    with the particle-marginal ratio computed from a fresh inner filter
    run over the entire assimilated history.
    """
    cfg = cloud.config
    cov = cfg.proposal_scale * _weighted_log_cov(cloud.thetas, cloud.weights)
    chol = np.linalg.cholesky(cov)

    idx = systematic_resample(cloud.weights, cloud.n_theta, rng)
    thetas = cloud.thetas[idx].copy()
    inners = [cloud.inners[i] for i in idx]
    logliks = cloud.logliks[idx].copy()

    log_jac = np.log(thetas).sum(axis=1)
    log_prior = np.array([cloud.prior.logpdf(th) for th in thetas])
    accepted = 0
    for _ in range(cfg.n_moves):
        for i in range(cloud.n_theta):
            xi = rng.standard_normal(thetas.shape[1])
            prop = np.exp(np.log(thetas[i]) + chol @ xi)
            lp_prop = cloud.prior.logpdf(prop)
            if not np.isfinite(lp_prop):
                continue
            try:
                inner_prop, ll_prop = pf_run(
                    cloud.base_params.with_beta(prop), cloud.x0,
                    cloud.history_y, cloud.history_a, vax, cfg.n_x, rng,
                    resample_fraction=cfg.inner_resample_fraction)
            except DegeneracyError:
                continue
            jac_prop = float(np.log(prop).sum())
            log_ratio = (ll_prop + lp_prop + jac_prop
                         - logliks[i] - log_prior[i] - log_jac[i])
            if np.log(max(rng.random(), 1e-300)) < log_ratio:
                thetas[i] = prop
                inners[i] = inner_prop
                logliks[i] = ll_prop
                log_prior[i] = lp_prop
                log_jac[i] = jac_prop
                accepted += 1
    if accepted == 0:
        warnings.warn("rejuvenation failure: 0 PMMH acceptances across the cloud",
                      RuntimeWarning)
    n = cloud.n_theta
    return replace(cloud, thetas=thetas, weights=np.full(n, 1.0 / n),
                   inners=tuple(inners), logliks=logliks)


def sample_posterior(cloud: PosteriorCloud, k: int,
                     rng: np.random.Generator) -> list[tuple[ModelParams, CompartmentState]]:
    """Draw K joint (theta, latent state) pairs from the cloud."""
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    out = []
    theta_idx = rng.choice(cloud.n_theta, size=k, p=cloud.weights)
    for i in theta_idx:
        inner = cloud.inners[int(i)]
        j = int(rng.choice(inner.n_particles, p=inner.weights))
        state = CompartmentState.from_array(inner.counts[j], day=cloud.t)
        out.append((cloud.params_for(int(i)), state))
    return out


def warm_start(prior: PriorSpec, observations, historical_actions,
               vax: VaccinationStream, base_params: ModelParams,
               x0: np.ndarray, config: Smc2Config,
               rng: np.random.Generator) -> PosteriorCloud:
    """Initial belief: prior cloud assimilated through the warm-up window.

    observations[i] is the ICU count for day i+1, deployed under
    historical_actions[i] on day i.  An empty window returns the prior
    cloud itself.
    """
    observations = list(observations)
    actions = list(historical_actions)
    if len(actions) < len(observations):
        raise ValueError("need one historical action per warm-up day")
    cloud = init_cloud(prior, base_params, x0, config, rng)
    for i, y in enumerate(observations):
        cloud = smc2_assimilate(cloud, int(y), int(actions[i]), vax, rng)
    return cloud
