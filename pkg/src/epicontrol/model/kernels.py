"""Hot simulation kernels: one-day transitions, rollouts, Q-episodes.

This module holds the pure-numpy reference implementations and the
dispatch layer; :mod:`epicontrol.model._numba_kernels` carries the
``@njit`` twins.  Both backends draw from the supplied generator in the
same canonical order (transition-major, particle-minor), so trajectories
are bit-identical across backends for a given seed.

Canonical one-day transition, applied to every particle:

1. first doses move ``min(daily_first, S)`` from S to V1; second doses
   take ``d4 = min(daily_second, V4)`` from V4 and
   ``d3 = min(V3, daily_second - d4)`` from V3, both into V5;
2. new exposures SE ~ Bin(S - sv, 1 - exp(-beta_a (I+I_V)/N));
3. competing outflows of one compartment are drawn as a multinomial via
   conditional binomials (e.g. IR ~ Bin(I, p_IR) then
   IU ~ Bin(I - IR, p_IU/(1-p_IR))), which preserves the marginal means
   while guaranteeing outflows never exceed the source;
4. vaccinated exposure uses p = lambda*(1-eps_j) (clamped to [0,1]) or
   the exponential form 1-exp(-lambda*(1-eps_j)) when configured;
5. vaccinated ICU admission uses p_IU times the psi-weighted average
   over the V strata (0 when all strata are empty).

Compartment sums are conserved exactly by construction.
"""

from __future__ import annotations

import math

import numpy as np

from ..backend import active_backend
from .state import (
    IDX_S, IDX_E, IDX_I, IDX_R, IDX_ICU,
    IDX_V1, IDX_V2, IDX_V3, IDX_V4, IDX_V5,
    IDX_EV, IDX_IV, IDX_RV, IDX_ICUV,
)

# Log-weight assigned to impossible observations (keeps particle weights
# finite so degeneracy stays detectable).
LOG_WEIGHT_FLOOR = -1.0e30

N_ACTIONS = 4


# ---------------------------------------------------------------------------
# scalar helpers shared by the numpy paths (and mirrored in numba)
# ---------------------------------------------------------------------------

def second_dose_split(v3: int, v4: int, daily_second: int) -> tuple[int, int]:
    """Second-dose allocation prioritising V4 then V3; excess is dropped."""
    d4 = min(daily_second, v4)
    d3 = min(v3, daily_second - d4)
    return d3, d4


def vaccinated_icu_prob(v: np.ndarray, p_iu: float, psi: np.ndarray) -> float:
    """ICU-admission probability for vaccinated infectious individuals.

    psi-weighted average over the current V strata; 0 if all strata empty.
    """
    tot = float(v.sum())
    if tot <= 0.0:
        return 0.0
    return p_iu * float(((1.0 - psi) * v).sum()) / tot


def negbin_logpmf(y: int, k_obs: float, mean: float) -> float:
    """Exact NegBin(k, k/(k+mean)) log-pmf at y, floored for impossible y."""
    if y < 0:
        return LOG_WEIGHT_FLOOR
    if mean <= 0.0:
        return 0.0 if y == 0 else LOG_WEIGHT_FLOOR
    p = k_obs / (k_obs + mean)
    return (math.lgamma(y + k_obs) - math.lgamma(k_obs) - math.lgamma(y + 1.0)
            + k_obs * math.log(p) + y * math.log1p(-p))


def negbin_draw(rng: np.random.Generator, k_obs: float, mean: float) -> int:
    """NegBin(k, k/(k+mean)) sample via the gamma-Poisson mixture.

    The decomposition consumes the generator identically in both
    backends (numba supports gamma and poisson but not
    negative_binomial); scale = mean/k gives the exact target law.
    """
    if mean <= 0.0:
        return 0
    lam = rng.gamma(k_obs, mean / k_obs)
    return int(rng.poisson(lam))


def _cond_p(p_second: float, p_first: float) -> float:
    """P(second outflow | not first) for the multinomial decomposition."""
    if p_first >= 1.0:
        return 0.0
    return min(max(p_second / (1.0 - p_first), 0.0), 1.0)


# ---------------------------------------------------------------------------
# one-day transition, numpy (vectorised over particles)
# ---------------------------------------------------------------------------

def _exposure_prob(lam: np.ndarray, one_minus_eps: float, exponential: bool) -> np.ndarray:
    if exponential:
        return -np.expm1(-lam * one_minus_eps)
    return np.clip(lam * one_minus_eps, 0.0, 1.0)


def step_batch_numpy(counts: np.ndarray, beta_a: float,
                     p_ei: float, p_ir: float, p_iu: float, p_ur: float, p_vv: float,
                     eps: np.ndarray, psi: np.ndarray, n_pop: int,
                     daily_first: int, daily_second: int,
                     exponential_exposure: bool,
                     rng: np.random.Generator) -> np.ndarray:
    """Advance a batch of states (n, 14) by one day.  Returns a new array."""
    c = counts
    S, E, I = c[:, IDX_S], c[:, IDX_E], c[:, IDX_I]
    ICU = c[:, IDX_ICU]
    V = [c[:, IDX_V1 + j] for j in range(5)]
    EV, IV, ICUV = c[:, IDX_EV], c[:, IDX_IV], c[:, IDX_ICUV]

    # deterministic allocations, clamped to the available pools
    sv = np.minimum(daily_first, S)
    d4 = np.minimum(daily_second, V[3])
    d3 = np.minimum(V[2], daily_second - d4)

    lam = beta_a * (I + IV) / float(n_pop)
    p_se = -np.expm1(-lam)

    se = rng.binomial(S - sv, p_se)
    ei = rng.binomial(E, p_ei)
    ir = rng.binomial(I, p_ir)
    iu = rng.binomial(I - ir, _cond_p(p_iu, p_ir))
    ur = rng.binomial(ICU, p_ur)

    ve = []
    q_after_wane_cap = 1.0 - p_vv
    vv = []
    for j in range(3):
        m = V[j] - (d3 if j == 2 else 0)
        vv_j = rng.binomial(m, p_vv)
        p_ve = _exposure_prob(lam, 1.0 - eps[j], exponential_exposure)
        q_ve = np.clip(p_ve / q_after_wane_cap, 0.0, 1.0) if q_after_wane_cap > 0 \
            else np.zeros_like(p_ve)
        vv.append(vv_j)
        ve.append(rng.binomial(m - vv_j, q_ve))
    for j in (3, 4):
        m = V[j] - (d4 if j == 3 else 0)
        p_ve = _exposure_prob(lam, 1.0 - eps[j], exponential_exposure)
        ve.append(rng.binomial(m, p_ve))

    eiv = rng.binomial(EV, p_ei)
    irv = rng.binomial(IV, p_ir)
    # sequential arithmetic (not dot/sum) so the numba twin is bit-identical
    vtot = V[0] + V[1] + V[2] + V[3] + V[4]
    num = ((1.0 - psi[0]) * V[0] + (1.0 - psi[1]) * V[1] + (1.0 - psi[2]) * V[2]
           + (1.0 - psi[3]) * V[3] + (1.0 - psi[4]) * V[4])
    p_viu = np.where(vtot > 0, p_iu * num / np.maximum(vtot, 1).astype(np.float64), 0.0)
    if p_ir < 1.0:
        q_viu = np.minimum(np.maximum(p_viu / (1.0 - p_ir), 0.0), 1.0)
    else:
        q_viu = np.zeros_like(p_viu)
    iuv = rng.binomial(IV - irv, q_viu)
    urv = rng.binomial(ICUV, p_ur)

    out = np.empty_like(c)
    out[:, IDX_S] = S - sv - se
    out[:, IDX_E] = E + se - ei
    out[:, IDX_I] = I + ei - ir - iu
    out[:, IDX_R] = c[:, IDX_R] + ir + ur
    out[:, IDX_ICU] = ICU + iu - ur
    out[:, IDX_V1] = V[0] + sv - vv[0] - ve[0]
    out[:, IDX_V2] = V[1] + vv[0] - vv[1] - ve[1]
    out[:, IDX_V3] = V[2] + vv[1] - d3 - vv[2] - ve[2]
    out[:, IDX_V4] = V[3] + vv[2] - d4 - ve[3]
    out[:, IDX_V5] = V[4] + d3 + d4 - ve[4]
    out[:, IDX_EV] = EV + ve[0] + ve[1] + ve[2] + ve[3] + ve[4] - eiv
    out[:, IDX_IV] = IV + eiv - irv - iuv
    out[:, IDX_RV] = c[:, IDX_RV] + irv + urv
    out[:, IDX_ICUV] = ICUV + iuv - urv
    return out


def step_batch_mean(counts: np.ndarray, beta_a: float,
                    p_ei: float, p_ir: float, p_iu: float, p_ur: float, p_vv: float,
                    eps: np.ndarray, psi: np.ndarray, n_pop: int,
                    daily_first: int, daily_second: int,
                    exponential_exposure: bool) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic mean-field transition on float states.

    Every binomial draw is replaced by its expectation; the conditional
    decomposition keeps the flow means identical to the stochastic
    kernel's marginals.  Returns (next_counts, new_exposures) where
    new_exposures aggregates SE plus all vaccinated exposures.
    """
    c = counts.astype(np.float64)
    S, E, I = c[:, IDX_S], c[:, IDX_E], c[:, IDX_I]
    ICU = c[:, IDX_ICU]
    V = [c[:, IDX_V1 + j] for j in range(5)]
    EV, IV, ICUV = c[:, IDX_EV], c[:, IDX_IV], c[:, IDX_ICUV]

    sv = np.minimum(float(daily_first), S)
    d4 = np.minimum(float(daily_second), V[3])
    d3 = np.minimum(V[2], daily_second - d4)

    lam = beta_a * (I + IV) / float(n_pop)
    p_se = -np.expm1(-lam)

    se = (S - sv) * p_se
    ei = E * p_ei
    ir = I * p_ir
    iu = (I - ir) * _cond_p(p_iu, p_ir)
    ur = ICU * p_ur

    vv, ve = [], []
    for j in range(3):
        m = V[j] - (d3 if j == 2 else 0.0)
        vv_j = m * p_vv
        p_ve = _exposure_prob(lam, 1.0 - eps[j], exponential_exposure)
        q_ve = np.clip(p_ve / (1.0 - p_vv), 0.0, 1.0) if p_vv < 1.0 else np.zeros_like(p_ve)
        vv.append(vv_j)
        ve.append((m - vv_j) * q_ve)
    for j in (3, 4):
        m = V[j] - (d4 if j == 3 else 0.0)
        ve.append(m * _exposure_prob(lam, 1.0 - eps[j], exponential_exposure))

    eiv = EV * p_ei
    irv = IV * p_ir
    vtot = V[0] + V[1] + V[2] + V[3] + V[4]
    num = ((1.0 - psi[0]) * V[0] + (1.0 - psi[1]) * V[1] + (1.0 - psi[2]) * V[2]
           + (1.0 - psi[3]) * V[3] + (1.0 - psi[4]) * V[4])
    p_viu = np.where(vtot > 0.0, p_iu * num / np.maximum(vtot, 1e-300), 0.0)
    q_viu = np.clip(p_viu / (1.0 - p_ir), 0.0, 1.0) if p_ir < 1.0 else np.zeros_like(p_viu)
    iuv = (IV - irv) * q_viu
    urv = ICUV * p_ur

    out = np.empty_like(c)
    out[:, IDX_S] = S - sv - se
    out[:, IDX_E] = E + se - ei
    out[:, IDX_I] = I + ei - ir - iu
    out[:, IDX_R] = c[:, IDX_R] + ir + ur
    out[:, IDX_ICU] = ICU + iu - ur
    out[:, IDX_V1] = V[0] + sv - vv[0] - ve[0]
    out[:, IDX_V2] = V[1] + vv[0] - vv[1] - ve[1]
    out[:, IDX_V3] = V[2] + vv[1] - d3 - vv[2] - ve[2]
    out[:, IDX_V4] = V[3] + vv[2] - d4 - ve[3]
    out[:, IDX_V5] = V[4] + d3 + d4 - ve[4]
    out[:, IDX_EV] = EV + ve[0] + ve[1] + ve[2] + ve[3] + ve[4] - eiv
    out[:, IDX_IV] = IV + eiv - irv - iuv
    out[:, IDX_RV] = c[:, IDX_RV] + irv + urv
    out[:, IDX_ICUV] = ICUV + iuv - urv
    new_exposed = se + ve[0] + ve[1] + ve[2] + ve[3] + ve[4]
    return out, new_exposed


# ---------------------------------------------------------------------------
# reward / binning scalar pieces used inside the fused loops
# ---------------------------------------------------------------------------

def intervention_cost_scalar(a: int, ell: int) -> float:
    if a == 2:
        return 50.0 * math.log1p(ell)
    if a == 3:
        return 200.0 * ell
    if a == 4:
        return 800.0 * ell
    return 0.0


def reward_scalar(y: float, a: int, ell: int,
                  kappa_icu: float, kappa_soec: float,
                  t_crash: float, p_crash: float) -> float:
    if y > t_crash:
        return -p_crash
    return -kappa_icu * y - kappa_soec * intervention_cost_scalar(a, ell)


def update_runs(runs: np.ndarray, a: int) -> int:
    """Advance per-level streak run lengths by one day under action a.

    runs[L-2] tracks consecutive days with deployed action >= L for
    L in {2,3,4}; returns the streak ell for today's action (0 for a=1).
    """
    for level in (2, 3, 4):
        runs[level - 2] = runs[level - 2] + 1 if a >= level else 0
    return 0 if a == 1 else int(runs[a - 2])


def threshold_action(y: float, tau1: float, tau2: float, tau3: float) -> int:
    if y < tau1:
        return 1
    if y < tau2:
        return 2
    if y < tau3:
        return 3
    return 4


# ---------------------------------------------------------------------------
# fused loops, numpy path (single trajectory; batch-of-one step calls)
# ---------------------------------------------------------------------------

def _step_one_numpy(counts1: np.ndarray, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv,
                    eps, psi, n_pop, df, ds, expf, rng) -> np.ndarray:
    return step_batch_numpy(counts1.reshape(1, -1), beta_a, p_ei, p_ir, p_iu,
                            p_ur, p_vv, eps, psi, n_pop, df, ds, expf, rng)[0]


def rollout_numpy(counts0, y0, runs0, taus, fixed_action,
                  betas, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi, n_pop,
                  daily_first, daily_second, t0, horizon,
                  k_obs, disc, kappa_icu, kappa_soec, t_crash, p_crash,
                  exponential_exposure, observe_noise, rng):
    """Simulate `horizon` days from (counts0, y0) under a threshold rule
    (fixed_action == 0) or a pinned action, accumulating the discounted
    daily reward.  Returns (return, y_path, icu_path, a_path)."""
    counts = counts0.copy()
    runs = runs0.copy()
    y = int(y0)
    ret = 0.0
    d = 1.0
    y_path = np.empty(horizon, dtype=np.int64)
    icu_path = np.empty(horizon, dtype=np.int64)
    a_path = np.empty(horizon, dtype=np.int64)
    for rel in range(horizon):
        t = t0 + rel
        a = fixed_action if fixed_action > 0 else threshold_action(y, taus[0], taus[1], taus[2])
        ell = update_runs(runs, a)
        ret += d * reward_scalar(y, a, ell, kappa_icu, kappa_soec, t_crash, p_crash)
        d *= disc
        y_path[rel] = y
        icu_path[rel] = counts[IDX_ICU] + counts[IDX_ICUV]
        a_path[rel] = a
        counts = _step_one_numpy(counts, betas[a - 1], p_ei, p_ir, p_iu, p_ur,
                                 p_vv, eps, psi, n_pop,
                                 int(daily_first[t]), int(daily_second[t]),
                                 exponential_exposure, rng)
        if rel + 1 < horizon:
            h = float(counts[IDX_ICU] + counts[IDX_ICUV])
            y = negbin_draw(rng, k_obs, h) if observe_noise else int(round(h))
    return ret, y_path, icu_path, a_path


def bin_index(thresholds: np.ndarray, y: float) -> int:
    """0-based bin index for half-open bins [THR_{g-1}, THR_g)."""
    return int(np.searchsorted(thresholds, y, side="right"))


def q_episode_numpy(counts0, y0, runs0, q, visits, thresholds,
                    betas, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi, n_pop,
                    daily_first, daily_second, t0, horizon, delta,
                    epsilon, alpha_c, episode_k, k_obs,
                    disc, kappa_icu, kappa_soec, t_crash, p_crash,
                    exponential_exposure, observe_noise, rng) -> None:
    """One training episode: M = horizon/delta slices of a fixed action,
    epsilon-greedy at slice starts, one temporally aggregated update per
    slice.  Mutates q and visits in place.

    episode_k < 0 selects per-(bin, action) visit counting for the
    learning-rate index; otherwise the given episode index is used.
    """
    n_actions = q.shape[1]
    counts = counts0.copy()
    runs = runs0.copy()
    y = int(y0)
    n_slices = horizon // delta
    for m in range(n_slices):
        g = bin_index(thresholds, y)
        if rng.random() < epsilon:
            a = 1 + int(rng.integers(0, n_actions))
        else:
            a = 1 + int(np.argmax(q[g]))
        r_slice = 0.0
        for dd in range(delta):
            t = t0 + m * delta + dd
            ell = update_runs(runs, a)
            r_slice += reward_scalar(y, a, ell, kappa_icu, kappa_soec, t_crash, p_crash)
            counts = _step_one_numpy(counts, betas[a - 1], p_ei, p_ir, p_iu,
                                     p_ur, p_vv, eps, psi, n_pop,
                                     int(daily_first[t]), int(daily_second[t]),
                                     exponential_exposure, rng)
            h = float(counts[IDX_ICU] + counts[IDX_ICUV])
            y = negbin_draw(rng, k_obs, h) if observe_noise else int(round(h))
        g2 = bin_index(thresholds, y)
        if episode_k < 0:
            visits[g, a - 1] += 1
            kk = int(visits[g, a - 1])
        else:
            kk = int(episode_k)
        alpha = alpha_c / (alpha_c + kk)
        q[g, a - 1] += alpha * (r_slice + disc * q[g2].max() - q[g, a - 1])


def pf_step_numpy(counts, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi,
                  n_pop, daily_first, daily_second, y, k_obs,
                  exponential_exposure, rng):
    """Propagate Nx particles one day and weight them by the observation."""
    new = step_batch_numpy(counts, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv,
                           eps, psi, n_pop, daily_first, daily_second,
                           exponential_exposure, rng)
    h = new[:, IDX_ICU] + new[:, IDX_ICUV]
    logw = np.array([negbin_logpmf(int(y), k_obs, float(hi)) for hi in h])
    return new, logw


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _impl(name: str):
    if active_backend() == "numba":
        from . import _numba_kernels as nk
        return getattr(nk, name)
    return globals()[name + "_numpy"]


def step_batch(counts, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi,
               n_pop, daily_first, daily_second, exponential_exposure, rng):
    return _impl("step_batch")(np.ascontiguousarray(counts, dtype=np.int64),
                               float(beta_a), float(p_ei), float(p_ir),
                               float(p_iu), float(p_ur), float(p_vv),
                               np.asarray(eps, dtype=np.float64),
                               np.asarray(psi, dtype=np.float64),
                               int(n_pop), int(daily_first), int(daily_second),
                               bool(exponential_exposure), rng)


def rollout(counts0, y0, runs0, taus, fixed_action, betas,
            p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi, n_pop,
            daily_first, daily_second, t0, horizon, k_obs, disc,
            kappa_icu, kappa_soec, t_crash, p_crash,
            exponential_exposure, observe_noise, rng):
    return _impl("rollout")(
        np.ascontiguousarray(counts0, dtype=np.int64), int(y0),
        np.ascontiguousarray(runs0, dtype=np.int64),
        np.asarray(taus, dtype=np.float64), int(fixed_action),
        np.asarray(betas, dtype=np.float64), float(p_ei), float(p_ir),
        float(p_iu), float(p_ur), float(p_vv),
        np.asarray(eps, dtype=np.float64), np.asarray(psi, dtype=np.float64),
        int(n_pop), np.ascontiguousarray(daily_first, dtype=np.int64),
        np.ascontiguousarray(daily_second, dtype=np.int64),
        int(t0), int(horizon), float(k_obs), float(disc),
        float(kappa_icu), float(kappa_soec), float(t_crash), float(p_crash),
        bool(exponential_exposure), bool(observe_noise), rng)


def q_episode(counts0, y0, runs0, q, visits, thresholds, betas,
              p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi, n_pop,
              daily_first, daily_second, t0, horizon, delta,
              epsilon, alpha_c, episode_k, k_obs, disc,
              kappa_icu, kappa_soec, t_crash, p_crash,
              exponential_exposure, observe_noise, rng) -> None:
    _impl("q_episode")(
        np.ascontiguousarray(counts0, dtype=np.int64), int(y0),
        np.ascontiguousarray(runs0, dtype=np.int64), q, visits,
        np.asarray(thresholds, dtype=np.float64),
        np.asarray(betas, dtype=np.float64), float(p_ei), float(p_ir),
        float(p_iu), float(p_ur), float(p_vv),
        np.asarray(eps, dtype=np.float64), np.asarray(psi, dtype=np.float64),
        int(n_pop), np.ascontiguousarray(daily_first, dtype=np.int64),
        np.ascontiguousarray(daily_second, dtype=np.int64),
        int(t0), int(horizon), int(delta), float(epsilon), float(alpha_c),
        int(episode_k), float(k_obs), float(disc), float(kappa_icu),
        float(kappa_soec), float(t_crash), float(p_crash),
        bool(exponential_exposure), bool(observe_noise), rng)


def pf_step_kernel(counts, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi,
                   n_pop, daily_first, daily_second, y, k_obs,
                   exponential_exposure, rng):
    return _impl("pf_step")(
        np.ascontiguousarray(counts, dtype=np.int64), float(beta_a),
        float(p_ei), float(p_ir), float(p_iu), float(p_ur), float(p_vv),
        np.asarray(eps, dtype=np.float64), np.asarray(psi, dtype=np.float64),
        int(n_pop), int(daily_first), int(daily_second), int(y), float(k_obs),
        bool(exponential_exposure), rng)
