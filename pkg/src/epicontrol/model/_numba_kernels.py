"""Numba twins of the simulation kernels.

Every function mirrors its numpy counterpart in
:mod:`epicontrol.model.kernels` and consumes the generator in the same
canonical order (transition-major over particles), so both backends
produce bit-identical trajectories from the same generator state.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

IDX_S, IDX_E, IDX_I, IDX_R, IDX_ICU = 0, 1, 2, 3, 4
IDX_V1, IDX_V2, IDX_V3, IDX_V4, IDX_V5 = 5, 6, 7, 8, 9
IDX_EV, IDX_IV, IDX_RV, IDX_ICUV = 10, 11, 12, 13

LOG_WEIGHT_FLOOR = -1.0e30

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _cond_p(p_second, p_first):
    if p_first >= 1.0:
        return 0.0
    q = p_second / (1.0 - p_first)
    return min(max(q, 0.0), 1.0)


@njit(**_JIT)
def _exposure_prob(lam, one_minus_eps, exponential):
    if exponential:
        return -math.expm1(-lam * one_minus_eps)
    return min(max(lam * one_minus_eps, 0.0), 1.0)


@njit(**_JIT)
def _negbin_logpmf(y, k_obs, mean):
    if y < 0:
        return LOG_WEIGHT_FLOOR
    if mean <= 0.0:
        return 0.0 if y == 0 else LOG_WEIGHT_FLOOR
    p = k_obs / (k_obs + mean)
    return (math.lgamma(y + k_obs) - math.lgamma(k_obs) - math.lgamma(y + 1.0)
            + k_obs * math.log(p) + y * math.log1p(-p))


@njit(**_JIT)
def _negbin_draw(rng, k_obs, mean):
    if mean <= 0.0:
        return np.int64(0)
    lam = rng.gamma(k_obs, mean / k_obs)
    return np.int64(rng.poisson(lam))


@njit(**_JIT)
def step_batch(counts, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv,
               eps, psi, n_pop, daily_first, daily_second,
               exponential_exposure, rng):
    n = counts.shape[0]
    out = np.empty_like(counts)
    npop = float(n_pop)

    sv = np.empty(n, dtype=np.int64)
    d3 = np.empty(n, dtype=np.int64)
    d4 = np.empty(n, dtype=np.int64)
    lam = np.empty(n, dtype=np.float64)
    for i in range(n):
        sv[i] = min(daily_first, counts[i, IDX_S])
        d4[i] = min(daily_second, counts[i, IDX_V4])
        d3[i] = min(counts[i, IDX_V3], daily_second - d4[i])
        lam[i] = beta_a * (counts[i, IDX_I] + counts[i, IDX_IV]) / npop

    se = np.empty(n, dtype=np.int64)
    for i in range(n):
        se[i] = rng.binomial(counts[i, IDX_S] - sv[i], -math.expm1(-lam[i]))
    ei = np.empty(n, dtype=np.int64)
    for i in range(n):
        ei[i] = rng.binomial(counts[i, IDX_E], p_ei)
    ir = np.empty(n, dtype=np.int64)
    for i in range(n):
        ir[i] = rng.binomial(counts[i, IDX_I], p_ir)
    iu = np.empty(n, dtype=np.int64)
    q_iu = _cond_p(p_iu, p_ir)
    for i in range(n):
        iu[i] = rng.binomial(counts[i, IDX_I] - ir[i], q_iu)
    ur = np.empty(n, dtype=np.int64)
    for i in range(n):
        ur[i] = rng.binomial(counts[i, IDX_ICU], p_ur)

    vv = np.empty((n, 3), dtype=np.int64)
    ve = np.empty((n, 5), dtype=np.int64)
    wane_cap = 1.0 - p_vv
    for j in range(3):
        for i in range(n):
            m = counts[i, IDX_V1 + j] - (d3[i] if j == 2 else 0)
            vv[i, j] = rng.binomial(m, p_vv)
        for i in range(n):
            m = counts[i, IDX_V1 + j] - (d3[i] if j == 2 else 0)
            p_ve = _exposure_prob(lam[i], 1.0 - eps[j], exponential_exposure)
            if wane_cap > 0.0:
                q_ve = min(max(p_ve / wane_cap, 0.0), 1.0)
            else:
                q_ve = 0.0
            ve[i, j] = rng.binomial(m - vv[i, j], q_ve)
    for j in range(3, 5):
        for i in range(n):
            m = counts[i, IDX_V1 + j] - (d4[i] if j == 3 else 0)
            p_ve = _exposure_prob(lam[i], 1.0 - eps[j], exponential_exposure)
            ve[i, j] = rng.binomial(m, p_ve)

    eiv = np.empty(n, dtype=np.int64)
    for i in range(n):
        eiv[i] = rng.binomial(counts[i, IDX_EV], p_ei)
    irv = np.empty(n, dtype=np.int64)
    for i in range(n):
        irv[i] = rng.binomial(counts[i, IDX_IV], p_ir)
    iuv = np.empty(n, dtype=np.int64)
    for i in range(n):
        v1 = counts[i, IDX_V1]
        v2 = counts[i, IDX_V2]
        v3 = counts[i, IDX_V3]
        v4 = counts[i, IDX_V4]
        v5 = counts[i, IDX_V5]
        vtot = v1 + v2 + v3 + v4 + v5
        if vtot > 0:
            num = ((1.0 - psi[0]) * v1 + (1.0 - psi[1]) * v2 + (1.0 - psi[2]) * v3
                   + (1.0 - psi[3]) * v4 + (1.0 - psi[4]) * v5)
            p_viu = p_iu * num / float(max(vtot, 1))
        else:
            p_viu = 0.0
        if p_ir < 1.0:
            q_viu = min(max(p_viu / (1.0 - p_ir), 0.0), 1.0)
        else:
            q_viu = 0.0
        iuv[i] = rng.binomial(counts[i, IDX_IV] - irv[i], q_viu)
    urv = np.empty(n, dtype=np.int64)
    for i in range(n):
        urv[i] = rng.binomial(counts[i, IDX_ICUV], p_ur)

    for i in range(n):
        out[i, IDX_S] = counts[i, IDX_S] - sv[i] - se[i]
        out[i, IDX_E] = counts[i, IDX_E] + se[i] - ei[i]
        out[i, IDX_I] = counts[i, IDX_I] + ei[i] - ir[i] - iu[i]
        out[i, IDX_R] = counts[i, IDX_R] + ir[i] + ur[i]
        out[i, IDX_ICU] = counts[i, IDX_ICU] + iu[i] - ur[i]
        out[i, IDX_V1] = counts[i, IDX_V1] + sv[i] - vv[i, 0] - ve[i, 0]
        out[i, IDX_V2] = counts[i, IDX_V2] + vv[i, 0] - vv[i, 1] - ve[i, 1]
        out[i, IDX_V3] = counts[i, IDX_V3] + vv[i, 1] - d3[i] - vv[i, 2] - ve[i, 2]
        out[i, IDX_V4] = counts[i, IDX_V4] + vv[i, 2] - d4[i] - ve[i, 3]
        out[i, IDX_V5] = counts[i, IDX_V5] + d3[i] + d4[i] - ve[i, 4]
        out[i, IDX_EV] = (counts[i, IDX_EV] + ve[i, 0] + ve[i, 1] + ve[i, 2]
                          + ve[i, 3] + ve[i, 4] - eiv[i])
        out[i, IDX_IV] = counts[i, IDX_IV] + eiv[i] - irv[i] - iuv[i]
        out[i, IDX_RV] = counts[i, IDX_RV] + irv[i] + urv[i]
        out[i, IDX_ICUV] = counts[i, IDX_ICUV] + iuv[i] - urv[i]
    return out


@njit(**_JIT)
def _step_one(c, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv,
              eps, psi, n_pop, daily_first, daily_second,
              exponential_exposure, rng):
    """Single-trajectory transition; draw order matches step_batch at n=1."""
    sv = min(daily_first, c[IDX_S])
    d4 = min(daily_second, c[IDX_V4])
    d3 = min(c[IDX_V3], daily_second - d4)
    lam = beta_a * (c[IDX_I] + c[IDX_IV]) / float(n_pop)

    se = rng.binomial(c[IDX_S] - sv, -math.expm1(-lam))
    ei = rng.binomial(c[IDX_E], p_ei)
    ir = rng.binomial(c[IDX_I], p_ir)
    iu = rng.binomial(c[IDX_I] - ir, _cond_p(p_iu, p_ir))
    ur = rng.binomial(c[IDX_ICU], p_ur)

    wane_cap = 1.0 - p_vv
    vv = np.zeros(3, dtype=np.int64)
    ve = np.zeros(5, dtype=np.int64)
    for j in range(3):
        m = c[IDX_V1 + j] - (d3 if j == 2 else 0)
        vv[j] = rng.binomial(m, p_vv)
        p_ve = _exposure_prob(lam, 1.0 - eps[j], exponential_exposure)
        if wane_cap > 0.0:
            q_ve = min(max(p_ve / wane_cap, 0.0), 1.0)
        else:
            q_ve = 0.0
        ve[j] = rng.binomial(m - vv[j], q_ve)
    for j in range(3, 5):
        m = c[IDX_V1 + j] - (d4 if j == 3 else 0)
        p_ve = _exposure_prob(lam, 1.0 - eps[j], exponential_exposure)
        ve[j] = rng.binomial(m, p_ve)

    eiv = rng.binomial(c[IDX_EV], p_ei)
    irv = rng.binomial(c[IDX_IV], p_ir)
    vtot = c[IDX_V1] + c[IDX_V2] + c[IDX_V3] + c[IDX_V4] + c[IDX_V5]
    if vtot > 0:
        num = ((1.0 - psi[0]) * c[IDX_V1] + (1.0 - psi[1]) * c[IDX_V2]
               + (1.0 - psi[2]) * c[IDX_V3] + (1.0 - psi[3]) * c[IDX_V4]
               + (1.0 - psi[4]) * c[IDX_V5])
        p_viu = p_iu * num / float(max(vtot, 1))
    else:
        p_viu = 0.0
    if p_ir < 1.0:
        q_viu = min(max(p_viu / (1.0 - p_ir), 0.0), 1.0)
    else:
        q_viu = 0.0
    iuv = rng.binomial(c[IDX_IV] - irv, q_viu)
    urv = rng.binomial(c[IDX_ICUV], p_ur)

    out = np.empty(14, dtype=np.int64)
    out[IDX_S] = c[IDX_S] - sv - se
    out[IDX_E] = c[IDX_E] + se - ei
    out[IDX_I] = c[IDX_I] + ei - ir - iu
    out[IDX_R] = c[IDX_R] + ir + ur
    out[IDX_ICU] = c[IDX_ICU] + iu - ur
    out[IDX_V1] = c[IDX_V1] + sv - vv[0] - ve[0]
    out[IDX_V2] = c[IDX_V2] + vv[0] - vv[1] - ve[1]
    out[IDX_V3] = c[IDX_V3] + vv[1] - d3 - vv[2] - ve[2]
    out[IDX_V4] = c[IDX_V4] + vv[2] - d4 - ve[3]
    out[IDX_V5] = c[IDX_V5] + d3 + d4 - ve[4]
    out[IDX_EV] = c[IDX_EV] + ve[0] + ve[1] + ve[2] + ve[3] + ve[4] - eiv
    out[IDX_IV] = c[IDX_IV] + eiv - irv - iuv
    out[IDX_RV] = c[IDX_RV] + irv + urv
    out[IDX_ICUV] = c[IDX_ICUV] + iuv - urv
    return out


@njit(**_JIT)
def _intervention_cost(a, ell):
    if a == 2:
        return 50.0 * math.log1p(ell)
    if a == 3:
        return 200.0 * ell
    if a == 4:
        return 800.0 * ell
    return 0.0


@njit(**_JIT)
def _reward(y, a, ell, kappa_icu, kappa_soec, t_crash, p_crash):
    if y > t_crash:
        return -p_crash
    return -kappa_icu * y - kappa_soec * _intervention_cost(a, ell)


@njit(**_JIT)
def _update_runs(runs, a):
    for level in range(2, 5):
        if a >= level:
            runs[level - 2] += 1
        else:
            runs[level - 2] = 0
    if a == 1:
        return 0
    return int(runs[a - 2])


@njit(**_JIT)
def _threshold_action(y, tau1, tau2, tau3):
    if y < tau1:
        return 1
    if y < tau2:
        return 2
    if y < tau3:
        return 3
    return 4


@njit(**_JIT)
def rollout(counts0, y0, runs0, taus, fixed_action,
            betas, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi, n_pop,
            daily_first, daily_second, t0, horizon,
            k_obs, disc, kappa_icu, kappa_soec, t_crash, p_crash,
            exponential_exposure, observe_noise, rng):
    counts = counts0.copy()
    runs = runs0.copy()
    y = y0
    ret = 0.0
    d = 1.0
    y_path = np.empty(horizon, dtype=np.int64)
    icu_path = np.empty(horizon, dtype=np.int64)
    a_path = np.empty(horizon, dtype=np.int64)
    for rel in range(horizon):
        t = t0 + rel
        if fixed_action > 0:
            a = fixed_action
        else:
            a = _threshold_action(y, taus[0], taus[1], taus[2])
        ell = _update_runs(runs, a)
        ret += d * _reward(float(y), a, ell, kappa_icu, kappa_soec, t_crash, p_crash)
        d *= disc
        y_path[rel] = y
        icu_path[rel] = counts[IDX_ICU] + counts[IDX_ICUV]
        a_path[rel] = a
        counts = _step_one(counts, betas[a - 1], p_ei, p_ir, p_iu, p_ur, p_vv,
                           eps, psi, n_pop, daily_first[t], daily_second[t],
                           exponential_exposure, rng)
        if rel + 1 < horizon:
            h = float(counts[IDX_ICU] + counts[IDX_ICUV])
            if observe_noise:
                y = _negbin_draw(rng, k_obs, h)
            else:
                y = np.int64(round(h))
    return ret, y_path, icu_path, a_path


@njit(**_JIT)
def _bin_index(thresholds, y):
    return int(np.searchsorted(thresholds, y, side="right"))


@njit(**_JIT)
def q_episode(counts0, y0, runs0, q, visits, thresholds,
              betas, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi, n_pop,
              daily_first, daily_second, t0, horizon, delta,
              epsilon, alpha_c, episode_k, k_obs,
              disc, kappa_icu, kappa_soec, t_crash, p_crash,
              exponential_exposure, observe_noise, rng):
    n_actions = q.shape[1]
    counts = counts0.copy()
    runs = runs0.copy()
    y = y0
    n_slices = horizon // delta
    for m in range(n_slices):
        g = _bin_index(thresholds, y)
        if rng.random() < epsilon:
            a = 1 + int(rng.integers(0, n_actions))
        else:
            a = 1 + int(np.argmax(q[g]))
        r_slice = 0.0
        for dd in range(delta):
            t = t0 + m * delta + dd
            ell = _update_runs(runs, a)
            r_slice += _reward(float(y), a, ell, kappa_icu, kappa_soec, t_crash, p_crash)
            counts = _step_one(counts, betas[a - 1], p_ei, p_ir, p_iu, p_ur, p_vv,
                               eps, psi, n_pop, daily_first[t], daily_second[t],
                               exponential_exposure, rng)
            h = float(counts[IDX_ICU] + counts[IDX_ICUV])
            if observe_noise:
                y = _negbin_draw(rng, k_obs, h)
            else:
                y = np.int64(round(h))
        g2 = _bin_index(thresholds, y)
        if episode_k < 0:
            visits[g, a - 1] += 1
            kk = visits[g, a - 1]
        else:
            kk = episode_k
        alpha = alpha_c / (alpha_c + kk)
        best_next = q[g2, 0]
        for aa in range(1, n_actions):
            if q[g2, aa] > best_next:
                best_next = q[g2, aa]
        q[g, a - 1] += alpha * (r_slice + disc * best_next - q[g, a - 1])


@njit(**_JIT)
def pf_step(counts, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi,
            n_pop, daily_first, daily_second, y, k_obs,
            exponential_exposure, rng):
    new = step_batch(counts, beta_a, p_ei, p_ir, p_iu, p_ur, p_vv, eps, psi,
                     n_pop, daily_first, daily_second, exponential_exposure, rng)
    n = new.shape[0]
    logw = np.empty(n, dtype=np.float64)
    for i in range(n):
        h = float(new[i, IDX_ICU] + new[i, IDX_ICUV])
        logw[i] = _negbin_logpmf(y, k_obs, h)
    return new, logw
