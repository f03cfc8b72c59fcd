"""Kernel benchmark: numba against the pure-numpy fallback.

Times the four hot kernels at representative shapes under both backends
and reports per-call latency plus the speedup.  Run via
``epicontrol benchmark``.
"""

from __future__ import annotations

import time

import numpy as np

from .backend import use_backend
from .model import kernels as K
from .model.params import ModelParams


def _setup(pop=100_000):
    p = ModelParams(population=pop)
    c0 = np.zeros(14, dtype=np.int64)
    c0[0] = pop - 4200
    c0[1], c0[2], c0[4], c0[3] = 1500, 2000, 200, 500
    days = 400
    df = np.full(days, pop // 500, dtype=np.int64)
    ds = np.full(days, pop // 700, dtype=np.int64)
    return p, c0, df, ds


def _time(fn, repeats: int, warmup: int = 2) -> float:
    for _ in range(warmup):
        fn()
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def benchmark_cases(pop: int = 100_000) -> list[dict]:
    p, c0, df, ds = _setup(pop)
    args = (p.p_ei, p.p_ir, p.p_iu, p.p_ur, p.p_vv, p.eps_array, p.psi_array,
            p.population)
    taus = np.array([100.0, 500.0, 1500.0])
    runs0 = np.zeros(3, dtype=np.int64)
    thr = np.geomspace(1, 2000, 39)

    def step_case(batch):
        counts = np.tile(c0, (batch, 1))

        def fn():
            K.step_batch(counts, 0.25, *args, 200, 150, False,
                         np.random.default_rng(0))
        return fn

    def rollout_case():
        def fn():
            K.rollout(c0, 150, runs0, taus, 0, p.beta_array, *args, df, ds,
                      0, 100, p.k_obs, 0.95, 1.0, 0.2, 1500.0, 1e6, False,
                      True, np.random.default_rng(0))
        return fn

    def episode_case():
        q = np.zeros((40, 4))
        v = np.zeros((40, 4), dtype=np.int64)

        def fn():
            K.q_episode(c0, 150, runs0, q, v, thr, p.beta_array, *args, df,
                        ds, 0, 50, 10, 0.2, 45.0, -1, p.k_obs, 0.95, 1.0,
                        0.2, 1500.0, 1e6, False, True, np.random.default_rng(0))
        return fn

    def pf_case(n_x):
        counts = np.tile(c0, (n_x, 1))

        def fn():
            K.pf_step_kernel(counts, 0.25, *args, 200, 150, 180, p.k_obs,
                             False, np.random.default_rng(0))
        return fn

    cases = [
        ("step batch=1", step_case(1), 300),
        ("step batch=100", step_case(100), 100),
        ("step batch=2000", step_case(2000), 20),
        ("rollout H=100", rollout_case(), 50),
        ("q-episode H=50", episode_case(), 50),
        ("pf step N_x=100", pf_case(100), 100),
    ]
    rows = []
    for name, fn, repeats in cases:
        row = {"case": name}
        for backend in ("numpy", "numba"):
            try:
                with use_backend(backend):
                    row[backend] = _time(fn, repeats)
            except RuntimeError:
                row[backend] = None
        if row.get("numpy") and row.get("numba"):
            row["speedup"] = row["numpy"] / row["numba"]
        rows.append(row)
    return rows


def format_table(rows: list[dict]) -> str:
    lines = [f"{'case':<18} {'numpy':>12} {'numba':>12} {'speedup':>9}"]
    for r in rows:
        np_ms = f"{r['numpy'] * 1e3:9.3f} ms" if r.get("numpy") else "n/a"
        nb_ms = f"{r['numba'] * 1e3:9.3f} ms" if r.get("numba") else "n/a"
        sp = f"{r['speedup']:8.1f}x" if r.get("speedup") else "n/a"
        lines.append(f"{r['case']:<18} {np_ms:>12} {nb_ms:>12} {sp:>9}")
    return "\n".join(lines)
