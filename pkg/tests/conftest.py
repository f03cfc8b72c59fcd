import numpy as np
import pytest

from epicontrol.backend import active_backend
from epicontrol.model import kernels as K


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed tests measure steady state."""
    if active_backend() != "numba":
        return
    rng = np.random.default_rng(0)
    c = np.zeros((2, 14), dtype=np.int64)
    c[:, 0] = 1000
    eps = np.full(5, 0.5)
    psi = np.full(5, 0.5)
    K.step_batch(c, 0.3, 0.1, 0.1, 0.1, 0.1, 0.05, eps, psi, 1000, 0, 0, False, rng)
    df = np.zeros(30, dtype=np.int64)
    K.rollout(c[0], 0, np.zeros(3, dtype=np.int64), np.array([1.0, 2.0, 3.0]), 0,
              np.array([0.4, 0.3, 0.2, 0.1]), 0.1, 0.1, 0.1, 0.1, 0.05,
              eps, psi, 1000, df, df, 0, 5, 10.0, 0.95, 1.0, 0.2, 6000.0, 1e5,
              False, True, rng)
    q = np.zeros((4, 4))
    v = np.zeros((4, 4), dtype=np.int64)
    K.q_episode(c[0], 0, np.zeros(3, dtype=np.int64), q, v, np.array([5.0, 50.0, 500.0]),
                np.array([0.4, 0.3, 0.2, 0.1]), 0.1, 0.1, 0.1, 0.1, 0.05,
                eps, psi, 1000, df, df, 0, 10, 5, 0.2, 45.0, -1, 10.0, 0.95,
                1.0, 0.2, 6000.0, 1e5, False, True, rng)
    K.pf_step_kernel(c, 0.3, 0.1, 0.1, 0.1, 0.1, 0.05, eps, psi, 1000, 0, 0,
                     3, 10.0, False, rng)
