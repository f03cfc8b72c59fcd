"""Keyed, splittable random streams.

Every stochastic component receives its own `numpy.random.Generator`
derived from a root seed plus an integer key path, e.g.
``derive(seed, STREAM_PLAN, block, k)``.  Streams derived from distinct
key paths are independent, and the derivation does not depend on the
order in which streams are created, so results are reproducible under
any parallel schedule.
"""

from __future__ import annotations

import numpy as np

# Top-level stream roles.  First key after the root seed.
STREAM_WORLD = 1      # counterfactual environment / data generator
STREAM_INFER = 2      # particle filtering and SMC-squared internals
STREAM_PLAN = 3       # planner rollouts / Q-training
STREAM_WHATIF = 4     # read-only what-if forecasts
STREAM_MISC = 5


def derive(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent PCG64 generator for (seed, *keys)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def replicate_seed(seed: int, replicate: int) -> int:
    """Stable per-replicate root seed (so replicates differ only via RNG)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))
    return int(ss.generate_state(1)[0])
