"""Sequential Bayesian inference: particle filtering and SMC-squared."""

from .checkpoint import load_cloud, save_cloud
from .particle_filter import DegeneracyError, InnerParticleSet, pf_run, pf_step, pf_update
from .priors import PriorSpec
from .resampling import ess, normalize_log_weights, systematic_indices, systematic_resample
from .smc2 import (
    PosteriorCloud,
    Smc2Config,
    init_cloud,
    resample_move,
    sample_posterior,
    smc2_assimilate,
    warm_start,
)

__all__ = [
    "DegeneracyError", "InnerParticleSet", "PosteriorCloud", "PriorSpec",
    "Smc2Config", "ess", "init_cloud", "load_cloud", "normalize_log_weights",
    "pf_run", "pf_step", "pf_update", "resample_move", "sample_posterior",
    "save_cloud", "smc2_assimilate", "systematic_indices",
    "systematic_resample", "warm_start",
]
