"""Model parameters and fixed epidemiological constants."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Default population (England-scale).
DEFAULT_POPULATION = 68_000_000

# Vaccine efficacy by immunity level j = 1..5: infection protection eps_j
# and ICU-admission protection psi_j.
DEFAULT_EPS = (0.50, 0.80, 0.70, 0.60, 0.95)
DEFAULT_PSI = (0.50, 0.75, 0.70, 0.60, 0.89)

# Daily transition probabilities (fixed from prior studies / calibration).
DEFAULT_P_EI = 1.0 - np.exp(-1.0 / 9.86)
DEFAULT_P_IR = 1.0 - np.exp(-1.0 / 10.41)
DEFAULT_P_IU = 1.0 - np.exp(-1.0 / 10.0)
DEFAULT_P_UR = 1.0 / 10.0
DEFAULT_P_VV = 1.0 / 20.0

# Observation overdispersion.
DEFAULT_K_OBS = 10.0

# Nominal per-action transmission rates beta_1 > beta_2 > beta_3 > beta_4,
# one per intervention level (none / mild / semi / full lockdown).
DEFAULT_BETA = (0.318, 0.216, 0.060, 0.032)

N_ACTIONS = 4

# Vaccinated exposure probability: 'linear' uses lambda*(1-eps_j) as
# written in the transition scheme; 'exponential' uses
# 1-exp(-lambda*(1-eps_j)), matching the susceptible exposure form.
EXPOSURE_FORMS = ("linear", "exponential")


@dataclass(frozen=True)
class ModelParams:
    """Static parameters of the SEIR-VU transition and observation model."""

    beta: tuple[float, float, float, float] = DEFAULT_BETA
    p_ei: float = DEFAULT_P_EI
    p_ir: float = DEFAULT_P_IR
    p_iu: float = DEFAULT_P_IU
    p_ur: float = DEFAULT_P_UR
    p_vv: float = DEFAULT_P_VV
    eps: tuple[float, ...] = DEFAULT_EPS
    psi: tuple[float, ...] = DEFAULT_PSI
    k_obs: float = DEFAULT_K_OBS
    population: int = DEFAULT_POPULATION
    exposure_form: str = "linear"

    def __post_init__(self):
        b = self.beta
        if len(b) != N_ACTIONS or not (b[0] > b[1] > b[2] > b[3] > 0):
            raise ValueError(f"beta must satisfy beta1 > beta2 > beta3 > beta4 > 0, got {b}")
        for name in ("p_ei", "p_ir", "p_iu", "p_ur", "p_vv"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if len(self.eps) != 5 or len(self.psi) != 5:
            raise ValueError("eps and psi must have 5 immunity levels")
        if any(not 0.0 <= e <= 1.0 for e in self.eps + self.psi):
            raise ValueError("eps and psi entries must lie in [0, 1]")
        if self.k_obs <= 0:
            raise ValueError(f"k_obs must be positive, got {self.k_obs}")
        if self.population <= 0 or int(self.population) != self.population:
            raise ValueError(f"population must be a positive integer, got {self.population}")
        if self.exposure_form not in EXPOSURE_FORMS:
            raise ValueError(f"exposure_form must be one of {EXPOSURE_FORMS}")

    def beta_for(self, action: int) -> float:
        """Transmission rate under action level a in {1..4}."""
        if not 1 <= action <= N_ACTIONS:
            raise ValueError(f"action level must be in 1..{N_ACTIONS}, got {action}")
        return self.beta[action - 1]

    def with_beta(self, beta) -> "ModelParams":
        return replace(self, beta=tuple(float(b) for b in beta))

    @property
    def eps_array(self) -> np.ndarray:
        return np.asarray(self.eps, dtype=np.float64)

    @property
    def psi_array(self) -> np.ndarray:
        return np.asarray(self.psi, dtype=np.float64)

    @property
    def beta_array(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=np.float64)
