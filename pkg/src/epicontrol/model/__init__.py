"""Stochastic SEIR-VU compartmental model: state, parameters, dynamics."""

from .dynamics import (
    force_of_infection,
    icu_admission_prob_vaccinated,
    log_likelihood,
    observe,
    second_dose_allocation,
    simulate,
    step,
    step_mean,
)
from .params import (
    DEFAULT_BETA,
    DEFAULT_K_OBS,
    DEFAULT_POPULATION,
    N_ACTIONS,
    ModelParams,
)
from .state import (
    COMPARTMENTS,
    N_COMPARTMENTS,
    CompartmentState,
    MalformedStreamError,
    Observation,
    VaccinationStream,
)

__all__ = [
    "COMPARTMENTS", "N_COMPARTMENTS", "N_ACTIONS",
    "DEFAULT_BETA", "DEFAULT_K_OBS", "DEFAULT_POPULATION",
    "CompartmentState", "ModelParams", "Observation", "VaccinationStream",
    "MalformedStreamError",
    "force_of_infection", "icu_admission_prob_vaccinated", "log_likelihood",
    "observe", "second_dose_allocation", "simulate", "step", "step_mean",
]
