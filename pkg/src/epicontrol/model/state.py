"""Compartment state, vaccination stream, and observation types."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Column layout of the 14-compartment state vector.
COMPARTMENTS = (
    "S", "E", "I", "R", "ICU",
    "V1", "V2", "V3", "V4", "V5",
    "E_V", "I_V", "R_V", "ICU_V",
)
N_COMPARTMENTS = len(COMPARTMENTS)

IDX = {name: i for i, name in enumerate(COMPARTMENTS)}
IDX_S, IDX_E, IDX_I, IDX_R, IDX_ICU = 0, 1, 2, 3, 4
IDX_V1, IDX_V2, IDX_V3, IDX_V4, IDX_V5 = 5, 6, 7, 8, 9
IDX_EV, IDX_IV, IDX_RV, IDX_ICUV = 10, 11, 12, 13


class MalformedStreamError(ValueError):
    """Vaccination data missing for a simulated day."""


@dataclass(frozen=True)
class CompartmentState:
    """Counts in the 14 compartments on one day.

    All fields are nonnegative integers and sum exactly to the
    population constant; `day` is the day index t >= 0.
    """

    S: int
    E: int
    I: int
    R: int
    ICU: int
    V1: int
    V2: int
    V3: int
    V4: int
    V5: int
    E_V: int
    I_V: int
    R_V: int
    ICU_V: int
    day: int = 0

    def __post_init__(self):
        if self.day < 0:
            raise ValueError(f"day must be >= 0, got {self.day}")
        for name in COMPARTMENTS:
            v = getattr(self, name)
            if v < 0 or int(v) != v:
                raise ValueError(f"compartment {name}={v} must be a nonnegative integer")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in COMPARTMENTS], dtype=np.int64)

    @classmethod
    def from_array(cls, arr, day: int) -> "CompartmentState":
        arr = np.asarray(arr)
        if arr.shape != (N_COMPARTMENTS,):
            raise ValueError(f"expected shape ({N_COMPARTMENTS},), got {arr.shape}")
        return cls(*(int(v) for v in arr), day=int(day))

    @property
    def total(self) -> int:
        return int(sum(getattr(self, n) for n in COMPARTMENTS))

    @property
    def infectious(self) -> int:
        return self.I + self.I_V

    @property
    def icu_load(self) -> int:
        """Total ICU occupancy H(t), vaccinated plus unvaccinated."""
        return self.ICU + self.ICU_V

    @classmethod
    def seeded(cls, population: int, exposed: int = 0, infectious: int = 0,
               day: int = 0) -> "CompartmentState":
        """All-susceptible state with a small initial seed of E and I."""
        s = population - exposed - infectious
        if s < 0:
            raise ValueError("seed counts exceed population")
        return cls(S=s, E=exposed, I=infectious, R=0, ICU=0,
                   V1=0, V2=0, V3=0, V4=0, V5=0,
                   E_V=0, I_V=0, R_V=0, ICU_V=0, day=day)


@dataclass(frozen=True)
class VaccinationStream:
    """Daily first- and second-dose counts for the full data window."""

    daily_first: np.ndarray
    daily_second: np.ndarray

    def __post_init__(self):
        df = np.ascontiguousarray(np.asarray(self.daily_first, dtype=np.int64))
        ds = np.ascontiguousarray(np.asarray(self.daily_second, dtype=np.int64))
        if df.ndim != 1 or ds.ndim != 1 or len(df) != len(ds):
            raise MalformedStreamError("daily_first and daily_second must be 1-d and equal length")
        if (df < 0).any() or (ds < 0).any():
            raise MalformedStreamError("vaccination counts must be nonnegative")
        object.__setattr__(self, "daily_first", df)
        object.__setattr__(self, "daily_second", ds)

    def __len__(self) -> int:
        return len(self.daily_first)

    def check_covers(self, day: int) -> None:
        if not 0 <= day < len(self):
            raise MalformedStreamError(
                f"no vaccination data for day {day} (stream covers 0..{len(self) - 1})")

    def doses_on(self, day: int) -> tuple[int, int]:
        self.check_covers(day)
        return int(self.daily_first[day]), int(self.daily_second[day])

    def extended(self, days: int) -> "VaccinationStream":
        """Zero-filled extension so the stream covers at least `days` days."""
        if days <= len(self):
            return self
        pad = days - len(self)
        return VaccinationStream(
            np.concatenate([self.daily_first, np.zeros(pad, dtype=np.int64)]),
            np.concatenate([self.daily_second, np.zeros(pad, dtype=np.int64)]),
        )

    @classmethod
    def zeros(cls, days: int) -> "VaccinationStream":
        return cls(np.zeros(days, dtype=np.int64), np.zeros(days, dtype=np.int64))


@dataclass(frozen=True)
class Observation:
    """Reported ICU occupancy y >= 0 on a given day."""

    y: int
    day: int

    def __post_init__(self):
        if self.y < 0:
            raise ValueError(f"observation must be >= 0, got {self.y}")
