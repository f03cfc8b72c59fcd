"""Ingestion of the ICU, vaccination, and NPI timeline CSV files.

Files are aligned to a common daily date index (the intersection of the
ICU and NPI windows).  Gaps in the vaccination series are zero-filled,
NPI levels are forward-filled from change points, and gaps in the ICU
series are an error.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..model.state import VaccinationStream

ICU_FILE = "icu.csv"
VACCINATION_FILE = "vaccinations.csv"
NPI_FILE = "npi_timeline.csv"


class MissingFileError(FileNotFoundError):
    pass


class ParseError(ValueError):
    pass


class DateAlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Daily-aligned series over [start_date, start_date + len - 1]."""

    start_date: pd.Timestamp
    icu: np.ndarray
    vax: VaccinationStream
    actions: np.ndarray

    def __len__(self) -> int:
        return len(self.icu)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start_date, periods=len(self), freq="D")


def _read(path: Path, columns: list[str]) -> pd.DataFrame:
    if not path.exists():
        raise MissingFileError(f"missing input file: {path}")
    try:
        df = pd.read_csv(path)
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ParseError(f"{path}: missing columns {missing}")
    try:
        df["date"] = pd.to_datetime(df["date"], format="ISO8601")
    except Exception as exc:
        raise ParseError(f"{path}: bad date column: {exc}") from exc
    if df["date"].duplicated().any():
        raise ParseError(f"{path}: duplicate dates")
    return df.sort_values("date").reset_index(drop=True)


def ingest(data_dir: str | Path) -> Dataset:
    """Load and align icu.csv, vaccinations.csv, npi_timeline.csv."""
    data_dir = Path(data_dir)
    icu = _read(data_dir / ICU_FILE, ["date", "icu_occupancy"])
    vax = _read(data_dir / VACCINATION_FILE, ["date", "daily_first", "daily_second"])
    npi = _read(data_dir / NPI_FILE, ["date", "action_level"])

    # NPI rows are change points: levels persist until the next change,
    # so only the first NPI date constrains the common window.
    start = max(icu["date"].min(), npi["date"].min())
    end = icu["date"].max()
    if start > end:
        raise DateAlignmentError(
            f"icu and npi windows do not overlap ({start.date()} > {end.date()})")
    index = pd.date_range(start, end, freq="D")

    icu_s = icu.set_index("date")["icu_occupancy"].reindex(index)
    if icu_s.isna().any():
        missing = index[icu_s.isna()][0].date()
        raise DateAlignmentError(f"icu series has a gap at {missing}")
    icu_arr = icu_s.to_numpy(dtype=np.int64)
    if (icu_arr < 0).any():
        raise ParseError("icu occupancy must be nonnegative")

    vq = vax.set_index("date").reindex(index)
    first = pd.to_numeric(vq["daily_first"], errors="coerce") \
        .fillna(0).to_numpy(dtype=np.int64)
    second = pd.to_numeric(vq["daily_second"], errors="coerce") \
        .fillna(0).to_numpy(dtype=np.int64)

    npi_s = npi.set_index("date")["action_level"].reindex(index).ffill()
    if npi_s.isna().any():
        raise DateAlignmentError("npi timeline starts after the common window")
    actions = npi_s.to_numpy(dtype=np.int64)
    if ((actions < 1) | (actions > 4)).any():
        raise ParseError("action levels must lie in 1..4")

    return Dataset(start_date=index[0], icu=icu_arr,
                   vax=VaccinationStream(first, second), actions=actions)


def emit_canonical(ds: Dataset, out_dir: str | Path) -> dict[str, Path]:
    """Write the aligned dataset back out in canonical dense daily form."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dates = ds.dates.strftime("%Y-%m-%d")
    paths = {}
    frames = {
        ICU_FILE: pd.DataFrame({"date": dates, "icu_occupancy": ds.icu}),
        VACCINATION_FILE: pd.DataFrame({"date": dates,
                                        "daily_first": ds.vax.daily_first,
                                        "daily_second": ds.vax.daily_second}),
        NPI_FILE: pd.DataFrame({"date": dates, "action_level": ds.actions}),
    }
    for name, frame in frames.items():
        path = out_dir / name
        frame.to_csv(path, index=False)
        paths[name] = path
    return paths
