"""Daily time series: containers, summary statistics, CSV ingestion.

A `Series` is an immutable daily sequence anchored to a calendar date.
Observed flow and forcing inputs must be non-negative; series produced by
the corruption harness may carry negative values, so the container itself
only enforces finiteness.

All statistics use the population convention (divide by n), consistently
with every closed-form oracle elsewhere in the package.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import ComputationError, DataError

__all__ = [
    "Series",
    "Forcing",
    "SummaryStats",
    "load_series",
    "load_forcing",
    "summary_stats",
    "pearson_cc",
    "write_table_csv",
]


def _as_readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Series:
    """A daily real-valued series with a calendar anchor.

    Attributes:
        start_date: date of the first value.
        values: float64 array, one entry per consecutive day.
    """

    start_date: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_readonly(self.values))
        if self.values.ndim != 1:
            raise DataError(f"series values must be 1-D, got {self.values.ndim}-D")
        if self.n < 2:
            raise DataError(f"series needs at least 2 values, got {self.n}")
        if not np.all(np.isfinite(self.values)):
            bad = int(np.flatnonzero(~np.isfinite(self.values))[0])
            raise DataError(f"non-finite value at index {bad}")

    @property
    def n(self) -> int:
        return self.values.size

    def date_at(self, i: int) -> dt.date:
        return self.start_date + dt.timedelta(days=i)

    def drop_first(self, n: int) -> "Series":
        """Return the series with the first `n` days removed (warm-up slicing)."""
        if not 0 <= n <= self.n - 2:
            raise DataError(f"cannot drop {n} of {self.n} values")
        if n == 0:
            return self
        return Series(self.date_at(n), self.values[n:])

    def with_values(self, values) -> "Series":
        """Return a series with the same anchor but different values."""
        return Series(self.start_date, values)


@dataclass(frozen=True)
class Forcing:
    """Daily precipitation and potential evapotranspiration, aligned."""

    precip: Series
    pet: Series

    def __post_init__(self):
        if self.precip.n != self.pet.n:
            raise DataError(
                f"precip length {self.precip.n} != pet length {self.pet.n}"
            )
        if self.precip.start_date != self.pet.start_date:
            raise DataError("precip and pet start on different dates")
        for name, s in (("precip", self.precip), ("pet", self.pet)):
            if np.any(s.values < 0.0):
                bad = int(np.flatnonzero(s.values < 0.0)[0])
                raise DataError(f"negative {name} at index {bad}")

    @property
    def n(self) -> int:
        return self.precip.n

    @property
    def start_date(self) -> dt.date:
        return self.precip.start_date


@dataclass(frozen=True)
class SummaryStats:
    """Mean and population standard deviation of a series.

    The coefficient of variation is exposed as a property because it is
    undefined for a zero-mean series; accessing it then is an error rather
    than a silent NaN.
    """

    mean: float
    std: float

    @property
    def cv(self) -> float:
        if self.mean == 0.0:
            raise ComputationError("coefficient of variation undefined: mean is zero")
        return self.std / self.mean


def summary_stats(s: Series) -> SummaryStats:
    """Population mean/std of a series (n >= 2 enforced by the container)."""
    v = s.values
    mean = float(v.mean())
    std = float(np.sqrt(np.mean((v - mean) ** 2)))
    return SummaryStats(mean=mean, std=std)


def pearson_cc(a: Series, b: Series) -> float:
    """Pearson linear correlation with population covariance.

    Raises ComputationError when either series is constant (zero std), for
    which correlation is undefined.
    """
    if a.n != b.n:
        raise DataError(f"length mismatch: {a.n} vs {b.n}")
    av, bv = a.values, b.values
    da = av - av.mean()
    db = bv - bv.mean()
    var_a = float(np.mean(da * da))
    var_b = float(np.mean(db * db))
    if var_a == 0.0 or var_b == 0.0:
        raise ComputationError("correlation undefined: constant series")
    cc = float(np.mean(da * db)) / float(np.sqrt(var_a * var_b))
    # float spill only; the quotient cannot exceed 1 in exact arithmetic
    return min(1.0, max(-1.0, cc))


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------
# Format: UTF-8, comma-separated, header row, ISO-8601 dates, '.' decimals.
# One file may hold date,precip_mm,pet_mm,flow_mm; flow is optional.

PRECIP_COLUMN = "precip_mm"
PET_COLUMN = "pet_mm"
FLOW_COLUMN = "flow_mm"


def _parse_date(text: str, row: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"invalid ISO date {text!r} at row {row}") from None


def load_series(path, column: str, non_negative: bool = True) -> Series:
    """Load one named column from a daily CSV file.

    Dates must be consecutive daily with no gaps; any empty or non-numeric
    cell is a hard error.  With `non_negative` (the default for flows and
    forcings) a negative value is also an error.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        # '#' lines are header comments written by this package's exporters
        reader = csv.reader(
            line for line in fh if not line.lstrip().startswith("#")
        )
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "date" not in header:
            raise DataError(f"{path}: missing 'date' column")
        if column not in header:
            raise DataError(f"{path}: missing column {column!r}")
        i_date = header.index("date")
        i_col = header.index(column)

        values: list[float] = []
        start: dt.date | None = None
        prev: dt.date | None = None
        for row_no, row in enumerate(reader, start=2):
            if len(row) <= max(i_date, i_col):
                raise DataError(f"{path}: short row at row {row_no}")
            date = _parse_date(row[i_date], row_no)
            if prev is not None and date != prev + dt.timedelta(days=1):
                raise DataError(
                    f"{path}: date gap at row {row_no}: {prev} -> {date}"
                )
            cell = row[i_col].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} in {column!r} at row {row_no}"
                ) from None
            if not np.isfinite(value):
                raise DataError(f"{path}: non-finite value in {column!r} at row {row_no}")
            if non_negative and value < 0.0:
                raise DataError(
                    f"{path}: negative value {value} in {column!r} at row {row_no}"
                )
            if start is None:
                start = date
            prev = date
            values.append(value)

    if start is None or len(values) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(values)}")
    return Series(start, values)


def load_forcing(path) -> Forcing:
    """Load precipitation and PET from one CSV file."""
    return Forcing(
        precip=load_series(path, PRECIP_COLUMN),
        pet=load_series(path, PET_COLUMN),
    )


def write_table_csv(path, header_comments: list[str], columns: dict[str, list],
                    date_anchor: dt.date | None = None,
                    footer_comments: list[str] | None = None) -> None:
    """Write aligned columns as CSV, with '#' comment lines before the header.

    Floats are written with `repr`, which round-trips to full precision
    (at least 15 significant digits).  If `date_anchor` is given, a leading
    `date` column of consecutive days is added.  Footer comments land after
    the last row, for audit lines that summarize the table.
    """
    names = list(columns)
    lengths = {len(col) for col in columns.values()}
    if len(lengths) > 1:
        raise DataError(f"ragged columns: lengths {sorted(lengths)}")
    n = lengths.pop() if lengths else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        if date_anchor is not None:
            names = ["date"] + names
        writer.writerow(names)
        for i in range(n):
            row = []
            if date_anchor is not None:
                row.append((date_anchor + dt.timedelta(days=i)).isoformat())
            for name in columns:
                cell = columns[name][i]
                if isinstance(cell, (int, np.integer)) and not isinstance(cell, bool):
                    row.append(str(int(cell)))
                elif isinstance(cell, (float, np.floating)):
                    row.append(repr(float(cell)))
                else:
                    row.append(str(cell))
            writer.writerow(row)
        for line in footer_comments or []:
            fh.write(f"# {line}\n")
