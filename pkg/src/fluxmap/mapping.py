"""Ternary mapping of acceptable runs by their runoff-mode shares.

Each run's flux fractions are a point in the 2-simplex, drawn as an
equilateral triangle whose vertices are the pure modes: slow at the
origin, wetness at (1, 0), intensity at the apex.  A run is dominated by
a mode when that mode contributes more than half of the simulated
volume; the central region where no mode passes 50% is its own class.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

from .errors import ComputationError, DataError
from .metrics import MetricId
from .models.core import FluxFractions

__all__ = [
    "DominanceClass",
    "FluxMapPoint",
    "classify",
    "ternary_coords",
    "build_points",
    "export_fluxmap",
    "read_fluxmap_csv",
    "FLUXMAP_COLUMNS",
]

FLUXMAP_COLUMNS = (
    "run_id", "f_intensity", "f_wetness", "f_slow", "x", "y", "metric", "class",
)

# Slack on the upper colour-bar bound: the overall best value may come
# from the guided search, slightly above the ensemble's own best.
_UPPER_SLACK = 0.01

_APEX_Y = math.sqrt(3.0) / 2.0


class DominanceClass(enum.Enum):
    SLOW_DOMINATED = "slow_dominated"
    WETNESS_DOMINATED = "wetness_dominated"
    INTENSITY_DOMINATED = "intensity_dominated"
    NO_DOMINANT_MODE = "no_dominant_mode"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "DominanceClass":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise DataError(f"unknown dominance class {text!r}")


@dataclass(frozen=True)
class FluxMapPoint:
    """One plotted run: where it sits and how well it scored."""

    run_id: int
    fractions: FluxFractions
    ternary_xy: tuple[float, float]
    metric_value: float
    dominance: DominanceClass


def classify(f: FluxFractions) -> DominanceClass:
    """Strict-majority rule: a mode dominates above 50%, ties never do."""
    if f.f_slow > 0.5:
        return DominanceClass.SLOW_DOMINATED
    if f.f_wetness > 0.5:
        return DominanceClass.WETNESS_DOMINATED
    if f.f_intensity > 0.5:
        return DominanceClass.INTENSITY_DOMINATED
    return DominanceClass.NO_DOMINANT_MODE


def ternary_coords(f: FluxFractions) -> tuple[float, float]:
    """Barycentric embedding: slow (0,0), wetness (1,0), intensity apex."""
    x = f.f_wetness + 0.5 * f.f_intensity
    y = _APEX_Y * f.f_intensity
    return (x, y)


def build_points(records, metric: MetricId, hmv: float,
                 threshold: float) -> list[FluxMapPoint]:
    """Turn accepted ensemble records into plot points.

    Every record must carry fractions and a metric value inside the
    colour-bar range [threshold, hmv + 0.01]; filtering is the caller's
    job and violations are reported as errors rather than dropped.
    """
    points = []
    for r in records:
        if r.fractions is None:
            raise ComputationError(
                f"run {r.run_id} has no fractions; degenerate runs cannot be mapped"
            )
        value = r.metric_values.get(metric)
        if value is None:
            raise ComputationError(f"run {r.run_id} has no {metric} value")
        if not threshold <= value <= hmv + _UPPER_SLACK:
            raise ComputationError(
                f"run {r.run_id} score {value!r} outside [{threshold!r}, "
                f"{hmv!r} + {_UPPER_SLACK}]"
            )
        points.append(FluxMapPoint(
            run_id=r.run_id,
            fractions=r.fractions,
            ternary_xy=ternary_coords(r.fractions),
            metric_value=value,
            dominance=classify(r.fractions),
        ))
    return points


def export_fluxmap(points: list[FluxMapPoint], hmv: float, threshold: float,
                   path, metric: MetricId, ensemble_size: int,
                   seed: int | None = None) -> None:
    """Write the plot-ready CSV; header comments record the context."""
    comments = [
        f"metric = {metric}",
        f"hmv = {hmv!r}",
        f"threshold = {threshold!r}",
        f"ensemble_size = {ensemble_size}",
    ]
    if seed is not None:
        comments.append(f"seed = {seed}")
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}")
    with fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(FLUXMAP_COLUMNS) + "\n")
        for p in points:
            fh.write(",".join([
                str(p.run_id),
                repr(p.fractions.f_intensity),
                repr(p.fractions.f_wetness),
                repr(p.fractions.f_slow),
                repr(p.ternary_xy[0]),
                repr(p.ternary_xy[1]),
                repr(p.metric_value),
                str(p.dominance),
            ]) + "\n")


def read_fluxmap_csv(path) -> tuple[list[FluxMapPoint], dict[str, str]]:
    """Round-trip reader: points plus the header-comment metadata."""
    meta: dict[str, str] = {}
    points: list[FluxMapPoint] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}")
    with fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = tuple(cells)
                if header != FLUXMAP_COLUMNS:
                    raise DataError(f"{path}: unexpected columns {header}")
                continue
            if len(cells) != len(FLUXMAP_COLUMNS):
                raise DataError(f"{path} line {lineno}: wrong field count")
            try:
                fractions = FluxFractions(
                    f_intensity=float(cells[1]),
                    f_wetness=float(cells[2]),
                    f_slow=float(cells[3]),
                )
                points.append(FluxMapPoint(
                    run_id=int(cells[0]),
                    fractions=fractions,
                    ternary_xy=(float(cells[4]), float(cells[5])),
                    metric_value=float(cells[6]),
                    dominance=DominanceClass.parse(cells[7]),
                ))
            except ValueError as exc:
                raise DataError(f"{path} line {lineno}: {exc}")
    if header is None:
        raise DataError(f"{path} has no header row")
    return points, meta
