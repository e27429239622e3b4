"""Experiment orchestration: ensembles, best-value bookkeeping, filtering.

The workflow this module serves has three stages:

  1. evaluate a large sampled ensemble of parameter sets, scoring every
     run with every requested metric on one shared simulation,
  2. compare the ensemble's best metric value with the best found by the
     guided search; if they disagree by more than 0.01 the weaker side
     demonstrably under-sampled its space,
  3. keep the runs scoring within a chosen distance of the overall best
     value ("acceptable" runs) for downstream flux mapping.

Evaluation never aborts on a bad run: failures become per-record tags so
million-run ensembles are auditable after the fact.
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import ComputationError, DataError, FluxmapError
from .metrics import MetricId, evaluate
from .models.core import (
    ModelId,
    flow_from_table,
    fractions_from_table,
    FluxFractions,
    run_fluxes,
)
from .sampling import ParameterSet, ParameterSpace
from .series import Forcing, Series

__all__ = [
    "EvaluationRecord",
    "SufficiencyVerdict",
    "AcceptabilityFilter",
    "InadequateSide",
    "DEFAULT_COMPLEXES",
    "SUFFICIENCY_MARGIN",
    "run_ensemble",
    "evaluate_matrix",
    "make_objective",
    "sufficiency",
    "acceptable_runs",
    "write_ensemble_csv",
    "iter_ensemble_csv",
]

# Complexes for the guided search, scaled to each model's dimensionality.
DEFAULT_COMPLEXES = {ModelId.SIMHYD: 4, ModelId.SACRAMENTO: 6}

SUFFICIENCY_MARGIN = 0.01
# Slack so the margin behaves like exact decimal arithmetic: 0.81 - 0.80
# must count as a difference of 0.01, not 0.010000000000000009.
_MARGIN_SLACK = 1e-12

DEGENERATE_FLAG = "degenerate"


@dataclass(frozen=True)
class EvaluationRecord:
    """One scored ensemble member.

    metric_values holds every metric that evaluated cleanly; anything
    missing is explained by a tag in `flags` ("degenerate" for zero-flow
    runs, "error:<where>:<kind>" for failures).
    """

    run_id: int
    params: ParameterSet
    metric_values: dict[MetricId, float]
    fractions: FluxFractions | None
    flags: tuple[str, ...] = ()

    @property
    def degenerate(self) -> bool:
        return DEGENERATE_FLAG in self.flags

    @property
    def failed(self) -> bool:
        return any(f.startswith("error:") for f in self.flags)


class InadequateSide(enum.Enum):
    ENSEMBLE = "ensemble"
    SCE = "sce"
    NEITHER = "neither"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SufficiencyVerdict:
    """Has random sampling found what the guided search found (or better)?"""

    metric: MetricId
    ensemble_hmv: float
    sce_hmv: float
    hmv: float
    sufficient: bool
    inadequate_side: InadequateSide

    def to_json(self) -> str:
        return json.dumps({
            "metric": str(self.metric),
            "ensemble_hmv": self.ensemble_hmv,
            "sce_hmv": self.sce_hmv,
            "hmv": self.hmv,
            "sufficient": self.sufficient,
            "inadequate_side": str(self.inadequate_side),
        }, indent=2)


@dataclass(frozen=True)
class AcceptabilityFilter:
    """Keep runs scoring at or above hmv - delta."""

    metric: MetricId
    delta: float
    threshold: float

    def __post_init__(self):
        if not self.delta > 0.0:
            raise DataError(f"delta must be > 0, got {self.delta!r}")

    @classmethod
    def from_hmv(cls, metric: MetricId, delta: float, hmv: float) -> "AcceptabilityFilter":
        return cls(metric=metric, delta=delta, threshold=hmv - delta)

    def to_json(self) -> str:
        return json.dumps({
            "metric": str(self.metric),
            "delta": self.delta,
            "threshold": self.threshold,
        }, indent=2)

    def accepts(self, record: EvaluationRecord) -> bool:
        if record.degenerate or record.fractions is None:
            return False
        value = record.metric_values.get(self.metric)
        return value is not None and value >= self.threshold


def _check_alignment(forcing: Forcing, obs: Series, warmup: int) -> None:
    if warmup < 0:
        raise DataError(f"warmup must be >= 0, got {warmup}")
    expected = forcing.precip.n - warmup
    if obs.n != expected:
        raise DataError(
            f"observed series has {obs.n} days; forcing minus warm-up has {expected}"
        )
    if obs.start_date != forcing.precip.date_at(warmup):
        raise DataError(
            f"observed series starts {obs.start_date}, scoring window starts "
            f"{forcing.precip.date_at(warmup)}"
        )


def _evaluate_one(model: ModelId, run_id: int, theta: np.ndarray,
                  precip: np.ndarray, pet: np.ndarray, obs: Series,
                  metrics: tuple[MetricId, ...], warmup: int) -> EvaluationRecord:
    params = ParameterSet(values=tuple(map(float, theta)))
    flags: list[str] = []
    values: dict[MetricId, float] = {}
    fractions = None
    try:
        table = run_fluxes(model, theta, precip, pet)
    except FluxmapError as exc:
        flags.append(f"error:run:{type(exc).__name__}")
    else:
        scored = table[warmup:]
        sim = obs.with_values(flow_from_table(scored))
        fractions = fractions_from_table(scored)
        if fractions is None:
            flags.append(DEGENERATE_FLAG)
        for metric in metrics:
            try:
                values[metric] = evaluate(metric, obs, sim)
            except FluxmapError as exc:
                flags.append(f"error:{metric}:{type(exc).__name__}")
    return EvaluationRecord(
        run_id=run_id, params=params, metric_values=values,
        fractions=fractions, flags=tuple(flags),
    )


def evaluate_matrix(model: ModelId, matrix: np.ndarray, forcing: Forcing,
                    obs: Series, metrics: Iterable[MetricId], warmup: int,
                    threads: int = 1, start_id: int = 0,
                    batch: int = 10_000) -> Iterator[EvaluationRecord]:
    """Score parameter vectors row by row, yielding records in row order.

    Rows are dispatched to a thread pool in fixed-size batches so memory
    stays bounded for million-row matrices; the yielded order and every
    value are independent of `threads`.
    """
    _check_alignment(forcing, obs, warmup)
    metrics = tuple(metrics)
    precip = forcing.precip.values
    pet = forcing.pet.values

    def one(item):
        offset, theta = item
        return _evaluate_one(
            model, start_id + offset, theta, precip, pet, obs, metrics, warmup
        )

    n = matrix.shape[0]
    if threads <= 1:
        for i in range(n):
            yield one((i, matrix[i]))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for lo in range(0, n, batch):
            hi = min(lo + batch, n)
            items = [(i, matrix[i]) for i in range(lo, hi)]
            yield from pool.map(one, items)


def run_ensemble(model: ModelId, sets: list[ParameterSet], forcing: Forcing,
                 obs: Series, metrics: Iterable[MetricId], warmup: int,
                 threads: int = 1) -> list[EvaluationRecord]:
    """Score every parameter set; one record per set, in input order."""
    if not sets:
        return []
    matrix = np.array([s.values for s in sets])
    return list(evaluate_matrix(
        model, matrix, forcing, obs, metrics, warmup, threads=threads
    ))


def make_objective(model: ModelId, metric: MetricId, forcing: Forcing,
                   obs: Series, warmup: int):
    """Objective for the guided search: metric value of one simulation."""
    _check_alignment(forcing, obs, warmup)
    precip = forcing.precip.values
    pet = forcing.pet.values

    def objective(pset: ParameterSet) -> float:
        table = run_fluxes(model, np.array(pset.values), precip, pet)
        sim = obs.with_values(flow_from_table(table[warmup:]))
        return evaluate(metric, obs, sim)

    return objective


def sufficiency(ensemble: Iterable[EvaluationRecord], sce_hmv: float,
                metric: MetricId) -> SufficiencyVerdict:
    """Compare the ensemble's best value with the guided search's best."""
    ensemble_hmv = None
    for record in ensemble:
        value = record.metric_values.get(metric)
        if value is not None and (ensemble_hmv is None or value > ensemble_hmv):
            ensemble_hmv = value
    if ensemble_hmv is None:
        raise ComputationError(
            f"no record in the ensemble has a usable {metric} value"
        )
    return verdict_from_values(metric, ensemble_hmv, sce_hmv)


def verdict_from_values(metric: MetricId, ensemble_hmv: float,
                        sce_hmv: float) -> SufficiencyVerdict:
    gap = abs(ensemble_hmv - sce_hmv)
    sufficient = gap <= SUFFICIENCY_MARGIN + _MARGIN_SLACK
    if sufficient:
        side = InadequateSide.NEITHER
    elif ensemble_hmv < sce_hmv:
        side = InadequateSide.ENSEMBLE
    else:
        side = InadequateSide.SCE
    return SufficiencyVerdict(
        metric=metric,
        ensemble_hmv=ensemble_hmv,
        sce_hmv=sce_hmv,
        hmv=max(ensemble_hmv, sce_hmv),
        sufficient=sufficient,
        inadequate_side=side,
    )


def acceptable_runs(ensemble: Iterable[EvaluationRecord],
                    filter: AcceptabilityFilter) -> list[EvaluationRecord]:
    """Records at or above the threshold, degenerate runs excluded."""
    return [r for r in ensemble if filter.accepts(r)]


# --- ensemble file round trip -------------------------------------------

def ensemble_header(space: ParameterSpace) -> tuple[str, ...]:
    return (("run_id",) + space.names
            + tuple(str(m) for m in MetricId)
            + ("f_intensity", "f_wetness", "f_slow", "flags"))


def write_ensemble_csv(path, records: Iterable[EvaluationRecord],
                       space: ParameterSpace,
                       comments: list[str] | None = None) -> None:
    """Stream records to CSV; works for arbitrarily large iterables."""
    with open(path, "w", newline="") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        fh.write(",".join(ensemble_header(space)) + "\n")
        for r in records:
            cells = [str(r.run_id)]
            cells += [repr(v) for v in r.params.values]
            for metric in MetricId:
                value = r.metric_values.get(metric)
                cells.append("" if value is None else repr(value))
            if r.fractions is None:
                cells += ["", "", ""]
            else:
                cells += [repr(v) for v in r.fractions.as_tuple()]
            cells.append(";".join(r.flags))
            fh.write(",".join(cells) + "\n")


def iter_ensemble_csv(path, space: ParameterSpace) -> Iterator[EvaluationRecord]:
    """Stream records back from a file written by write_ensemble_csv."""
    expected = ensemble_header(space)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}")
    with fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if header is None:
                header = tuple(cells)
                if header != expected:
                    raise DataError(
                        f"{path}: header does not match the parameter space"
                    )
                continue
            if len(cells) != len(expected):
                raise DataError(f"{path} line {lineno}: wrong field count")
            yield _record_from_cells(path, lineno, cells, space)
        if header is None:
            raise DataError(f"{path} has no header row")


def _record_from_cells(path, lineno, cells, space) -> EvaluationRecord:
    d = space.ndim
    try:
        run_id = int(cells[0])
        params = ParameterSet(values=tuple(float(c) for c in cells[1:1 + d]))
        values = {}
        for j, metric in enumerate(MetricId):
            cell = cells[1 + d + j]
            if cell:
                values[metric] = float(cell)
        frac_cells = cells[1 + d + len(MetricId):1 + d + len(MetricId) + 3]
        fractions = None
        if all(frac_cells):
            fractions = FluxFractions(*(float(c) for c in frac_cells))
        flags = tuple(f for f in cells[-1].split(";") if f)
        return EvaluationRecord(
            run_id=run_id, params=params, metric_values=values,
            fractions=fractions, flags=flags,
        )
    except ValueError as exc:
        raise DataError(f"{path} line {lineno}: {exc}")
