"""One-factor-at-a-time corruption of an observed series.

Three error regimes, each degraded in 20 increments of 5% while the other
two first moments are held fixed:

  - bias: a constant offset of 0.05*k times the observed mean is added;
    std and correlation with the original stay at their original values.
  - variability: deviations from the mean are inflated by (1 + 0.05*k);
    mean and correlation stay fixed.
  - correlation: the standardized series is rotated towards a fixed
    orthogonal complement so that the correlation with the original is
    exactly 1 - 0.05*k while mean and std are preserved.

Step 0 is always the untouched original.  Correlation-corrupted series may
go negative; that is acceptable for this analysis and the container allows
it.  All constructions are deterministic: bias/variability need no seed,
and the correlation regime derives its orthogonal complement from a seeded
stream so the whole 21-step path reuses one complement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, DataError
from .metrics import MetricId, evaluate
from .rng import substream
from .series import Series, write_table_csv

__all__ = [
    "ErrorRegime",
    "CorruptionStep",
    "DegradationCurve",
    "N_STEPS",
    "STEP_FRACTION",
    "corrupt_bias",
    "corrupt_variability",
    "corrupt_correlation",
    "corrupt",
    "degradation_table",
    "residual_table",
    "write_degradation_csv",
    "write_residuals_csv",
]

N_STEPS = 20
STEP_FRACTION = 0.05
_MAX_REDRAWS = 16


class ErrorRegime(enum.Enum):
    """The three controlled error types."""

    BIAS = "bias"
    VARIABILITY = "variability"
    CORRELATION = "correlation"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CorruptionStep:
    """One corrupted series plus its residuals against the original."""

    regime: ErrorRegime
    k: int
    series: Series
    residuals: Series


@dataclass(frozen=True)
class DegradationCurve:
    """Metric values over steps 0..20 for one (metric, regime) pair."""

    metric: MetricId
    regime: ErrorRegime
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != N_STEPS + 1:
            raise ComputationError(
                f"degradation curve needs {N_STEPS + 1} values, got {len(self.values)}"
            )
        if self.values[0] != 1.0:
            raise ComputationError(
                f"uncorrupted series must score exactly 1, got {self.values[0]!r}"
            )


def _check_k(k: int) -> None:
    if not 0 <= k <= N_STEPS:
        raise DataError(f"corruption step must be in 0..{N_STEPS}, got {k}")


def _zero_step(o: Series, regime: ErrorRegime) -> CorruptionStep:
    return CorruptionStep(
        regime=regime, k=0, series=o, residuals=o.with_values(np.zeros(o.n))
    )


def corrupt_bias(o: Series, k: int) -> CorruptionStep:
    """Add a constant offset of 0.05*k times the observed mean."""
    _check_k(k)
    if k == 0:
        return _zero_step(o, ErrorRegime.BIAS)
    mean = float(o.values.mean())
    if mean == 0.0:
        raise ComputationError("bias corruption undefined: observed mean is zero")
    shift = STEP_FRACTION * k * mean
    residuals = np.full(o.n, shift)
    return CorruptionStep(
        regime=ErrorRegime.BIAS,
        k=k,
        series=o.with_values(o.values + shift),
        residuals=o.with_values(residuals),
    )


def corrupt_variability(o: Series, k: int) -> CorruptionStep:
    """Inflate deviations from the mean by (1 + 0.05*k).

    Written as original + 0.05*k*(value - mean) so the residuals are the
    exact inflation term and step 0 is bitwise identical to the input.
    """
    _check_k(k)
    if k == 0:
        return _zero_step(o, ErrorRegime.VARIABILITY)
    mean = float(o.values.mean())
    dev = o.values - mean
    if not np.any(dev):
        raise ComputationError("variability corruption undefined: constant series")
    residuals = STEP_FRACTION * k * dev
    return CorruptionStep(
        regime=ErrorRegime.VARIABILITY,
        k=k,
        series=o.with_values(o.values + residuals),
        residuals=o.with_values(residuals),
    )


def _orthogonal_complement(zhat: np.ndarray, seed: int) -> np.ndarray:
    """A zero-mean, unit-population-std vector orthogonal to `zhat`.

    Draws a uniform auxiliary vector from the seeded stream, projects out
    the constant direction and `zhat`, and rescales.  Numerically collinear
    draws (residual norm below 1e-8*n) are redrawn from an incremented
    sub-stream, up to 16 attempts.
    """
    n = zhat.size
    for attempt in range(_MAX_REDRAWS):
        u = substream(seed, attempt).uniform(size=n)
        w = u - u.mean()
        w = w - (float(w @ zhat) / float(zhat @ zhat)) * zhat
        w = w - w.mean()
        if float(np.sqrt(w @ w)) >= 1e-8 * n:
            return w / float(np.sqrt(np.mean(w * w)))
    raise ComputationError(
        f"could not build an orthogonal complement after {_MAX_REDRAWS} draws"
    )


def _correlation_basis(o: Series, seed: int) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Mean, std, standardized series, and its fixed orthogonal complement."""
    if o.n < 3:
        raise ComputationError("correlation corruption needs at least 3 points")
    mean = float(o.values.mean())
    dev = o.values - mean
    std = float(np.sqrt(np.mean(dev * dev)))
    if std == 0.0:
        raise ComputationError("correlation corruption undefined: constant series")
    zhat = dev / std
    return mean, std, zhat, _orthogonal_complement(zhat, seed)


def _correlation_step(o: Series, k: int,
                      basis: tuple[float, float, np.ndarray, np.ndarray]) -> CorruptionStep:
    if k == 0:
        return _zero_step(o, ErrorRegime.CORRELATION)
    mean, std, zhat, zperp = basis
    rho = 1.0 - STEP_FRACTION * k
    mixed = rho * zhat + np.sqrt(1.0 - rho * rho) * zperp
    series = o.with_values(mean + std * mixed)
    return CorruptionStep(
        regime=ErrorRegime.CORRELATION,
        k=k,
        series=series,
        residuals=o.with_values(series.values - o.values),
    )


def corrupt_correlation(o: Series, k: int, seed: int) -> CorruptionStep:
    """Rotate the series so its correlation with the original is 1 - 0.05*k.

    Mean and std are preserved.  Deterministic for a given (o, seed); the
    same seed yields the same orthogonal complement at every step, so the
    corruption path is continuous in k.
    """
    _check_k(k)
    if k == 0:
        return _zero_step(o, ErrorRegime.CORRELATION)
    return _correlation_step(o, k, _correlation_basis(o, seed))


def corrupt(o: Series, regime: ErrorRegime, k: int, seed: int) -> CorruptionStep:
    """Dispatch to the regime-specific constructor."""
    if regime is ErrorRegime.BIAS:
        return corrupt_bias(o, k)
    if regime is ErrorRegime.VARIABILITY:
        return corrupt_variability(o, k)
    return corrupt_correlation(o, k, seed)


def _all_steps(o: Series, seed: int) -> dict[ErrorRegime, list[CorruptionStep]]:
    steps: dict[ErrorRegime, list[CorruptionStep]] = {
        ErrorRegime.BIAS: [corrupt_bias(o, k) for k in range(N_STEPS + 1)],
        ErrorRegime.VARIABILITY: [corrupt_variability(o, k) for k in range(N_STEPS + 1)],
    }
    basis = _correlation_basis(o, seed)
    steps[ErrorRegime.CORRELATION] = [
        _correlation_step(o, k, basis) for k in range(N_STEPS + 1)
    ]
    return steps


def degradation_table(o: Series, seed: int) -> list[DegradationCurve]:
    """Score every corrupted series with every metric.

    Returns 9 curves ordered by (metric, regime) in declaration order, each
    holding 21 values for k = 0..20.  One orthogonal complement (from
    `seed`) is shared by all correlation steps.
    """
    steps = _all_steps(o, seed)
    curves = []
    for metric in MetricId:
        for regime in ErrorRegime:
            values = tuple(
                evaluate(metric, o, step.series) for step in steps[regime]
            )
            curves.append(DegradationCurve(metric=metric, regime=regime, values=values))
    return curves


def residual_table(o: Series, seed: int) -> dict[tuple[ErrorRegime, int], Series]:
    """Residual series (corrupted minus original) for every regime and step."""
    steps = _all_steps(o, seed)
    return {
        (regime, step.k): step.residuals
        for regime in ErrorRegime
        for step in steps[regime]
    }


def write_degradation_csv(path, curves: list[DegradationCurve],
                          comments: list[str]) -> None:
    """Long-format export: one row per (metric, regime, step)."""
    metric_col, regime_col, step_col, value_col = [], [], [], []
    for curve in curves:
        for k, value in enumerate(curve.values):
            metric_col.append(str(curve.metric))
            regime_col.append(str(curve.regime))
            step_col.append(k)
            value_col.append(value)
    write_table_csv(path, comments, {
        "metric": metric_col, "regime": regime_col,
        "step": step_col, "value": value_col,
    })


def write_residuals_csv(path, table: dict[tuple[ErrorRegime, int], Series],
                        o: Series, comments: list[str]) -> None:
    """Long-format export: one row per (regime, step, day index)."""
    regime_col, step_col, index_col, obs_col, residual_col = [], [], [], [], []
    for regime in ErrorRegime:
        for k in range(N_STEPS + 1):
            residuals = table[(regime, k)]
            for i in range(o.n):
                regime_col.append(str(regime))
                step_col.append(k)
                index_col.append(i)
                obs_col.append(float(o.values[i]))
                residual_col.append(float(residuals.values[i]))
    write_table_csv(path, comments, {
        "regime": regime_col, "step": step_col, "index": index_col,
        "obs": obs_col, "residual": residual_col,
    })
