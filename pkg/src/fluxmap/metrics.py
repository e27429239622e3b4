"""Efficiency metrics: NSE, KGE skill score, and refined index of agreement.

All three score the distance between an observed and a simulated daily
series; a perfect match scores 1 and values fall as the series diverge.
The KGE variant here uses the coefficient of variation in its variability
term, and is rescaled to a skill score benchmarked against the observed
mean: the reference KGE of that benchmark is 1 - sqrt(2), hard-coded in
the skill-score formula because evaluating KGE on a constant series would
hit an undefined correlation.

Undefined intermediates (zero mean, zero std) raise MetricUndefinedError;
they are never folded into a NaN result.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, MetricUndefinedError
from .series import Series

__all__ = [
    "MetricId",
    "KgeComponents",
    "KGE_MEAN_BENCHMARK",
    "nse",
    "kge_components",
    "kgess",
    "wia",
    "evaluate",
]

# KGE of the constant mean-of-observed benchmark: bias and correlation
# terms contribute 0 and 1 in the limit, the cv term 1, so 1 - sqrt(2).
KGE_MEAN_BENCHMARK = 1.0 - math.sqrt(2.0)


class MetricId(enum.Enum):
    """The three supported efficiency metrics."""

    NSE = "nse"
    KGESS = "kgess"
    WIA = "wia"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "MetricId":
        try:
            return cls(text.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise DataError(f"unknown metric {text!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class KgeComponents:
    """The three squared error terms of KGE plus the derived scores."""

    bias_term: float
    variability_term: float
    correlation_term: float
    kge: float
    kge_ss: float


def _check_lengths(obs: Series, sim: Series) -> None:
    if obs.n != sim.n:
        raise DataError(f"length mismatch: obs {obs.n} vs sim {sim.n}")


def nse(obs: Series, sim: Series) -> float:
    """Nash-Sutcliffe efficiency: 1 - SSE / variance-about-the-observed-mean."""
    _check_lengths(obs, sim)
    o, m = obs.values, sim.values
    denom = float(np.sum((o - o.mean()) ** 2))
    if denom == 0.0:
        raise MetricUndefinedError("NSE undefined: observed series is constant")
    return 1.0 - float(np.sum((m - o) ** 2)) / denom


def kge_components(obs: Series, sim: Series) -> KgeComponents:
    """KGE decomposition into bias, variability (cv based), and correlation terms."""
    _check_lengths(obs, sim)
    o, m = obs.values, sim.values
    o_mean = float(o.mean())
    m_mean = float(m.mean())
    if o_mean == 0.0:
        raise MetricUndefinedError("KGE undefined: observed mean is zero")
    if m_mean == 0.0:
        raise MetricUndefinedError("KGE undefined: simulated mean is zero (cv undefined)")
    do = o - o_mean
    dm = m - m_mean
    o_var = float(np.mean(do * do))
    m_var = float(np.mean(dm * dm))
    if o_var == 0.0 or m_var == 0.0:
        raise MetricUndefinedError("KGE undefined: constant series (zero std)")
    o_cv = math.sqrt(o_var) / o_mean
    m_cv = math.sqrt(m_var) / m_mean
    if np.array_equal(o, m):
        # identical inputs must score exactly 1; do not trust the
        # sqrt round-trip below to be bit-exact
        cc = 1.0
    else:
        cc = float(np.mean(do * dm)) / math.sqrt(o_var * m_var)
        cc = min(1.0, max(-1.0, cc))

    bias_term = (1.0 - m_mean / o_mean) ** 2
    variability_term = (1.0 - m_cv / o_cv) ** 2
    correlation_term = (1.0 - cc) ** 2
    kge = 1.0 - math.sqrt(bias_term + variability_term + correlation_term)
    kge_ss = 1.0 - (1.0 - kge) / math.sqrt(2.0)
    return KgeComponents(
        bias_term=bias_term,
        variability_term=variability_term,
        correlation_term=correlation_term,
        kge=kge,
        kge_ss=kge_ss,
    )


def kgess(obs: Series, sim: Series) -> float:
    """KGE skill score (shorthand for kge_components(...).kge_ss)."""
    return kge_components(obs, sim).kge_ss


def wia(obs: Series, sim: Series) -> float:
    """Refined index of agreement, bounded in [-1, 1].

    With A the summed absolute error and D twice the summed absolute
    deviation from the observed mean: 1 - A/D when A <= D, else D/A - 1.
    Both branches meet at 0 when A == D; the equality case is routed to
    the first branch.
    """
    _check_lengths(obs, sim)
    o, m = obs.values, sim.values
    a = float(np.sum(np.abs(m - o)))
    d = 2.0 * float(np.sum(np.abs(o - o.mean())))
    if d == 0.0:
        raise MetricUndefinedError("WIA undefined: observed series is constant")
    if a <= d:
        return 1.0 - a / d
    return d / a - 1.0


def evaluate(metric: MetricId, obs: Series, sim: Series) -> float:
    """Uniform dispatch used by the ensemble machinery."""
    if metric is MetricId.NSE:
        return nse(obs, sim)
    if metric is MetricId.KGESS:
        return kge_components(obs, sim).kge_ss
    if metric is MetricId.WIA:
        return wia(obs, sim)
    raise DataError(f"unknown metric {metric!r}")
