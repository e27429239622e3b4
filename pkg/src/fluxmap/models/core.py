"""Shared model types: identifiers, per-day fluxes, run output, ranges.

Every daily flux is assigned to one of three response modes so that
competing model structures can be compared on where their water comes
from rather than only on how well they fit:

  - intensity: runoff generated because rain arrives faster than it can
    infiltrate (plus impervious-area runoff),
  - wetness: runoff controlled by how full the soil is (interflow,
    saturation excess, direct runoff from saturated fringes),
  - slow: baseflow released from groundwater or lower-zone storage.

Flux fractions are the volumetric share of each mode over the scoring
window.  A run with zero total flow has no defined fractions and is
flagged degenerate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import ComputationError, DataError
from ..series import Forcing, Series

__all__ = [
    "ModelId",
    "DailyFluxes",
    "FluxFractions",
    "SimulationOutput",
    "DEFAULT_RANGES",
    "DEFAULT_WARMUP_DAYS",
    "param_names",
    "params_from_mapping",
    "simulate",
    "run_fluxes",
]

DEFAULT_WARMUP_DAYS = 365

# Feasible calibration ranges.  These are defaults for sampling and the
# CLI; they can be overridden through configuration and are deliberately
# not enforced by the parameter containers themselves.
DEFAULT_RANGES: dict[str, dict[str, tuple[float, float]]] = {
    "simhyd": {
        "insc": (0.5, 5.0),
        "coeff": (50.0, 400.0),
        "sq": (0.0, 6.0),
        "smsc": (50.0, 500.0),
        "sub": (0.0, 1.0),
        "crak": (0.0, 1.0),
        "k": (0.003, 0.3),
    },
    "sacramento": {
        "uztwm": (10.0, 150.0),
        "uzfwm": (10.0, 150.0),
        "lztwm": (50.0, 400.0),
        "lzfsm": (10.0, 300.0),
        "lzfpm": (20.0, 600.0),
        "uzk": (0.1, 0.75),
        "lzsk": (0.02, 0.3),
        "lzpk": (0.001, 0.05),
        "zperc": (1.0, 250.0),
        "rexp": (1.0, 5.0),
        "pfree": (0.0, 0.6),
        "pctim": (0.0, 0.1),
        "adimp": (0.0, 0.3),
        "side": (0.0, 0.5),
        "rserv": (0.0, 0.4),
    },
}


class ModelId(enum.Enum):
    """Closed set of available model structures."""

    SIMHYD = "simhyd"
    SACRAMENTO = "sacramento"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "ModelId":
        try:
            return cls(text.strip().lower())
        except ValueError:
            options = ", ".join(m.value for m in cls)
            raise DataError(f"unknown model {text!r}; expected one of: {options}")


@dataclass(frozen=True)
class DailyFluxes:
    """One day of mode-aggregated fluxes, all in mm/day."""

    intensity: float
    wetness: float
    slow: float
    total: float
    aet: float

    def __post_init__(self):
        for name in ("intensity", "wetness", "slow", "total", "aet"):
            if getattr(self, name) < 0.0:
                raise ComputationError(f"negative {name} flux: {getattr(self, name)!r}")
        parts = self.intensity + self.wetness + self.slow
        if abs(self.total - parts) > 1e-12 * max(1.0, abs(self.total)):
            raise ComputationError(
                f"total {self.total!r} does not match flux sum {parts!r}"
            )

    @classmethod
    def of(cls, intensity: float, wetness: float, slow: float, aet: float) -> "DailyFluxes":
        return cls(
            intensity=intensity,
            wetness=wetness,
            slow=slow,
            total=intensity + wetness + slow,
            aet=aet,
        )


@dataclass(frozen=True)
class FluxFractions:
    """Volumetric share of each response mode; fractions sum to 1."""

    f_intensity: float
    f_wetness: float
    f_slow: float

    def __post_init__(self):
        for name in ("f_intensity", "f_wetness", "f_slow"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ComputationError(f"{name} outside [0, 1]: {value!r}")
        total = self.f_intensity + self.f_wetness + self.f_slow
        if abs(total - 1.0) > 1e-9:
            raise ComputationError(f"flux fractions sum to {total!r}, not 1")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.f_intensity, self.f_wetness, self.f_slow)


# Columns of the internal flux table produced by the model kernels.
FLUX_INTENSITY, FLUX_WETNESS, FLUX_SLOW, FLUX_AET, FLUX_DEEP = range(5)


class SimulationOutput:
    """Result of stepping one model over one forcing record.

    Flow, the flux table, and the fractions cover the scoring window
    (after warm-up); the mass balance totals cover the full run so that
    input volume can be reconciled exactly:

        precip_total == aet_total + flow_total + deep_loss_total
                        + storage_change        (within rounding)

    `fractions` is None for degenerate runs (zero flow volume).
    """

    def __init__(self, model: ModelId, flow: Series, flux_table: np.ndarray,
                 fractions: FluxFractions | None, warmup_days: int,
                 precip_total: float, aet_total: float, flow_total: float,
                 deep_loss_total: float, storage_change: float,
                 state_trace: np.ndarray | None = None):
        self.model = model
        self.flow = flow
        self.flux_table = flux_table
        self.fractions = fractions
        self.warmup_days = warmup_days
        self.precip_total = precip_total
        self.aet_total = aet_total
        self.flow_total = flow_total
        self.deep_loss_total = deep_loss_total
        self.storage_change = storage_change
        self.state_trace = state_trace

    @property
    def degenerate(self) -> bool:
        return self.fractions is None

    @property
    def fluxes(self) -> list[DailyFluxes]:
        """Per-day fluxes over the scoring window, built on demand."""
        table = self.flux_table
        return [
            DailyFluxes.of(
                intensity=float(table[i, FLUX_INTENSITY]),
                wetness=float(table[i, FLUX_WETNESS]),
                slow=float(table[i, FLUX_SLOW]),
                aet=float(table[i, FLUX_AET]),
            )
            for i in range(table.shape[0])
        ]

    @property
    def mass_balance_error(self) -> float:
        outgo = (self.aet_total + self.flow_total + self.deep_loss_total
                 + self.storage_change)
        return self.precip_total - outgo


def _module_for(model: ModelId):
    from . import sacramento, simhyd

    return simhyd if model is ModelId.SIMHYD else sacramento


def param_names(model: ModelId) -> tuple[str, ...]:
    """Calibration parameter names in canonical order."""
    return _module_for(model).PARAM_NAMES


def params_from_mapping(model: ModelId, values: dict[str, float]):
    """Build a parameter container from a name/value mapping."""
    names = param_names(model)
    unknown = sorted(set(values) - set(names))
    if unknown:
        raise DataError(f"unknown {model} parameter(s): {', '.join(unknown)}")
    missing = sorted(set(names) - set(values))
    if missing:
        raise DataError(f"missing {model} parameter(s): {', '.join(missing)}")
    return _module_for(model).Params(**{n: float(values[n]) for n in names})


def mode_arrays(flux_table: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (flux_table[:, FLUX_INTENSITY], flux_table[:, FLUX_WETNESS],
            flux_table[:, FLUX_SLOW])


def flow_from_table(flux_table: np.ndarray) -> np.ndarray:
    i, w, s = mode_arrays(flux_table)
    return i + w + s


def fractions_from_table(flux_table: np.ndarray) -> FluxFractions | None:
    """Volumetric fractions over the given window, or None if no flow."""
    i, w, s = mode_arrays(flux_table)
    vi, vw, vs = float(i.sum()), float(w.sum()), float(s.sum())
    volume = vi + vw + vs
    if volume <= 0.0:
        return None
    return FluxFractions(
        f_intensity=vi / volume, f_wetness=vw / volume, f_slow=vs / volume
    )


def run_fluxes(model: ModelId, theta: np.ndarray, precip: np.ndarray,
               pet: np.ndarray, init: np.ndarray | None = None) -> np.ndarray:
    """Lean evaluation path: full-run flux table for one parameter vector.

    Used by the ensemble and search machinery where building the full
    SimulationOutput for every candidate would be wasteful.  Produces
    bitwise the same numbers as `simulate` for the same inputs.
    """
    mod = _module_for(model)
    if init is None:
        init = np.zeros(len(mod.STATE_NAMES))
    table, _final, _trace = mod.run_arrays(precip, pet, theta, init, False)
    return table


def simulate(model: ModelId, params, forcing: Forcing,
             warmup_days: int = DEFAULT_WARMUP_DAYS, init=None,
             want_trace: bool = False) -> SimulationOutput:
    """Step `model` over `forcing` and aggregate the scoring window.

    Parameters
    ----------
    params : SimhydParams or SacramentoParams matching `model`.
    warmup_days : leading days excluded from flow, fluxes, and fractions;
        must leave at least 2 scoring days.
    init : initial state container, name/value mapping, or None for all
        stores empty.
    want_trace : attach the full-run end-of-day store levels.
    """
    mod = _module_for(model)
    if not isinstance(params, mod.Params):
        raise DataError(
            f"expected {mod.Params.__name__} for {model}, got {type(params).__name__}"
        )
    if warmup_days < 0:
        raise DataError(f"warmup_days must be >= 0, got {warmup_days}")
    n = forcing.precip.n
    if n - warmup_days < 2:
        raise DataError(
            f"forcing has {n} days; warm-up of {warmup_days} leaves "
            "fewer than 2 scoring days"
        )
    state = mod.coerce_state(init, params)

    theta = params.to_array()
    init_vec = state.to_array()
    table, final_vec, trace = mod.run_arrays(
        forcing.precip.values, forcing.pet.values, theta, init_vec, want_trace
    )

    scored = table[warmup_days:]
    flow_values = flow_from_table(scored)
    flow = Series(
        start_date=forcing.precip.date_at(warmup_days), values=flow_values
    )
    storage0 = mod.storage(params, init_vec)
    storage1 = mod.storage(params, final_vec)
    return SimulationOutput(
        model=model,
        flow=flow,
        flux_table=scored,
        fractions=fractions_from_table(scored),
        warmup_days=warmup_days,
        precip_total=float(forcing.precip.values.sum()),
        aet_total=float(table[:, FLUX_AET].sum()),
        flow_total=float(flow_from_table(table).sum()),
        deep_loss_total=float(table[:, FLUX_DEEP].sum()),
        storage_change=storage1 - storage0,
        state_trace=trace if want_trace else None,
    )
