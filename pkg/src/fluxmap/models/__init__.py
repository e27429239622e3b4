"""Daily conceptual rainfall-runoff models with per-mode flux accounting."""

from .core import (
    DEFAULT_RANGES,
    DEFAULT_WARMUP_DAYS,
    FLUX_AET,
    FLUX_DEEP,
    FLUX_INTENSITY,
    FLUX_SLOW,
    FLUX_WETNESS,
    DailyFluxes,
    FluxFractions,
    ModelId,
    SimulationOutput,
    flow_from_table,
    fractions_from_table,
    mode_arrays,
    param_names,
    params_from_mapping,
    run_fluxes,
    simulate,
)
from .sacramento import Params as SacramentoParams
from .sacramento import State as SacramentoState
from .simhyd import Params as SimhydParams
from .simhyd import State as SimhydState

__all__ = [
    "ModelId",
    "DailyFluxes",
    "FluxFractions",
    "SimulationOutput",
    "SimhydParams",
    "SimhydState",
    "SacramentoParams",
    "SacramentoState",
    "DEFAULT_RANGES",
    "DEFAULT_WARMUP_DAYS",
    "FLUX_INTENSITY",
    "FLUX_WETNESS",
    "FLUX_SLOW",
    "FLUX_AET",
    "FLUX_DEEP",
    "param_names",
    "params_from_mapping",
    "simulate",
    "run_fluxes",
    "mode_arrays",
    "flow_from_table",
    "fractions_from_table",
]
