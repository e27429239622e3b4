"""Ensemble evaluation of conceptual rainfall-runoff models.

The package treats competing model structures and parameter sets as
multiple working hypotheses.  It provides:

  - daily models (`fluxmap.models`) whose simulated flow is decomposed
    into intensity-driven, wetness-driven, and slow response modes,
  - goodness-of-fit metrics and a corruption harness that measures how
    each metric reacts to bias, variability, and correlation errors,
  - Latin hypercube sampling and a shuffled-complex search over
    parameter space, with a sufficiency check between the two,
  - acceptability filtering and ternary flux-map coordinates for
    visualizing where acceptable runs send their water.

All randomness derives from one master seed through named substreams,
so every result is reproducible bit for bit, including under threading.
"""

from .errors import (
    ComputationError,
    ConfigError,
    DataError,
    DegenerateRunError,
    FluxmapError,
    MetricUndefinedError,
)
from .metrics import MetricId, evaluate, kge_components, kgess, nse, wia
from .models import ModelId, SimulationOutput, simulate
from .series import Forcing, Series, load_forcing, load_series

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FluxmapError",
    "ConfigError",
    "DataError",
    "ComputationError",
    "MetricUndefinedError",
    "DegenerateRunError",
    "MetricId",
    "ModelId",
    "Series",
    "Forcing",
    "SimulationOutput",
    "nse",
    "kgess",
    "kge_components",
    "wia",
    "evaluate",
    "simulate",
    "load_series",
    "load_forcing",
]
