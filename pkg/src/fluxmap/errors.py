"""Exception hierarchy.

Three branches so the CLI can map failures to distinct exit codes:
configuration problems, bad input data, and runtime/numerical failures.
"""


class FluxmapError(Exception):
    """Base class for all package errors."""


class ConfigError(FluxmapError):
    """Invalid run configuration (bad key, missing file reference, bad value)."""


class DataError(FluxmapError):
    """Malformed or inconsistent input data (CSV layout, date gaps, signs)."""


class ComputationError(FluxmapError):
    """A numerical operation is undefined for the given inputs."""


class MetricUndefinedError(ComputationError):
    """An efficiency metric hit an undefined intermediate (zero mean/std)."""


class DegenerateRunError(ComputationError):
    """A model run produced no flow, so flux fractions are undefined."""
