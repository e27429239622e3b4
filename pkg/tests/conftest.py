"""Shared fixtures: the frozen test series and synthetic forcing."""

import datetime as dt

import numpy as np
import pytest

from fluxmap.models import ModelId, SimhydParams, simulate
from fluxmap.series import Forcing, Series

# Fixed 45-point positive series used by the metric-sensitivity tests.
# Construction (frozen once, asserted by test_corruption): 41 low values
# and 4 interleaved spikes with group sums pinned so that, relative to
# the mean, the mean absolute deviation is ~1.00 and the population
# standard deviation ~1.76.  Those two ratios give the bias-corruption
# ordering NSE > WIA > KGEss a wide margin at every step.
TEST_SERIES_45 = (
    0.5308, 0.3674, 0.4011, 0.5745, 0.644, 0.3419, 0.3194, 6.1769, 0.3555,
    0.4188, 0.3516, 0.4999, 0.5099, 0.3288, 0.4918, 0.2932, 0.4562, 0.6369,
    7.1888, 0.5745, 0.5028, 0.4067, 0.3646, 0.4482, 0.3899, 0.6012, 0.367,
    0.3886, 0.5773, 6.6951, 0.3865, 0.3864, 0.3166, 0.4569, 0.385, 0.6062,
    0.3929, 0.5654, 0.464, 0.4572, 6.4393, 0.6331, 0.6095, 0.3195, 0.3783,
)

# Seed for every correlation-corruption draw in the test suite.
CORRUPTION_SEED = 0

START = dt.date(2000, 1, 1)

# Parameter set used as the synthetic truth in perfect-model tests;
# strictly inside every default calibration range.
TRUTH_SIMHYD = dict(insc=1.5, coeff=150.0, sq=2.0, smsc=200.0,
                    sub=0.25, crak=0.35, k=0.06)


def make_series(values, start=START) -> Series:
    return Series(start, np.asarray(values, dtype=float))


def make_forcing(n: int, seed: int, start=START) -> Forcing:
    """Intermittent gamma rainfall and a smooth seasonal PET cycle."""
    rng = np.random.default_rng(seed)
    wet = rng.random(n) < 0.35
    precip = np.where(wet, rng.gamma(2.0, 4.0, n), 0.0)
    pet = 3.0 + 2.0 * np.sin(np.arange(n) * 2.0 * np.pi / 365.25)
    return Forcing(Series(start, precip), Series(start, np.maximum(pet, 0.1)))


@pytest.fixture
def series45() -> Series:
    return make_series(TEST_SERIES_45)


@pytest.fixture(scope="session")
def forcing_2y() -> Forcing:
    return make_forcing(2 * 365, seed=101)


@pytest.fixture(scope="session")
def forcing_10y() -> Forcing:
    return make_forcing(10 * 365, seed=202)


@pytest.fixture(scope="session")
def truth_params() -> SimhydParams:
    return SimhydParams(**TRUTH_SIMHYD)


@pytest.fixture(scope="session")
def perfect_obs_10y(forcing_10y, truth_params) -> Series:
    """Observed flow synthesized by the truth parameter set."""
    out = simulate(ModelId.SIMHYD, truth_params, forcing_10y, warmup_days=365)
    return out.flow
