"""Seven-parameter daily conceptual model with three stores.

Structure: an interception store evaporates at the demand rate; water
that spills past it either exceeds an exponentially declining
infiltration capacity (and runs off immediately) or infiltrates, where
it is split into interflow, groundwater recharge, and soil moisture in
proportion to soil wetness.  The soil store evaporates, overflows to
groundwater at capacity, and the groundwater store drains as a linear
reservoir.

Mode assignment: infiltration excess is the intensity flux, interflow
plus saturation excess the wetness flux, baseflow the slow flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DataError
from .core import FLUX_AET, FLUX_INTENSITY, FLUX_SLOW, FLUX_WETNESS, DailyFluxes

__all__ = ["PARAM_NAMES", "STATE_NAMES", "Params", "State", "step"]

PARAM_NAMES = ("insc", "coeff", "sq", "smsc", "sub", "crak", "k")
STATE_NAMES = ("interception", "soil_moisture", "groundwater")

# Soil evaporation ceiling at saturation, mm/day.
SOIL_ET_SCALE = 10.0


@dataclass(frozen=True)
class Params:
    """Calibration parameters.

    insc : interception store capacity (mm)
    coeff : maximum infiltration loss (mm)
    sq : infiltration loss exponent
    smsc : soil moisture store capacity (mm)
    sub : interflow proportionality constant
    crak : recharge proportionality constant
    k : baseflow recession coefficient (1/day)
    """

    insc: float
    coeff: float
    sq: float
    smsc: float
    sub: float
    crak: float
    k: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            if not math.isfinite(getattr(self, name)) or getattr(self, name) < 0.0:
                raise DataError(f"simhyd {name} must be finite and >= 0")
        for name in ("sub", "crak", "k"):
            if getattr(self, name) > 1.0:
                raise DataError(f"simhyd {name} must be <= 1")
        if self.insc <= 0.0 or self.smsc <= 0.0:
            raise DataError("simhyd store capacities must be > 0")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    @classmethod
    def from_array(cls, theta: np.ndarray) -> "Params":
        if len(theta) != len(PARAM_NAMES):
            raise DataError(f"simhyd needs {len(PARAM_NAMES)} parameters")
        return cls(**{n: float(v) for n, v in zip(PARAM_NAMES, theta)})


@dataclass(frozen=True)
class State:
    """Store levels in mm: interception, soil moisture, groundwater."""

    interception: float = 0.0
    soil_moisture: float = 0.0
    groundwater: float = 0.0

    def __post_init__(self):
        for name in STATE_NAMES:
            if not math.isfinite(getattr(self, name)) or getattr(self, name) < 0.0:
                raise DataError(f"simhyd state {name} must be finite and >= 0")

    def to_array(self) -> np.ndarray:
        return np.array([self.interception, self.soil_moisture, self.groundwater])


def coerce_state(init, params: Params) -> State:
    if init is None:
        state = State()
    elif isinstance(init, State):
        state = init
    elif isinstance(init, dict):
        unknown = sorted(set(init) - set(STATE_NAMES))
        if unknown:
            raise DataError(f"unknown simhyd state name(s): {', '.join(unknown)}")
        state = State(**{k: float(v) for k, v in init.items()})
    else:
        raise DataError(f"cannot interpret {type(init).__name__} as a simhyd state")
    if state.interception > params.insc:
        raise DataError("initial interception exceeds capacity insc")
    if state.soil_moisture > params.smsc:
        raise DataError("initial soil moisture exceeds capacity smsc")
    return state


def storage(params: Params, state_vec: np.ndarray) -> float:
    """Total stored water in mm for the mass balance."""
    return float(state_vec[0] + state_vec[1] + state_vec[2])


@njit(cache=True, nogil=True)
def _kernel(precip, pet, theta, state, want_trace, fluxes, trace):
    insc, coeff, sq, smsc, sub, crak, k = (
        theta[0], theta[1], theta[2], theta[3], theta[4], theta[5], theta[6],
    )
    ic, sms, gw = state[0], state[1], state[2]
    for t in range(precip.shape[0]):
        p = precip[t]
        ep = pet[t]

        # interception: fill, spill the excess, evaporate at demand rate
        room = insc - ic
        if p > room:
            inr = p - room
            ic = insc
        else:
            inr = 0.0
            ic = ic + p
        ei = ep if ep < ic else ic
        ic = ic - ei
        pot = ep - ei

        # infiltration split by soil wetness
        phi = sms / smsc
        cap = coeff * math.exp(-sq * phi)
        rmo = cap if cap < inr else inr
        irun = inr - rmo
        srun = sub * phi * rmo
        rec = crak * phi * (rmo - srun)
        smf = rmo - srun - rec

        # soil evaporation, capped by wetness, demand, and availability
        et = SOIL_ET_SCALE * phi
        if et > pot:
            et = pot
        avail = sms + smf
        if et > avail:
            et = avail
        sms = avail - et
        if sms > smsc:
            rec = rec + (sms - smsc)
            sms = smsc

        # linear groundwater reservoir
        gw = gw + rec
        bas = k * gw
        gw = gw - bas

        fluxes[t, 0] = irun
        fluxes[t, 1] = srun
        fluxes[t, 2] = bas
        fluxes[t, 3] = ei + et
        fluxes[t, 4] = 0.0
        if want_trace:
            trace[t, 0] = ic
            trace[t, 1] = sms
            trace[t, 2] = gw
    return ic, sms, gw


def run_arrays(precip: np.ndarray, pet: np.ndarray, theta: np.ndarray,
               init_vec: np.ndarray, want_trace: bool):
    """Run the kernel over full arrays; shared by simulate and step."""
    n = precip.shape[0]
    fluxes = np.empty((n, 5))
    trace = np.empty((n, 3)) if want_trace else np.empty((0, 3))
    final = _kernel(precip, pet, theta, init_vec, want_trace, fluxes, trace)
    return fluxes, np.array(final), (trace if want_trace else None)


def step(state: State, params: Params, p: float, pet: float) -> tuple[State, DailyFluxes]:
    """Advance one day. Pure: returns the new state and the day's fluxes."""
    if p < 0.0 or pet < 0.0:
        raise DataError("precipitation and demand must be >= 0")
    coerce_state(state, params)
    fluxes, final, _ = run_arrays(
        np.array([p]), np.array([pet]), params.to_array(), state.to_array(), False
    )
    new_state = State(
        interception=float(final[0]),
        soil_moisture=float(final[1]),
        groundwater=float(final[2]),
    )
    day = DailyFluxes.of(
        intensity=float(fluxes[0, FLUX_INTENSITY]),
        wetness=float(fluxes[0, FLUX_WETNESS]),
        slow=float(fluxes[0, FLUX_SLOW]),
        aet=float(fluxes[0, FLUX_AET]),
    )
    return new_state, day
