"""Fifteen-parameter daily soil moisture accounting model.

Structure: two upper-zone stores (tension, free) and three lower-zone
stores (tension, supplemental free, primary free) on the pervious area,
a separately tracked store for the additional impervious area, and a
permanently impervious fraction that converts rain to runoff directly.
Evaporation cascades through the zones; percolation from the upper free
store is driven by lower-zone deficiency; free lower-zone stores drain
as linear reservoirs, with a share of baseflow lost to deep recharge.

Five runoff components are produced each day and aggregated into modes:
impervious runoff and surface runoff are the intensity flux, direct
runoff from the additional impervious area plus interflow the wetness
flux, and net baseflow the slow flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DataError
from .core import FLUX_AET, FLUX_INTENSITY, FLUX_SLOW, FLUX_WETNESS, DailyFluxes

__all__ = ["PARAM_NAMES", "STATE_NAMES", "Params", "State", "step"]

PARAM_NAMES = (
    "uztwm", "uzfwm", "lztwm", "lzfsm", "lzfpm",
    "uzk", "lzsk", "lzpk",
    "zperc", "rexp", "pfree", "pctim", "adimp", "side", "rserv",
)
STATE_NAMES = ("uztwc", "uzfwc", "lztwc", "lzfsc", "lzfpc", "adimc")

_CAPACITIES = ("uztwm", "uzfwm", "lztwm", "lzfsm", "lzfpm")
_COEFFICIENTS = ("uzk", "lzsk", "lzpk")
_FRACTIONS = ("pfree", "pctim", "adimp", "side", "rserv")


@dataclass(frozen=True)
class Params:
    """Calibration parameters.

    uztwm, uzfwm : upper-zone tension / free capacities (mm)
    lztwm, lzfsm, lzfpm : lower-zone tension / supplemental / primary
        capacities (mm)
    uzk, lzsk, lzpk : free-water depletion coefficients (1/day)
    zperc : maximum percolation demand multiplier
    rexp : percolation demand exponent
    pfree : fraction of percolation routed to free water
    pctim : permanently impervious area fraction
    adimp : additional impervious area fraction
    side : deep-loss ratio applied to baseflow
    rserv : free-water fraction unavailable for tension resupply
    """

    uztwm: float
    uzfwm: float
    lztwm: float
    lzfsm: float
    lzfpm: float
    uzk: float
    lzsk: float
    lzpk: float
    zperc: float
    rexp: float
    pfree: float
    pctim: float
    adimp: float
    side: float
    rserv: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            if not math.isfinite(getattr(self, name)) or getattr(self, name) < 0.0:
                raise DataError(f"sacramento {name} must be finite and >= 0")
        for name in _CAPACITIES:
            if getattr(self, name) <= 0.0:
                raise DataError(f"sacramento capacity {name} must be > 0")
        for name in _COEFFICIENTS:
            if not 0.0 < getattr(self, name) <= 1.0:
                raise DataError(f"sacramento coefficient {name} must be in (0, 1]")
        for name in _FRACTIONS:
            if getattr(self, name) > 1.0:
                raise DataError(f"sacramento fraction {name} must be <= 1")
        if self.pctim + self.adimp > 1.0:
            raise DataError("sacramento pctim + adimp must be <= 1")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    @classmethod
    def from_array(cls, theta: np.ndarray) -> "Params":
        if len(theta) != len(PARAM_NAMES):
            raise DataError(f"sacramento needs {len(PARAM_NAMES)} parameters")
        return cls(**{n: float(v) for n, v in zip(PARAM_NAMES, theta)})


@dataclass(frozen=True)
class State:
    """Store contents in mm.

    uztwc, uzfwc : upper-zone tension / free contents
    lztwc, lzfsc, lzfpc : lower-zone tension / supplemental / primary
    adimc : additional impervious area content
    """

    uztwc: float = 0.0
    uzfwc: float = 0.0
    lztwc: float = 0.0
    lzfsc: float = 0.0
    lzfpc: float = 0.0
    adimc: float = 0.0

    def __post_init__(self):
        for name in STATE_NAMES:
            if not math.isfinite(getattr(self, name)) or getattr(self, name) < 0.0:
                raise DataError(f"sacramento state {name} must be finite and >= 0")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in STATE_NAMES])


def coerce_state(init, params: Params) -> State:
    if init is None:
        state = State()
    elif isinstance(init, State):
        state = init
    elif isinstance(init, dict):
        unknown = sorted(set(init) - set(STATE_NAMES))
        if unknown:
            raise DataError(f"unknown sacramento state name(s): {', '.join(unknown)}")
        state = State(**{k: float(v) for k, v in init.items()})
    else:
        raise DataError(f"cannot interpret {type(init).__name__} as a sacramento state")
    caps = {
        "uztwc": params.uztwm, "uzfwc": params.uzfwm, "lztwc": params.lztwm,
        "lzfsc": params.lzfsm, "lzfpc": params.lzfpm,
        "adimc": params.uztwm + params.lztwm,
    }
    for name, cap in caps.items():
        if getattr(state, name) > cap:
            raise DataError(f"initial {name} exceeds its capacity {cap}")
    return state


def storage(params: Params, state_vec: np.ndarray) -> float:
    """Area-weighted stored water in mm for the mass balance."""
    parea = 1.0 - params.pctim - params.adimp
    pervious = float(state_vec[0] + state_vec[1] + state_vec[2]
                     + state_vec[3] + state_vec[4])
    return parea * pervious + params.adimp * float(state_vec[5])


@njit(cache=True, nogil=True)
def _kernel(precip, pet, theta, state, want_trace, fluxes, trace):
    uztwm, uzfwm, lztwm, lzfsm, lzfpm = theta[0], theta[1], theta[2], theta[3], theta[4]
    uzk, lzsk, lzpk = theta[5], theta[6], theta[7]
    zperc, rexp, pfree, pctim, adimp, side, rserv = (
        theta[8], theta[9], theta[10], theta[11], theta[12], theta[13], theta[14],
    )
    uztwc, uzfwc, lztwc, lzfsc, lzfpc, adimc = (
        state[0], state[1], state[2], state[3], state[4], state[5],
    )
    parea = 1.0 - pctim - adimp
    pbase = lzfpm * lzpk + lzfsm * lzsk
    lzmax = lztwm + lzfsm + lzfpm
    saved = rserv * (lzfpm + lzfsm)
    adcap = uztwm + lztwm

    for t in range(precip.shape[0]):
        p = precip[t]
        ep = pet[t]

        # evaporation cascade: upper tension, upper free, lower tension,
        # then the additional impervious store
        e1 = ep * (uztwc / uztwm)
        if e1 > uztwc:
            e1 = uztwc
        uztwc = uztwc - e1
        red = ep - e1
        e2 = red if red < uzfwc else uzfwc
        uzfwc = uzfwc - e2
        red = red - e2

        # move upper free water into tension when tension is drier
        if uztwc / uztwm < uzfwc / uzfwm:
            total_uz = uztwc + uzfwc
            uztwc = total_uz * (uztwm / (uztwm + uzfwm))
            uzfwc = total_uz - uztwc

        e3 = red * (lztwc / (uztwm + lztwm))
        if e3 > lztwc:
            e3 = lztwc
        lztwc = lztwc - e3

        # resupply lower tension from free water above the reserve
        ratlzt = lztwc / lztwm
        ratlz = (lztwc + lzfpc + lzfsc - saved) / (lzmax - saved)
        if ratlzt < ratlz:
            moved = (ratlz - ratlzt) * lztwm
            lztwc = lztwc + moved
            lzfsc = lzfsc - moved
            if lzfsc < 0.0:
                lzfpc = lzfpc + lzfsc
                lzfsc = 0.0
                if lzfpc < 0.0:
                    lzfpc = 0.0
            if lztwc > lztwm:
                lztwc = lztwm

        e5 = ep * (adimc / adcap)
        if e5 > adimc:
            e5 = adimc
        adimc = adimc - e5

        # rain: impervious runoff, then upper tension fill
        roimp = p * pctim
        twx = p + uztwc - uztwm
        if twx < 0.0:
            twx = 0.0
            uztwc = uztwc + p
        else:
            uztwc = uztwm
        adimc = adimc + (p - twx)
        if adimc < 0.0:
            # rounding in twx can overshoot p by a few ulps
            adimc = 0.0

        # baseflow from the free lower-zone reservoirs
        bfp = lzfpc * lzpk
        lzfpc = lzfpc - bfp
        bfs = lzfsc * lzsk
        lzfsc = lzfsc - bfs
        sbf = bfp + bfs

        # percolation driven by lower-zone deficiency
        lz_def = (lztwm - lztwc) + (lzfsm - lzfsc) + (lzfpm - lzfpc)
        if lz_def < 0.0:
            lz_def = 0.0
        defr = lz_def / lzmax
        perc = pbase * (1.0 + zperc * defr ** rexp) * (uzfwc / uzfwm)
        if perc > uzfwc:
            perc = uzfwc
        if perc > lz_def:
            perc = lz_def
        uzfwc = uzfwc - perc

        # split percolation: tension first, free share cascades through
        # primary then supplemental, any leftover returns to tension
        percf = perc * pfree
        lztwc = lztwc + (perc - percf)
        if lztwc > lztwm:
            percf = percf + (lztwc - lztwm)
            lztwc = lztwm
        room_p = lzfpm - lzfpc
        take = percf if percf < room_p else room_p
        lzfpc = lzfpc + take
        rest = percf - take
        if rest > 0.0:
            room_s = lzfsm - lzfsc
            take = rest if rest < room_s else room_s
            lzfsc = lzfsc + take
            rest = rest - take
            if rest > 0.0:
                lztwc = lztwc + rest
                if lztwc > lztwm:
                    lztwc = lztwm

        # interflow, then surface runoff from upper free overflow
        sif = uzk * uzfwc
        uzfwc = uzfwc - sif
        uzfwc = uzfwc + twx
        sur = 0.0
        if uzfwc > uzfwm:
            sur = uzfwc - uzfwm
            uzfwc = uzfwm

        # direct runoff from the additional impervious area
        addro = 0.0
        adsur = 0.0
        if twx > 0.0:
            ratio = (adimc - uztwc) / lztwm
            if ratio < 0.0:
                ratio = 0.0
            if ratio > 1.0:
                ratio = 1.0
            addro = twx * ratio * ratio
            adsur = sur * (1.0 - addro / twx)
        adimc = adimc + (twx - addro - adsur)
        if adimc < 0.0:
            adimc = 0.0
        if adimc > adcap:
            addro = addro + (adimc - adcap)
            adimc = adcap

        # area weighting into basin mm and mode aggregation
        tbf = sbf * parea
        slow = tbf / (1.0 + side)
        fluxes[t, 0] = roimp + sur * parea + adsur * adimp
        fluxes[t, 1] = addro * adimp + sif * parea
        fluxes[t, 2] = slow
        fluxes[t, 3] = (e1 + e2 + e3) * parea + e5 * adimp
        fluxes[t, 4] = tbf - slow
        if want_trace:
            trace[t, 0] = uztwc
            trace[t, 1] = uzfwc
            trace[t, 2] = lztwc
            trace[t, 3] = lzfsc
            trace[t, 4] = lzfpc
            trace[t, 5] = adimc
    return uztwc, uzfwc, lztwc, lzfsc, lzfpc, adimc


def run_arrays(precip: np.ndarray, pet: np.ndarray, theta: np.ndarray,
               init_vec: np.ndarray, want_trace: bool):
    """Run the kernel over full arrays; shared by simulate and step."""
    n = precip.shape[0]
    fluxes = np.empty((n, 5))
    trace = np.empty((n, 6)) if want_trace else np.empty((0, 6))
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
    new_state = State(**{n: float(v) for n, v in zip(STATE_NAMES, final)})
    day = DailyFluxes.of(
        intensity=float(fluxes[0, FLUX_INTENSITY]),
        wetness=float(fluxes[0, FLUX_WETNESS]),
        slow=float(fluxes[0, FLUX_SLOW]),
        aet=float(fluxes[0, FLUX_AET]),
    )
    return new_state, day
