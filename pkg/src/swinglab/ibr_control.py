"""Quasi-static grid-following IBR control: LVRT droop, ramp recovery.

All currents are on the system per-unit base.  The inner current loop and
PLL are taken as instantaneous on the rotor timescale, so the controller is
an algebraic map from the PCC voltage to the (i_d, i_q) command plus a small
mode machine.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, replace


class Mode(str, enum.Enum):
    NORMAL = "Normal"
    LVRT = "Lvrt"
    RECOVERY = "Recovery"


@dataclass(frozen=True)
class IbrParams:
    """Controller settings.

    sigma : active current kept during LVRT (absolute command, not a fraction)
    recovery_rate : ramp slope of i_d after clearing in pu/s; ``math.inf``
        restores the pre-fault current at once
    k_q : reactive droop gain, pu current per pu voltage below ``u_enter``
    """

    sigma: float = 0.5
    recovery_rate: float = math.inf
    k_q: float = 2.0
    u_enter: float = 0.9
    u_exit: float = 0.9
    i_max: float = 1.2

    def __post_init__(self):
        if self.i_max <= 0:
            raise ValueError("i_max must be positive")
        if not 0.0 <= self.sigma <= self.i_max:
            raise ValueError(f"sigma={self.sigma} must lie in [0, i_max={self.i_max}]")
        if not self.recovery_rate > 0:
            raise ValueError("recovery_rate must be positive (inf for instant recovery)")
        if self.k_q < 0:
            raise ValueError("k_q must be non-negative")
        if not 0.0 < self.u_exit <= self.u_enter < 1.0:
            raise ValueError("thresholds must satisfy 0 < u_exit <= u_enter < 1")


@dataclass(frozen=True)
class IbrState:
    mode: Mode
    i_d: float
    i_q: float = 0.0
    t_mode_entry: float = 0.0
    i_d_at_clear: float = 0.0
    i_d_target: float = 0.0


def steady_state(i_d0: float, t: float = 0.0) -> IbrState:
    return IbrState(mode=Mode.NORMAL, i_d=i_d0, i_q=0.0, t_mode_entry=t,
                    i_d_at_clear=i_d0, i_d_target=i_d0)


def lvrt_currents(u_mag: float, i_d0: float, params: IbrParams) -> tuple[float, float]:
    """Reactive-priority LVRT command.

    ``i_d0`` (the pre-fault current) is accepted for interface symmetry; the
    active command is the absolute ``sigma`` capped by the current ceiling.
    """
    i_q = min(max(params.k_q * (params.u_enter - u_mag), 0.0), params.i_max)
    headroom = math.sqrt(max(0.0, params.i_max * params.i_max - i_q * i_q))
    return min(params.sigma, headroom), i_q


def recovery_complete_after(state: IbrState, params: IbrParams) -> float:
    """Time since clearing at which the ramp reaches its target."""
    if math.isinf(params.recovery_rate):
        return 0.0
    return max(state.i_d_target - state.i_d_at_clear, 0.0) / params.recovery_rate


def recovery_currents(t_since_clear: float, state: IbrState,
                      params: IbrParams) -> tuple[float, float]:
    if math.isinf(params.recovery_rate):
        return state.i_d_target, 0.0
    i_d = state.i_d_at_clear + params.recovery_rate * max(t_since_clear, 0.0)
    return min(i_d, state.i_d_target), 0.0


def mode_transition(state: IbrState, u_mag: float, fault_cleared: bool, t: float,
                    params: IbrParams | None = None) -> IbrState:
    """Advance the mode machine by at most one transition.

    Normal -> Lvrt on a dip below ``u_enter`` while the fault is present;
    Lvrt -> Recovery once the fault is cleared and the voltage is back above
    ``u_exit`` (reactive current is dropped at that instant); Recovery ->
    Normal when the ramp has reached its target.  Post-clearing sags do not
    re-arm LVRT: with ``u_exit == u_enter`` there is no hysteresis and the
    mode would chatter.
    """
    params = params or IbrParams()
    if state.mode is Mode.NORMAL:
        if u_mag < params.u_enter and not fault_cleared:
            i_d, i_q = lvrt_currents(u_mag, state.i_d_target, params)
            return replace(state, mode=Mode.LVRT, i_d=i_d, i_q=i_q, t_mode_entry=t)
        return state
    if state.mode is Mode.LVRT:
        if fault_cleared and u_mag >= params.u_exit:
            return replace(state, mode=Mode.RECOVERY, i_q=0.0, t_mode_entry=t,
                           i_d_at_clear=state.i_d)
        return state
    # Recovery
    if t - state.t_mode_entry >= recovery_complete_after(state, params):
        return replace(state, mode=Mode.NORMAL, i_d=state.i_d_target, i_q=0.0,
                       t_mode_entry=t)
    return state


def command(state: IbrState, u_mag: float, t: float,
            params: IbrParams) -> tuple[float, float]:
    """(i_d, i_q) produced in the current mode at voltage ``u_mag`` and time ``t``."""
    if state.mode is Mode.LVRT:
        return lvrt_currents(u_mag, state.i_d_target, params)
    if state.mode is Mode.RECOVERY:
        return recovery_currents(t - state.t_mode_entry, state, params)
    return state.i_d_target, 0.0


def current_phasor(i_d: float, i_q: float, theta: float) -> complex:
    """IBR current phasor from dq components in the PLL frame.

    The current lags the PCC voltage by ``eta = atan2(i_q, i_d)``, so that
    ``U conj(I) = |U| (i_d + j i_q)``.
    """
    if i_d < 0.0 or i_q < 0.0:
        raise ValueError("only generating operation (i_d >= 0, i_q >= 0) is modelled")
    return complex(i_d, -i_q) * cmath.rect(1.0, theta)
