"""Classical synchronous-generator model: swing equation, SEP/UEP, initialisation."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import InfeasibleDispatch, NoConvergence
from .network import (
    RawNetworkParams,
    ReducedNetwork,
    angle,
    electrical_power,
    reduce_network,
    solve_interface,
)

__all__ = [
    "SgParams",
    "RotorState",
    "EquilibriumPair",
    "SteadyState",
    "electrical_power",
    "swing_rhs",
    "critical_energy",
    "find_equilibria",
    "initialize_steady_state",
]


@dataclass(frozen=True)
class SgParams:
    """Classical machine constants.

    ``d`` is in pu torque per pu speed, ``t_j`` in seconds; ``x_d_prime`` is
    informational (already folded into the SG branch admittance).
    """

    t_j: float = 8.0
    d: float = 10.0
    p_m: float = 0.0
    e_s_mag: float = 1.0
    x_d_prime: float = 0.15
    omega_g: float = 2.0 * math.pi * 50.0

    def __post_init__(self):
        if self.t_j <= 0:
            raise ValueError("t_j must be positive")
        if self.d < 0:
            raise ValueError("damping must be non-negative")
        if self.e_s_mag <= 0:
            raise ValueError("e_s_mag must be positive")


@dataclass(frozen=True)
class RotorState:
    delta: float
    d_omega: float = 0.0


@dataclass(frozen=True)
class EquilibriumPair:
    delta_s: float
    delta_uep: float
    p_w_ss: float
    v_crit: float


def swing_rhs(state: RotorState, p_e: float, params: SgParams) -> tuple[float, float]:
    d_delta = params.omega_g * state.d_omega
    d_domega = (params.p_m - p_e - params.d * state.d_omega) / params.t_j
    return d_delta, d_domega


def critical_energy(delta_s: float, amp: float, p_load: float) -> float:
    """Potential energy at the UEP ``pi - delta_s`` measured from the SEP."""
    return 2.0 * amp * math.cos(delta_s) - p_load * (math.pi - 2.0 * delta_s)


def unity_pf_law(p_dispatch: float):
    """Steady IBR law: constant active power at unity power factor."""
    def control(u_mag: float, theta: float) -> tuple[float, float]:
        return p_dispatch / u_mag, 0.0
    return control


def find_equilibria(params: SgParams, net: ReducedNetwork, ibr_dispatch: float,
                    tol: float = 1e-10, max_iter: int = 200) -> EquilibriumPair:
    """Stable equilibrium with the IBR coupling power solved self-consistently.

    Iterates ``delta = arcsin((P_M + P_w(delta)) / (E U |Y_sg|))`` and re-solves
    the unity-power-factor interface at every pass.
    """
    amp = params.e_s_mag * abs(net.u_g_eff) * abs(net.y_sg)
    phase = angle(net.u_g_eff)
    control = unity_pf_law(ibr_dispatch)
    delta, step = 0.0, math.inf
    u_guess = None
    for _ in range(max_iter):
        sol = solve_interface(net, delta, params.e_s_mag, control, u_guess=u_guess)
        u_guess = sol.u_pcc
        ratio = (params.p_m + sol.p_w) / amp
        if abs(ratio) > 1.0:
            raise InfeasibleDispatch(
                f"|P_M + P_w| = {abs(params.p_m + sol.p_w):.4f} exceeds "
                f"E U |Y_sg| = {amp:.4f}")
        new = math.asin(ratio) + phase
        step = abs(new - delta)
        delta = new
        if step < tol:
            break
    else:
        raise NoConvergence(max_iter, step, "equilibrium iteration stalled")

    sol = solve_interface(net, delta, params.e_s_mag, control, u_guess=u_guess)
    return EquilibriumPair(delta_s=delta, delta_uep=math.pi - delta, p_w_ss=sol.p_w,
                           v_crit=critical_energy(delta, amp, params.p_m + sol.p_w))


@dataclass(frozen=True)
class SteadyState:
    """Power-flow starting point of a scenario (all quantities in system pu)."""

    sg: SgParams
    rotor: RotorState
    i_d0: float
    u_pcc: complex
    p_sg: float
    p_w: float


def initialize_steady_state(p_sg_mw: float, p_ibr_mw: float, raw: RawNetworkParams,
                            t_j: float = 8.0, d: float = 10.0,
                            x_d_prime: float = 0.15, u_pcc_mag: float = 1.0) -> SteadyState:
    """Power flow with the IBR at unity power factor and |U_pcc| held at 1 pu.

    The PCC angle follows from the grid-line transfer of ``p_sg + p_ibr``; the
    SG internal EMF then closes the PCC current balance.  ``p_m`` is taken as
    the electrical output evaluated by the same interface solve the simulator
    uses, so the returned rotor state is an exact equilibrium of the model.
    """
    p_sg = p_sg_mw / raw.s_base_mva
    p_ibr = p_ibr_mw / raw.s_base_mva
    if p_ibr < 0:
        raise InfeasibleDispatch("IBR dispatch must be non-negative")
    net = reduce_network(raw)
    p_line = p_sg + p_ibr

    def line_power(theta: float) -> float:
        u = cmath.rect(u_pcc_mag, theta)
        return (u * ((u - raw.u_g) * raw.y_g).conjugate()).real - p_line

    lo, hi = -math.pi / 2, math.pi / 2
    if line_power(lo) * line_power(hi) > 0:
        raise InfeasibleDispatch(f"grid line cannot carry {p_line:.4f} pu at |U|={u_pcc_mag}")
    theta = brentq(line_power, lo, hi, xtol=1e-16, maxiter=200)

    u = cmath.rect(u_pcc_mag, theta)
    i_d0 = p_ibr / u_pcc_mag
    i_w = i_d0 * cmath.rect(1.0, theta)
    i_s = (u - raw.u_g) * raw.y_g - i_w
    e_s = u + i_s / raw.y_s
    e_mag, delta = abs(e_s), angle(e_s)

    def hold(u_mag: float, th: float) -> tuple[float, float]:
        return i_d0, 0.0

    # converge to round-off so a simulation started here stays quiescent
    sol = solve_interface(net, delta, e_mag, hold, u_guess=u, tol=1e-14, max_iter=200)
    sg = SgParams(t_j=t_j, d=d, p_m=sol.p_e, e_s_mag=e_mag, x_d_prime=x_d_prime,
                  omega_g=raw.omega_g)
    return SteadyState(sg=sg, rotor=RotorState(delta, 0.0), i_d0=i_d0, u_pcc=sol.u_pcc,
                       p_sg=sol.p_sg, p_w=sol.p_w)
