"""Fixed-step hybrid simulation of the SG / IBR / grid system.

The rotor states (delta, dw) are advanced with classical RK4.  The network
and the IBR controller are algebraic: every RK stage re-solves the PCC
interface for the active network (pre-fault, faulted, post-fault) and the
controller mode.  Mode transitions are evaluated once per accepted step, at
the start of the step, and integration segments are split exactly at the
fault inception and clearing instants.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import ibr_control as ctl
from .energy_analysis import EnergyReference, total_energy
from .errors import DegenerateFault, InvalidScenario, NoConvergence
from .ibr_control import IbrParams, IbrState, Mode
from .machine import (
    EquilibriumPair,
    SgParams,
    SteadyState,
    critical_energy,
    find_equilibria,
    initialize_steady_state,
)
from .network import (
    FaultSpec,
    PostFaultTopology,
    RawNetworkParams,
    ReducedNetwork,
    electrical_power,
    faulted_equivalent,
    post_fault_network,
    reduce_network,
    INTERFACE_MAX_ITER,
    INTERFACE_TOL,
    RELAXATION,
    solve_pcc_voltage,
)

DIVERGENCE_LIMIT = 4.0 * math.pi


@dataclass(frozen=True)
class MachineSetup:
    """SG data before initialisation (dispatch in MW)."""

    p_mw: float = 50.0
    t_j: float = 8.0
    d: float = 10.0
    x_d_prime: float = 0.15


@dataclass(frozen=True)
class Scenario:
    """Complete description of one run.

    ``fault=None`` gives an undisturbed run.  ``d_omega0`` perturbs the
    initial speed.  ``freeze_ibr`` replaces the controller by a current
    phasor locked to the rotor frame, which holds the IBR coupling power at
    its steady value (used for conservative checks).
    """

    network: RawNetworkParams
    machine: MachineSetup
    p_ibr_mw: float
    ibr: IbrParams
    fault: FaultSpec | None = field(default_factory=FaultSpec)
    t_end: float = 10.0
    dt: float = 1e-3
    d_omega0: float = 0.0
    freeze_ibr: bool = False
    name: str = ""

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidScenario("dt must be positive")
        if not self.t_end > 0:
            raise InvalidScenario("t_end must be positive")
        if self.fault is not None and not self.t_end > self.fault.t_clear:
            raise InvalidScenario(
                f"t_end={self.t_end} must exceed fault clearing time {self.fault.t_clear}")
        if self.p_ibr_mw < 0:
            raise InvalidScenario("IBR dispatch must be non-negative")


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    phase: str
    network: ReducedNetwork


def event_schedule(scenario: Scenario) -> list[Segment]:
    """Integration segments with their active network."""
    raw, fault = scenario.network, scenario.fault
    healthy = reduce_network(raw)
    if fault is None:
        return [Segment(0.0, scenario.t_end, "pre", healthy)]
    if not fault.t_clear > fault.t_on:
        raise InvalidScenario("t_clear must exceed t_on")
    if not scenario.t_end > fault.t_clear:
        raise InvalidScenario("t_end must exceed t_clear")
    try:
        faulted = faulted_equivalent(raw, fault)
    except DegenerateFault as exc:
        raise InvalidScenario(str(exc)) from exc
    segments = []
    if fault.t_on > 0.0:
        segments.append(Segment(0.0, fault.t_on, "pre", healthy))
    segments.append(Segment(fault.t_on, fault.t_clear, "fault", faulted))
    segments.append(Segment(fault.t_clear, scenario.t_end, "post", post_fault_network(raw, fault)))
    return segments


def step_times(t_start: float, t_end: float, dt: float) -> list[tuple[float, float]]:
    """(t, h) pairs covering [t_start, t_end]; the last step is shortened."""
    n = max(1, math.ceil((t_end - t_start) / dt - 1e-9))
    steps = []
    for k in range(n):
        t = t_start + k * dt
        h = dt if k < n - 1 else t_end - t
        steps.append((t, h))
    return steps


@dataclass(frozen=True)
class TraceSample:
    t: float
    delta: float
    d_omega: float
    p_e: float
    p_sg: float
    p_w: float
    i_d: float
    i_q: float
    u_pcc_mag: float
    u_pcc_ang: float
    mode: str
    v: float


TRACE_COLUMNS = ("t", "delta", "d_omega", "p_e", "p_sg", "p_w", "i_d", "i_q",
                 "u_pcc_mag", "u_pcc_ang", "mode", "v")


@dataclass
class Trace:
    """Column-oriented simulation record plus the context needed to analyse it."""

    t: np.ndarray
    delta: np.ndarray
    d_omega: np.ndarray
    p_e: np.ndarray
    p_sg: np.ndarray
    p_w: np.ndarray
    i_d: np.ndarray
    i_q: np.ndarray
    u_pcc_mag: np.ndarray
    u_pcc_ang: np.ndarray
    mode: np.ndarray
    v: np.ndarray
    scenario: Scenario | None = None
    events: list[tuple[float, str]] = field(default_factory=list)
    energy_ref: EnergyReference | None = None
    equilibrium: EquilibriumPair | None = None
    diverged: bool = False
    error: str | None = None

    def __len__(self) -> int:
        return len(self.t)

    def sample(self, i: int) -> TraceSample:
        return TraceSample(*(self._value(name, i) for name in TRACE_COLUMNS))

    def _value(self, name: str, i: int):
        x = getattr(self, name)[i]
        return str(x) if name == "mode" else float(x)

    def __iter__(self):
        for i in range(len(self)):
            yield self.sample(i)


class _Recorder:
    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, t, delta, dw, sol_p, u, i_d, i_q, mode):
        p_e, p_sg, p_w = sol_p
        self.rows.append((t, delta, dw, p_e, p_sg, p_w, i_d, i_q, abs(u),
                          math.atan2(u.imag, u.real), mode))

    def build(self, ref: EnergyReference, **context) -> Trace:
        cols = list(zip(*self.rows)) if self.rows else [()] * 11
        arrays = [np.array(c, dtype=float) for c in cols[:10]]
        mode = np.array(cols[10], dtype=object)
        v = total_energy(arrays[1], arrays[2], ref)
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return Trace(*arrays, mode, v, energy_ref=ref, **context)


def energy_reference(steady: SteadyState, raw: RawNetworkParams) -> EnergyReference:
    healthy = reduce_network(raw)
    amp = steady.sg.e_s_mag * abs(raw.u_g) * abs(healthy.y_sg)
    return EnergyReference(delta_s=steady.rotor.delta, p_w_ss=steady.p_w, p_m=steady.sg.p_m,
                           amp=amp, omega_g=steady.sg.omega_g, t_j=steady.sg.t_j,
                           d=steady.sg.d)


def post_disturbance_equilibrium(scenario: Scenario, steady: SteadyState,
                                 ref: EnergyReference) -> EquilibriumPair:
    fault = scenario.fault
    if fault is None or fault.post_fault_topology is PostFaultTopology.RESTORE_FULL:
        delta_s = steady.rotor.delta
        return EquilibriumPair(delta_s=delta_s, delta_uep=math.pi - delta_s,
                               p_w_ss=steady.p_w,
                               v_crit=critical_energy(delta_s, ref.amp, ref.p_m + steady.p_w))
    net = post_fault_network(scenario.network, fault)
    return find_equilibria(steady.sg, net, steady.i_d0 * abs(steady.u_pcc))


def initialize(scenario: Scenario) -> SteadyState:
    m = scenario.machine
    return initialize_steady_state(m.p_mw, scenario.p_ibr_mw, scenario.network,
                                   t_j=m.t_j, d=m.d, x_d_prime=m.x_d_prime)


class _Plant:
    """Evaluates P_E at a rotor angle for a fixed network and controller mode."""

    def __init__(self, scenario: Scenario, steady: SteadyState):
        self.sg = steady.sg
        self.params = scenario.ibr
        self.freeze = scenario.freeze_ibr
        self.frozen_current = steady.i_d0 * steady.u_pcc / abs(steady.u_pcc) if steady.i_d0 else 0j
        self.delta_s = steady.rotor.delta
        self.u_guess = steady.u_pcc
        self.guess_delta = steady.rotor.delta
        self._cache: dict[int, tuple] = {}

    def _constants(self, net: ReducedNetwork):
        c = self._cache.get(id(net))
        if c is None:
            c = (net.y_s, net.y_sum, net.u_g_eff * net.y_g_eff, net.y_sg, net.u_g_eff, net.alpha)
            self._cache[id(net)] = c
        return c

    def solve(self, net: ReducedNetwork, delta: float, state: IbrState, t: float):
        """Returns ((p_e, p_sg, p_w), u_pcc, i_d, i_q).

        Same damped iteration as ``network.solve_interface``, inlined because
        it runs four times per step.
        """
        e_mag = self.sg.e_s_mag
        if self.freeze:
            i_w = self.frozen_current * cmath.rect(1.0, delta - self.delta_s)
            u = solve_pcc_voltage(net, cmath.rect(e_mag, delta), i_w)
            s = u.conjugate() * i_w
            u_mag = abs(u)
            i_d = s.real / u_mag if u_mag else 0.0
            i_q = -s.imag / u_mag if u_mag else 0.0
            return electrical_power(delta, net, e_mag, i_w), u, i_d, i_q

        y_s, y_sum, ug_yg, y_sg, u_g_eff, alpha = self._constants(net)
        e_s = cmath.rect(e_mag, delta)
        base = (e_s * y_s + ug_yg) / y_sum
        # shift the last solution by the exact change of the source term, so
        # only the controller feedback is left to iterate on
        u = self.u_guess + (e_s - cmath.rect(e_mag, self.guess_delta)) * y_s / y_sum
        p = self.params
        lvrt = state.mode is Mode.LVRT
        if lvrt:
            k_q, u_enter, i_max, sigma = p.k_q, p.u_enter, p.i_max, p.sigma
        else:
            i_d, i_q = ctl.command(state, 1.0, t, p)
        residual = math.inf
        for _ in range(INTERFACE_MAX_ITER):
            u_mag = abs(u)
            if lvrt:
                i_q = min(max(k_q * (u_enter - u_mag), 0.0), i_max)
                i_d = min(sigma, math.sqrt(max(0.0, i_max * i_max - i_q * i_q)))
            step = base + complex(i_d, -i_q) * (u / u_mag) / y_sum - u
            residual = abs(step)
            if residual < INTERFACE_TOL:
                u = u + step
                break
            u = u + RELAXATION * step
        else:
            raise NoConvergence(INTERFACE_MAX_ITER, residual)

        theta = math.atan2(u.imag, u.real)
        if lvrt:
            i_d, i_q = ctl.lvrt_currents(abs(u), state.i_d_target, p)
        i_w = ctl.current_phasor(i_d, i_q, theta)
        p_sg = (e_s * (y_sg * (e_s - u_g_eff)).conjugate()).real
        p_w = (e_s * (alpha * i_w).conjugate()).real
        return (p_sg - p_w, p_sg, p_w), u, i_d, i_q


def rk4_step(delta: float, d_omega: float, t: float, h: float, sg: SgParams, p_e_of):
    """One classical RK4 step of the swing equation.

    ``p_e_of(delta, t)`` returns the electrical power at a stage; it is
    called at t, t+h/2 (twice) and t+h.
    """
    w_g, t_j, p_m, d = sg.omega_g, sg.t_j, sg.p_m, sg.d

    def f(x, w, p_e):
        return w_g * w, (p_m - p_e - d * w) / t_j

    k1x, k1w = f(delta, d_omega, p_e_of(delta, t, True))
    x2, w2 = delta + 0.5 * h * k1x, d_omega + 0.5 * h * k1w
    k2x, k2w = f(x2, w2, p_e_of(x2, t + 0.5 * h, False))
    x3, w3 = delta + 0.5 * h * k2x, d_omega + 0.5 * h * k2w
    k3x, k3w = f(x3, w3, p_e_of(x3, t + 0.5 * h, False))
    x4, w4 = delta + h * k3x, d_omega + h * k3w
    k4x, k4w = f(x4, w4, p_e_of(x4, t + h, False))
    return (delta + h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0,
            d_omega + h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0)


class SimulationFailed(NoConvergence):
    """Interface solve failed mid-run; ``trace`` holds the samples so far."""

    def __init__(self, cause: NoConvergence, trace: Trace):
        super().__init__(cause.iterations, cause.residual, "simulation aborted")
        self.trace = trace


def run_simulation(scenario: Scenario) -> Trace:
    """Integrate a scenario from its power-flow steady state to ``t_end``."""
    steady = initialize(scenario)
    ref = energy_reference(steady, scenario.network)
    eq = post_disturbance_equilibrium(scenario, steady, ref)
    segments = event_schedule(scenario)
    params = scenario.ibr
    fault = scenario.fault
    t_clear = fault.t_clear if fault is not None else math.inf

    plant = _Plant(scenario, steady)
    state = ctl.steady_state(steady.i_d0)
    delta, dw = steady.rotor.delta, scenario.d_omega0
    rec = _Recorder()
    events: list[tuple[float, str]] = []
    if fault is not None:
        events += [(fault.t_on, "fault_on"), (fault.t_clear, "fault_clear")]
    diverged = False

    def context(error=None):
        return dict(scenario=scenario, events=sorted(events, key=lambda e: e[0]),
                    equilibrium=eq, diverged=diverged, error=error)

    try:
        for seg in segments:
            net = seg.network
            for t, h in step_times(seg.t_start, seg.t_end, scenario.dt):
                powers, u, i_d, i_q = plant.solve(net, delta, state, t)
                if not scenario.freeze_ibr:
                    new = ctl.mode_transition(state, abs(u), t >= t_clear, t, params)
                    if new.mode is not state.mode:
                        if new.mode is Mode.NORMAL and state.mode is Mode.RECOVERY:
                            events.append((t, "recovery_complete"))
                        else:
                            events.append((t, f"mode_{new.mode.value.lower()}"))
                        state = new
                        powers, u, i_d, i_q = plant.solve(net, delta, state, t)
                    if i_d != state.i_d or i_q != state.i_q:
                        state = replace(state, i_d=i_d, i_q=i_q)
                plant.u_guess, plant.guess_delta = u, delta
                rec.add(t, delta, dw, powers, u, i_d, i_q, state.mode.value)

                first_pe = powers[0]

                def p_e_of(x, ts, first, _net=net, _state=state):
                    if first:
                        return first_pe
                    return plant.solve(_net, x, _state, ts)[0][0]

                delta, dw = rk4_step(delta, dw, t, h, steady.sg, p_e_of)
                if not (math.isfinite(delta) and math.isfinite(dw)) or abs(delta) > DIVERGENCE_LIMIT:
                    diverged = True
                    break
            if diverged:
                break
        t_final = segments[-1].t_end if not diverged else t + h
        net = segments[-1].network
        powers, u, i_d, i_q = plant.solve(net, delta, state, t_final) if math.isfinite(delta) \
            else ((math.nan,) * 3, complex(math.nan, math.nan), math.nan, math.nan)
        rec.add(t_final, delta, dw, powers, u, i_d, i_q, state.mode.value)
    except NoConvergence as exc:
        trace = rec.build(ref, **context(error=str(exc)))
        raise SimulationFailed(exc, trace) from exc
    return rec.build(ref, **context())
