"""Two-port reduction of the SG / IBR / grid network and the PCC interface solve.

Phasors are plain Python ``complex`` numbers in per unit.  The network seen
from the point of common coupling (PCC) is

    SG internal node --Y_s-- PCC --Y_g-- grid source U_g
                              |
                         IBR current I_w (injected)

so the PCC voltage follows from one nodal equation.  During a fault the grid
branch is replaced by a Thevenin-style pair (Y_g_eff, U_g_eff) obtained by
Kron elimination of the fault node, which keeps that nodal equation intact.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Callable

from .errors import DegenerateFault, DegenerateNetwork, NoConvergence
from .ibr_control import current_phasor

_TINY = 1e-12

RELAXATION = 0.7
INTERFACE_TOL = 1e-10
INTERFACE_MAX_ITER = 50


def phasor(magnitude: float, angle: float) -> complex:
    """Build a phasor from polar form (angle in radians)."""
    return cmath.rect(magnitude, angle)


def angle(z: complex) -> float:
    """Phase angle normalised to (-pi, pi]."""
    a = math.atan2(z.imag, z.real)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


def polar(z: complex) -> tuple[float, float]:
    return abs(z), angle(z)


class PostFaultTopology(str, enum.Enum):
    RESTORE_FULL = "RestoreFull"
    TRIP_CIRCUIT = "TripCircuit"


@dataclass(frozen=True)
class RawNetworkParams:
    """Branch admittances and bases of the study system.

    ``y_w`` (IBR branch) is carried for completeness; the IBR current is
    injected directly at the PCC, so it does not enter the reduction.
    """

    y_s: complex
    y_g: complex
    y_w: complex = -10j
    u_g: complex = 1.0 + 0.0j
    f_g: float = 50.0
    s_base_mva: float = 1000.0
    z_base_ohm: float = 52.9

    def __post_init__(self):
        if abs(self.y_s) <= 0 or abs(self.y_g) <= 0:
            raise DegenerateNetwork("branch admittances must be non-zero")
        if abs(self.y_s + self.y_g) < _TINY:
            raise DegenerateNetwork("Y_s + Y_g vanishes")
        if self.f_g <= 0 or self.s_base_mva <= 0 or self.z_base_ohm <= 0:
            raise ValueError("f_g, s_base_mva and z_base_ohm must be positive")

    @property
    def omega_g(self) -> float:
        return 2.0 * math.pi * self.f_g


@dataclass(frozen=True)
class FaultSpec:
    """Three-phase fault on one circuit of the double-circuit grid line.

    ``lam`` is the fractional distance of the fault from the PCC towards the
    grid bus along the faulted circuit.
    """

    r_f_ohm: float = 0.0
    lam: float = 0.5
    t_on: float = 0.5
    t_clear: float = 0.7
    post_fault_topology: PostFaultTopology = PostFaultTopology.RESTORE_FULL

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"fault location lam={self.lam} outside [0, 1]")
        if not self.r_f_ohm >= 0.0:
            raise ValueError(f"fault resistance must be >= 0, got {self.r_f_ohm}")
        if not (self.t_on >= 0.0 and self.t_clear > self.t_on):
            raise ValueError("fault timing requires t_clear > t_on >= 0")
        object.__setattr__(self, "post_fault_topology", PostFaultTopology(self.post_fault_topology))


@dataclass(frozen=True)
class ReducedNetwork:
    y_s: complex
    y_g_eff: complex
    u_g_eff: complex

    def __post_init__(self):
        if abs(self.y_s + self.y_g_eff) < _TINY:
            raise DegenerateNetwork("Y_s + Y_g_eff vanishes")

    @property
    def y_sum(self) -> complex:
        return self.y_s + self.y_g_eff

    @property
    def alpha(self) -> complex:
        return self.y_s / (self.y_s + self.y_g_eff)

    @property
    def y_sg(self) -> complex:
        return self.y_s * self.y_g_eff / (self.y_s + self.y_g_eff)


@dataclass(frozen=True)
class InterfaceSolution:
    u_pcc: complex
    i_w: complex
    i_d: float
    i_q: float
    p_e: float
    p_sg: float
    p_w: float
    iterations: int
    residual: float

    @property
    def theta(self) -> float:
        return angle(self.u_pcc)


def reduce_network(raw: RawNetworkParams) -> ReducedNetwork:
    """Healthy two-admittance form of the network."""
    return ReducedNetwork(y_s=raw.y_s, y_g_eff=raw.y_g, u_g_eff=raw.u_g)


def tripped_network(raw: RawNetworkParams) -> ReducedNetwork:
    """Network with the faulted circuit removed (one circuit of two left)."""
    return ReducedNetwork(y_s=raw.y_s, y_g_eff=raw.y_g / 2.0, u_g_eff=raw.u_g)


def post_fault_network(raw: RawNetworkParams, fault: FaultSpec) -> ReducedNetwork:
    if fault.post_fault_topology is PostFaultTopology.TRIP_CIRCUIT:
        return tripped_network(raw)
    return reduce_network(raw)


def faulted_equivalent(raw: RawNetworkParams, fault: FaultSpec) -> ReducedNetwork:
    """Fault-on reduction with the fault node eliminated.

    The faulted circuit (admittance Y_g/2) is split at ``lam`` into
    (Y_g/2)/lam towards the PCC and (Y_g/2)/(1-lam) towards the grid, with the
    fault shunt 1/r_f at the split point.  Eliminating that node leaves a PCC
    shunt plus a transfer branch which are folded into ``Y_g_eff`` and
    ``U_g_eff`` so that ``Y_g_eff (U - U_g_eff)`` is the current leaving the
    PCC towards the grid side.
    """
    lam, r_f = fault.lam, fault.r_f_ohm
    if r_f == 0.0 and lam in (0.0, 1.0):
        # lam=0 shorts the PCC itself; lam=1 shorts the ideal grid source
        raise DegenerateFault(f"bolted fault at lam={lam} collapses the model")
    half = raw.y_g / 2.0
    y_f = math.inf if r_f == 0.0 else raw.z_base_ohm / r_f

    # pcc_self: PCC-to-ground part contributed by the faulted circuit after
    # elimination; transfer: PCC-to-grid part.
    if lam == 0.0:
        pcc_self, transfer = half + y_f, half
    elif lam == 1.0:
        pcc_self, transfer = half, half
    else:
        y1 = half / lam
        y2 = half / (1.0 - lam)
        if math.isinf(y_f):
            pcc_self, transfer = y1, 0.0
        else:
            total = y1 + y2 + y_f
            pcc_self = y1 * (y2 + y_f) / total
            transfer = y1 * y2 / total

    y_g_eff = half + pcc_self
    if abs(raw.y_s + y_g_eff) < _TINY or abs(y_g_eff) < _TINY:
        raise DegenerateNetwork("faulted reduction is singular")
    u_g_eff = raw.u_g * (half + transfer) / y_g_eff
    return ReducedNetwork(y_s=raw.y_s, y_g_eff=y_g_eff, u_g_eff=u_g_eff)


def solve_pcc_voltage(net: ReducedNetwork, e_s: complex, i_w: complex) -> complex:
    """PCC voltage from the nodal equation for fixed sources and injection."""
    return (e_s * net.y_s + net.u_g_eff * net.y_g_eff + i_w) / net.y_sum


def electrical_power(delta: float, net: ReducedNetwork, e_s_mag: float,
                     i_w: complex) -> tuple[float, float, float]:
    """Split of the SG electrical power into (p_e, p_sg, p_w).

    ``p_sg`` is the grid-coupling term and ``p_w`` the IBR-coupling term, with
    ``p_e = p_sg - p_w``.  For lossless branches these reduce to
    ``E U |Y_sg| sin(delta - angle(U_g_eff))`` and
    ``alpha E |I_w| cos(delta - angle(I_w))``.
    """
    e_s = cmath.rect(e_s_mag, delta)
    p_sg = (e_s * (net.y_sg * (e_s - net.u_g_eff)).conjugate()).real
    p_w = (e_s * (net.alpha * i_w).conjugate()).real
    return p_sg - p_w, p_sg, p_w


Control = Callable[[float, float], "tuple[float, float]"]


def solve_interface(net: ReducedNetwork, delta: float, e_s_mag: float,
                    control: Control, u_guess: complex | None = None,
                    tol: float = INTERFACE_TOL,
                    max_iter: int = INTERFACE_MAX_ITER) -> InterfaceSolution:
    """Close the loop between the PCC voltage and the IBR controller.

    ``control(u_mag, theta)`` returns ``(i_d, i_q)``; theta is the PCC angle
    (quasi-static PLL).  Damped fixed-point iteration with factor
    ``RELAXATION``, starting from ``u_guess`` when given.
    """
    e_s = cmath.rect(e_s_mag, delta)
    y_sum = net.y_sum
    base = (e_s * net.y_s + net.u_g_eff * net.y_g_eff) / y_sum
    u = base if u_guess is None else u_guess
    residual = math.inf
    for it in range(1, max_iter + 1):
        u_mag = abs(u)
        i_d, i_q = control(u_mag, math.atan2(u.imag, u.real))
        # current_phasor without the trig round trip: exp(j theta) = u / |u|
        u_new = base + complex(i_d, -i_q) * (u / u_mag) / y_sum
        step = u_new - u
        residual = abs(step)
        if residual < tol:
            u = u_new
            break
        u = u + RELAXATION * step
    else:
        raise NoConvergence(max_iter, residual)

    theta = math.atan2(u.imag, u.real)
    i_d, i_q = control(abs(u), theta)
    i_w = current_phasor(i_d, i_q, theta)
    p_e, p_sg, p_w = electrical_power(delta, net, e_s_mag, i_w)
    return InterfaceSolution(u_pcc=u, i_w=i_w, i_d=i_d, i_q=i_q, p_e=p_e, p_sg=p_sg,
                             p_w=p_w, iterations=it, residual=residual)
