"""Transient energy bookkeeping, swing segmentation and stability verdicts.

The energy function uses the healthy-network power curve and the steady IBR
coupling power,

    V(delta, dw) = 1/2 T_J w_g dw^2
                   - A (cos delta - cos delta_s) - (P_w,ss + P_M)(delta - delta_s),

so that along any trajectory

    dV/dt = w_g (dP_w dw - dP_sg dw - D dw^2),
    dP_w  = P_w(t) - P_w,ss,   dP_sg = P_sg(t) - A sin(delta).

Every disturbance (fault, LVRT, ramp recovery) therefore shows up only in
the two power deviations, which is what makes the per-cycle ledger
``dV = dV_w - dV_D`` an identity once the network is restored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DegenerateCycle, EmptyTrace

if TYPE_CHECKING:
    from .machine import EquilibriumPair
    from .simulator import Trace

SIGN_DEADBAND = 1e-12


@dataclass(frozen=True)
class EnergyReference:
    delta_s: float
    p_w_ss: float
    p_m: float
    amp: float
    omega_g: float
    t_j: float
    d: float

    def __post_init__(self):
        if not self.amp > 0:
            raise ValueError("amplitude E U |Y_sg| must be positive")


def potential_energy(delta, ref: EnergyReference):
    """Closed form of the potential term, measured from the SEP."""
    delta = np.asarray(delta, dtype=float)
    out = (-ref.amp * (np.cos(delta) - math.cos(ref.delta_s))
           - (ref.p_w_ss + ref.p_m) * (delta - ref.delta_s))
    return float(out) if out.ndim == 0 else out


def kinetic_energy(d_omega, ref: EnergyReference):
    d_omega = np.asarray(d_omega, dtype=float)
    out = 0.5 * ref.t_j * ref.omega_g * d_omega * d_omega
    return float(out) if out.ndim == 0 else out


def total_energy(delta, d_omega, ref: EnergyReference):
    return kinetic_energy(d_omega, ref) + potential_energy(delta, ref)


@dataclass(frozen=True)
class EnergyRates:
    w_term: np.ndarray | float
    sg_term: np.ndarray | float
    d_term: np.ndarray | float

    @property
    def total(self):
        return self.w_term + self.sg_term + self.d_term


def energy_rate_terms(delta, d_omega, p_sg, p_w, ref: EnergyReference,
                      healthy_p_sg=None) -> EnergyRates:
    """Split dV/dt into IBR, grid-deviation and damping contributions.

    ``healthy_p_sg`` maps delta to the healthy grid-coupling power; defaults
    to ``amp * sin(delta)``.  Arguments may be scalars or equal-length arrays.
    """
    delta = np.asarray(delta, dtype=float)
    d_omega = np.asarray(d_omega, dtype=float)
    curve = ref.amp * np.sin(delta) if healthy_p_sg is None else healthy_p_sg(delta)
    dp_w = np.asarray(p_w, dtype=float) - ref.p_w_ss
    dp_sg = np.asarray(p_sg, dtype=float) - curve
    w = ref.omega_g * dp_w * d_omega
    sg = -ref.omega_g * dp_sg * d_omega
    d = -ref.omega_g * ref.d * d_omega * d_omega
    if w.ndim == 0:
        return EnergyRates(float(w), float(sg), float(d))
    return EnergyRates(w, sg, d)


class Direction(str, enum.Enum):
    ANGLE_INCREASING = "AngleIncreasing"
    ANGLE_DECREASING = "AngleDecreasing"


@dataclass(frozen=True)
class SwingSegment:
    """One rotor swing: a maximal run of samples with constant sign of dw.

    ``i_start`` is the first sample of the swing and ``i_end`` the first
    sample of the next one (or the last sample of the trace).
    """

    index: int
    i_start: int
    i_end: int
    t_start: float
    t_end: float
    direction: Direction
    delta_extreme: float
    v_at_end: float


def _signs(d_omega: np.ndarray, deadband: float) -> np.ndarray:
    s = np.sign(d_omega)
    s[np.abs(d_omega) <= deadband] = 0
    return s.astype(int)


def segment_arrays(t: np.ndarray, delta: np.ndarray, d_omega: np.ndarray,
                   v: np.ndarray | None = None,
                   deadband: float = SIGN_DEADBAND) -> list[SwingSegment]:
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        raise EmptyTrace("need at least two samples to segment swings")
    delta = np.asarray(delta, dtype=float)
    signs = _signs(np.asarray(d_omega, dtype=float), deadband)
    nz = np.flatnonzero(signs)
    if nz.size == 0:
        return []

    starts = [int(nz[0])]
    current = signs[nz[0]]
    for i in nz[1:]:
        if signs[i] != current:
            starts.append(int(i))
            current = signs[i]
    last = t.size - 1
    ends = starts[1:] + [last]

    segments = []
    for k, (a, b) in enumerate(zip(starts, ends), start=1):
        increasing = signs[a] > 0
        window = delta[a:b + 1]
        extreme = float(window.max() if increasing else window.min())
        segments.append(SwingSegment(
            index=k, i_start=a, i_end=b, t_start=float(t[a]), t_end=float(t[b]),
            direction=Direction.ANGLE_INCREASING if increasing else Direction.ANGLE_DECREASING,
            delta_extreme=extreme,
            v_at_end=float(v[b]) if v is not None else math.nan,
        ))
    return segments


def segment_swings(trace: Trace) -> list[SwingSegment]:
    """Split a trace into swings at sign changes of the speed deviation.

    Samples with ``|dw| <= SIGN_DEADBAND`` carry no sign; a leading run of
    them (quiescent pre-fault interval) belongs to no swing.
    """
    return segment_arrays(trace.t, trace.delta, trace.d_omega, trace.v)


@dataclass(frozen=True)
class CycleEnergyReport:
    cycle_index: int
    t_a: float
    t_b: float
    t_c: float
    delta_a: float
    delta_b: float
    delta_c: float
    dv_total: float
    dv_w: float
    dv_d: float
    dv_sg: float
    mvt_1: float
    mvt_2: float
    spans_mode_change: bool

    @property
    def ledger_residual(self) -> float:
        return self.dv_total - (self.dv_w - self.dv_d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _trapz(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def cycle_arrays(t, delta, d_omega, p_w, p_sg, v, ref: EnergyReference,
                 i_a: int, i_b: int, i_c: int, cycle_index: int = 1,
                 mode=None, angle_tol: float = 1e-9) -> CycleEnergyReport:
    t = np.asarray(t, dtype=float)
    delta = np.asarray(delta, dtype=float)
    dw = np.asarray(d_omega, dtype=float)
    dp_w = np.asarray(p_w, dtype=float) - ref.p_w_ss
    dp_sg = np.asarray(p_sg, dtype=float) - ref.amp * np.sin(delta)

    span_ab = delta[i_b] - delta[i_a]
    span_bc = delta[i_c] - delta[i_b]
    if abs(span_ab) < angle_tol or abs(span_bc) < angle_tol:
        raise DegenerateCycle("swing with negligible angle travel")

    ac = slice(i_a, i_c + 1)
    dv_w = ref.omega_g * _trapz(dp_w[ac] * dw[ac], t[ac])
    dv_d = ref.omega_g * ref.d * _trapz(dw[ac] ** 2, t[ac])
    dv_sg = -ref.omega_g * _trapz(dp_sg[ac] * dw[ac], t[ac])
    ab, bc = slice(i_a, i_b + 1), slice(i_b, i_c + 1)
    mvt_1 = _trapz(dp_w[ab], delta[ab]) / span_ab
    mvt_2 = _trapz(dp_w[bc], delta[bc]) / span_bc
    spans = False
    if mode is not None:
        spans = len(set(np.asarray(mode)[ac].tolist())) > 1
    return CycleEnergyReport(
        cycle_index=cycle_index,
        t_a=float(t[i_a]), t_b=float(t[i_b]), t_c=float(t[i_c]),
        delta_a=float(delta[i_a]), delta_b=float(delta[i_b]), delta_c=float(delta[i_c]),
        dv_total=float(v[i_c] - v[i_a]), dv_w=dv_w, dv_d=dv_d, dv_sg=dv_sg,
        mvt_1=mvt_1, mvt_2=mvt_2, spans_mode_change=spans,
    )


def cycle_energy_report(trace: Trace, ref: EnergyReference,
                        pair: Sequence[SwingSegment], cycle_index: int = 1) -> CycleEnergyReport:
    """Energy ledger over one A -> B -> C cycle.

    ``pair`` is an angle-decreasing swing (A to B) followed by an
    angle-increasing swing (B to C).  ``dv_sg`` is the grid-deviation
    contribution, zero when the healthy network is in place over the cycle.
    """
    first, second = pair
    if (first.direction is not Direction.ANGLE_DECREASING
            or second.direction is not Direction.ANGLE_INCREASING
            or first.i_end != second.i_start):
        raise ValueError("a cycle is a decreasing swing followed by the adjacent increasing swing")
    return cycle_arrays(trace.t, trace.delta, trace.d_omega, trace.p_w, trace.p_sg, trace.v,
                        ref, first.i_start, second.i_start, second.i_end,
                        cycle_index=cycle_index, mode=trace.mode)


def cycles(segments: Sequence[SwingSegment]) -> list[tuple[SwingSegment, SwingSegment]]:
    """All adjacent (decreasing, increasing) swing pairs, in order."""
    return [(a, b) for a, b in zip(segments, segments[1:])
            if a.direction is Direction.ANGLE_DECREASING
            and b.direction is Direction.ANGLE_INCREASING]


class Outcome(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


class Classification(str, enum.Enum):
    FIRST_SWING = "FirstSwing"
    MULTI_SWING = "MultiSwing"
    NONE = "None"


@dataclass(frozen=True)
class StabilityVerdict:
    outcome: Outcome
    instability_swing_index: int | None
    delta_uep: float
    max_delta: float
    classification: Classification

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "instability_swing_index": self.instability_swing_index,
            "delta_uep": self.delta_uep,
            "max_delta": self.max_delta,
            "classification": self.classification.value,
        }


def classify_arrays(delta: np.ndarray, d_omega: np.ndarray, delta_uep: float,
                    swings: Sequence[SwingSegment], diverged: bool = False) -> StabilityVerdict:
    delta = np.asarray(delta, dtype=float)
    d_omega = np.asarray(d_omega, dtype=float)
    crossing = np.flatnonzero((delta > delta_uep) & (d_omega > 0))
    first = None
    if crossing.size:
        first = int(crossing[0])
    elif diverged:
        first = delta.size - 1
    max_delta = float(delta.max()) if delta.size else math.nan
    if first is None:
        return StabilityVerdict(Outcome.STABLE, None, delta_uep, max_delta, Classification.NONE)

    index = None
    for seg in swings:
        if seg.i_start <= first and (first < seg.i_end or seg is swings[-1]):
            index = seg.index
            break
    if index is None:
        index = 1
    kind = Classification.FIRST_SWING if index == 1 else Classification.MULTI_SWING
    return StabilityVerdict(Outcome.UNSTABLE, index, delta_uep, max_delta, kind)


def classify_stability(trace: Trace, eq: EquilibriumPair,
                       swings: Sequence[SwingSegment]) -> StabilityVerdict:
    """Unstable iff the rotor crosses the post-disturbance UEP moving forward.

    The instability swing index is the swing holding the first such sample;
    index 1 is first-swing instability, anything later is multi-swing.
    """
    return classify_arrays(trace.delta, trace.d_omega, eq.delta_uep, swings,
                           diverged=trace.diverged)


@dataclass(frozen=True)
class TraceAnalysis:
    swings: tuple[SwingSegment, ...]
    cycles: tuple[CycleEnergyReport, ...]
    verdict: StabilityVerdict


def analyze_trace(trace, ref: EnergyReference, delta_uep: float,
                  diverged: bool = False) -> TraceAnalysis:
    """Swings, per-cycle ledgers and verdict for anything shaped like a Trace.

    Cycles with negligible angle travel (numerical ripple at the tail of a
    well-damped run) are skipped.
    """
    swings = segment_arrays(trace.t, trace.delta, trace.d_omega, trace.v)
    reports = []
    for first, second in cycles(swings):
        try:
            reports.append(cycle_arrays(
                trace.t, trace.delta, trace.d_omega, trace.p_w, trace.p_sg, trace.v, ref,
                first.i_start, second.i_start, second.i_end,
                cycle_index=len(reports) + 1, mode=trace.mode))
        except DegenerateCycle:
            continue
    verdict = classify_arrays(trace.delta, trace.d_omega, delta_uep, swings, diverged=diverged)
    return TraceAnalysis(tuple(swings), tuple(reports), verdict)
