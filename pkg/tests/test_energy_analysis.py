from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swinglab.energy_analysis import (
    Classification,
    Direction,
    EnergyReference,
    Outcome,
    analyze_trace,
    classify_arrays,
    cycle_arrays,
    cycles,
    energy_rate_terms,
    kinetic_energy,
    potential_energy,
    segment_arrays,
    total_energy,
)
from swinglab.errors import DegenerateCycle, EmptyTrace
from swinglab.machine import critical_energy


@pytest.fixture
def ref():
    return EnergyReference(delta_s=0.72, p_w_ss=0.486, p_m=0.05, amp=0.81,
                           omega_g=2 * math.pi * 50, t_j=8.0, d=10.0)


def test_potential_energy_limits(ref):
    assert potential_energy(ref.delta_s, ref) == 0.0
    uep = math.pi - ref.delta_s
    assert potential_energy(uep, ref) == pytest.approx(
        critical_energy(ref.delta_s, ref.amp, ref.p_w_ss + ref.p_m), abs=1e-14)


@given(st.floats(-1.0, 3.0))
def test_potential_gradient(delta):
    ref = EnergyReference(0.72, 0.486, 0.05, 0.81, 2 * math.pi * 50, 8.0, 10.0)
    h = 1e-6
    fd = (potential_energy(delta + h, ref) - potential_energy(delta - h, ref)) / (2 * h)
    assert fd == pytest.approx(ref.amp * math.sin(delta) - ref.p_w_ss - ref.p_m, abs=1e-8)


def test_total_energy_examples(ref):
    assert total_energy(ref.delta_s, 0.0, ref) == 0.0
    assert kinetic_energy(0.01, ref) == pytest.approx(0.5 * 8 * 100 * math.pi * 1e-4)
    arr = total_energy(np.array([ref.delta_s, 1.0]), np.array([0.0, 0.01]), ref)
    assert arr.shape == (2,)


def test_rate_terms(ref):
    zero = energy_rate_terms(1.0, 0.0, 0.5, 0.7, ref)
    assert zero.total == 0.0
    dw = 0.003
    r = energy_rate_terms(1.0, dw, ref.amp * math.sin(1.0), ref.p_w_ss, ref)
    assert r.w_term == 0.0 and r.sg_term == 0.0
    assert r.total == pytest.approx(-ref.omega_g * ref.d * dw * dw)


def test_segment_sine():
    t = np.arange(0.0, 2.0 + 1e-12, 1e-3)
    dw = np.sin(2 * np.pi * t)
    segs = segment_arrays(t, np.cumsum(dw), dw)
    assert len(segs) == 4
    assert [s.direction for s in segs] == [Direction.ANGLE_INCREASING,
                                            Direction.ANGLE_DECREASING] * 2
    assert [s.t_start for s in segs[1:]] == pytest.approx([0.501, 1.001, 1.501], abs=1e-9)


def test_segment_monotone_and_empty():
    t = np.linspace(0, 1, 50)
    segs = segment_arrays(t, t ** 2, 0.1 + t)
    assert len(segs) == 1 and segs[0].direction is Direction.ANGLE_INCREASING
    assert segment_arrays(t, t, np.zeros_like(t)) == []
    with pytest.raises(EmptyTrace):
        segment_arrays(t[:1], t[:1], t[:1])


def _pendulum_like(c, d_const, n=4001):
    """Synthetic cycle with prescribed dP_w = c (needs only kinematics)."""
    t = np.linspace(0.0, 2.0, n)
    delta = 0.7 + 0.2 * np.cos(np.pi * t)          # A at t=0, B at t=1, C at t=2
    omega_g = 2 * math.pi * 50
    dw = -0.2 * np.pi * np.sin(np.pi * t) / omega_g
    ref = EnergyReference(0.7, 0.4, 0.05, 0.8, omega_g, 8.0, d_const)
    p_w = np.full_like(t, ref.p_w_ss + c)
    p_sg = ref.amp * np.sin(delta)
    v = total_energy(delta, dw, ref)
    return t, delta, dw, p_w, p_sg, v, ref


def test_cycle_zero_power_deviation():
    t, delta, dw, p_w, p_sg, v, ref = _pendulum_like(0.0, 0.0)
    rep = cycle_arrays(t, delta, dw, p_w, p_sg, v, ref, 0, 2000, 4000)
    assert rep.dv_w == 0.0 and rep.dv_d == 0.0
    assert rep.mvt_1 == 0.0 and rep.mvt_2 == 0.0


@pytest.mark.parametrize("c", [-0.05, 0.02])
def test_cycle_constant_power_deviation(c):
    t, delta, dw, p_w, p_sg, v, ref = _pendulum_like(c, 0.0)
    rep = cycle_arrays(t, delta, dw, p_w, p_sg, v, ref, 0, 2000, 4000)
    # integrating omega_g * c * dw over time gives c times the angle travel
    assert rep.dv_w == pytest.approx(c * (delta[4000] - delta[0]), abs=1e-12)
    assert rep.mvt_1 == pytest.approx(c) and rep.mvt_2 == pytest.approx(c)


def test_degenerate_cycle():
    t, delta, dw, p_w, p_sg, v, ref = _pendulum_like(0.0, 0.0)
    with pytest.raises(DegenerateCycle):
        cycle_arrays(t, delta, dw, p_w, p_sg, v, ref, 0, 0, 4000)


def test_cycles_pairing():
    t = np.arange(0.0, 3.0, 1e-3)
    dw = np.sin(2 * np.pi * t + 0.1)
    segs = segment_arrays(t, np.cumsum(dw), dw)
    pairs = cycles(segs)
    assert all(a.direction is Direction.ANGLE_DECREASING for a, _ in pairs)
    assert all(a.i_end == b.i_start for a, b in pairs)
    assert len(pairs) == 3  # the last increasing swing is cut by the trace end


def test_classification():
    t = np.linspace(0, 3, 3001)
    delta = 0.7 + 2.0 * t
    dw = np.full_like(t, 1e-3)
    segs = segment_arrays(t, delta, dw)
    v = classify_arrays(delta, dw, math.pi - 0.7, segs)
    assert v.outcome is Outcome.UNSTABLE and v.instability_swing_index == 1
    assert v.classification is Classification.FIRST_SWING

    damped = 0.7 + 0.3 * np.exp(-t) * np.cos(2 * np.pi * t)
    ddw = np.gradient(damped, t)
    v = classify_arrays(damped, ddw, math.pi - 0.7, segment_arrays(t, damped, ddw))
    assert v.outcome is Outcome.STABLE and v.instability_swing_index is None


def test_classification_later_swing():
    t = np.linspace(0, 4, 4001)
    delta = 0.7 + 0.4 * np.sin(2 * np.pi * t) + np.where(t > 2.0, 3.0 * (t - 2.0) ** 2, 0.0)
    dw = np.gradient(delta, t)
    segs = segment_arrays(t, delta, dw)
    v = classify_arrays(delta, dw, math.pi - 0.7, segs)
    assert v.outcome is Outcome.UNSTABLE
    assert v.instability_swing_index >= 2
    assert v.classification is Classification.MULTI_SWING


def test_analyze_conservative_pendulum_closed_form():
    from scipy.special import ellipj
    # delta'' = -w0^2 sin(delta): sin(delta/2) = k sn(w0 t)
    omega_g, t_j, amp = 2 * math.pi * 50, 8.0, 0.8
    w0 = math.sqrt(omega_g * amp / t_j)
    k = math.sin(0.4)
    t = np.arange(0.0, 4.0, 1e-4)
    sn, cn, dn, _ = ellipj(w0 * t, k * k)
    delta = 2 * np.arcsin(k * sn)
    dw = 2 * k * w0 * cn / omega_g
    ref = EnergyReference(0.0, 0.0, 0.0, amp, omega_g, t_j, 0.0)

    class T:
        pass

    tr = T()
    tr.t, tr.delta, tr.d_omega = t, delta, dw
    tr.p_sg = amp * np.sin(delta)
    tr.p_w = np.zeros_like(t)
    tr.v = total_energy(delta, dw, ref)
    tr.mode = np.array(["Normal"] * t.size, dtype=object)
    result = analyze_trace(tr, ref, math.pi)
    assert len(result.cycles) >= 2
    for c in result.cycles:
        assert abs(c.dv_total) < 1e-9
        assert c.dv_w == 0.0 and c.dv_d == 0.0
    assert result.verdict.outcome is Outcome.STABLE
