from __future__ import annotations

import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swinglab.errors import DegenerateFault, DegenerateNetwork, NoConvergence
from swinglab.network import (
    FaultSpec,
    PostFaultTopology,
    RawNetworkParams,
    ReducedNetwork,
    electrical_power,
    faulted_equivalent,
    post_fault_network,
    reduce_network,
    solve_interface,
    solve_pcc_voltage,
    tripped_network,
)


def test_table_reduction(raw):
    net = reduce_network(raw)
    # hand arithmetic: 2.18 / 3.26 and 2.18 * 1.08 / 3.26
    assert abs(net.alpha - 0.6687) < 1e-4
    assert abs(abs(net.y_sg) - 0.7222) < 1e-4


def test_symmetric_and_stiff_limits():
    net = reduce_network(RawNetworkParams(y_s=-1j, y_g=-1j))
    assert net.alpha == pytest.approx(0.5)
    assert net.y_sg == pytest.approx(-0.5j)
    stiff = reduce_network(RawNetworkParams(y_s=-2.18j, y_g=-1e9j))
    # a stiff grid swallows the IBR injection: the coupling factor vanishes
    assert abs(stiff.alpha) < 1e-6
    assert abs(stiff.y_sg - stiff.y_s) < 1e-6


def test_degenerate_network():
    with pytest.raises(DegenerateNetwork):
        RawNetworkParams(y_s=-1j, y_g=1j)
    with pytest.raises(DegenerateNetwork):
        RawNetworkParams(y_s=0j, y_g=-1j)


@pytest.mark.parametrize("r_f", [0.0, 5.0, 25.0])
@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_kron_matches_nodal_oracle(raw, nodal_oracle, r_f, lam):
    net = faulted_equivalent(raw, FaultSpec(r_f_ohm=r_f, lam=lam))
    for e_s, i_w in [(1.1 + 0.3j, 0j), (cmath.rect(1.05, 0.8), 0.65 + 0.0j),
                     (0.9 - 0.2j, cmath.rect(0.7, -0.9))]:
        expected = nodal_oracle(raw, r_f, lam, e_s, i_w)
        assert abs(solve_pcc_voltage(net, e_s, i_w) - expected) < 1e-10


def test_bolted_midline_values(raw):
    net = faulted_equivalent(raw, FaultSpec(r_f_ohm=0.0, lam=0.5))
    # healthy circuit -j0.54 in series with the grid, plus -j1.08 to ground
    assert net.y_g_eff == pytest.approx(-1.62j)
    assert net.u_g_eff == pytest.approx(1.0 / 3.0)


def test_open_fault_is_healthy(raw):
    net = faulted_equivalent(raw, FaultSpec(r_f_ohm=1e15, lam=0.5))
    healthy = reduce_network(raw)
    assert abs(net.y_g_eff - healthy.y_g_eff) < 1e-9
    assert abs(net.u_g_eff - healthy.u_g_eff) < 1e-9


def test_resistance_softens_dip(raw):
    u5 = faulted_equivalent(raw, FaultSpec(r_f_ohm=5.0)).u_g_eff
    u25 = faulted_equivalent(raw, FaultSpec(r_f_ohm=25.0)).u_g_eff
    u0 = faulted_equivalent(raw, FaultSpec(r_f_ohm=0.0)).u_g_eff
    assert abs(u0) < abs(u5) < abs(u25) < abs(raw.u_g)


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_bolted_fault_at_terminal_is_degenerate(raw, lam):
    with pytest.raises(DegenerateFault):
        faulted_equivalent(raw, FaultSpec(r_f_ohm=0.0, lam=lam))


def test_resistive_terminal_faults(raw, nodal_oracle):
    # at lam=0 the fault shunt sits on the PCC itself
    net = faulted_equivalent(raw, FaultSpec(r_f_ohm=5.0, lam=0.0))
    y_f = raw.z_base_ohm / 5.0
    e_s = 1.1 + 0.2j
    expected = (e_s * raw.y_s + raw.u_g * raw.y_g) / (raw.y_s + raw.y_g + y_f)
    assert abs(solve_pcc_voltage(net, e_s, 0j) - expected) < 1e-12


def test_fault_spec_validation():
    with pytest.raises(ValueError):
        FaultSpec(lam=1.5)
    with pytest.raises(ValueError):
        FaultSpec(r_f_ohm=-1.0)
    with pytest.raises(ValueError):
        FaultSpec(t_on=0.7, t_clear=0.5)


def test_post_fault_topology(raw):
    assert post_fault_network(raw, FaultSpec()) == reduce_network(raw)
    tripped = post_fault_network(raw, FaultSpec(post_fault_topology=PostFaultTopology.TRIP_CIRCUIT))
    assert tripped == tripped_network(raw)
    assert tripped.y_g_eff == pytest.approx(raw.y_g / 2)


def test_pcc_voltage_examples(raw):
    net = reduce_network(raw)
    assert solve_pcc_voltage(ReducedNetwork(-1j, -1j, 1 + 0j), 1 + 0j, 0j) == pytest.approx(1.0)
    u = solve_pcc_voltage(net, 1 + 0j, 0.65 + 0j)
    assert abs(u) == pytest.approx(1.0197, abs=1e-4)
    assert cmath.phase(u) == pytest.approx(0.197, abs=1e-3)


@given(st.complex_numbers(max_magnitude=2.0), st.complex_numbers(max_magnitude=2.0),
       st.floats(0.1, 3.0))
def test_pcc_voltage_is_affine_in_injection(e_s, i_w, k):
    net = reduce_network(RawNetworkParams(y_s=-2.18j, y_g=-1.08j))
    base = solve_pcc_voltage(net, e_s, 0j)
    lhs = solve_pcc_voltage(net, e_s, k * i_w) - base
    rhs = k * (solve_pcc_voltage(net, e_s, i_w) - base)
    assert abs(lhs - rhs) < 1e-12


def test_electrical_power_examples(raw):
    net = reduce_network(raw)
    assert electrical_power(0.0, net, 1.0, 0j)[0] == pytest.approx(0.0, abs=1e-15)
    assert electrical_power(math.pi / 2, net, 1.0, 0j)[0] == pytest.approx(0.7222, abs=1e-4)
    p_e, p_sg, p_w = electrical_power(0.0, net, 1.0, 0.65 + 0j)
    assert p_w == pytest.approx(0.4347, abs=1e-4)
    assert p_e == pytest.approx(-0.4347, abs=1e-4)


@settings(max_examples=50)
@given(st.floats(-3.0, 3.0), st.floats(0.5, 1.5), st.floats(0.0, 1.0), st.floats(-math.pi, math.pi))
def test_power_split_matches_branch_power(delta, e_mag, i_mag, i_ang):
    # p_e must equal the real power the SG pushes into its branch
    raw = RawNetworkParams(y_s=-2.18j, y_g=-1.08j)
    net = reduce_network(raw)
    i_w = cmath.rect(i_mag, i_ang)
    e_s = cmath.rect(e_mag, delta)
    u = solve_pcc_voltage(net, e_s, i_w)
    direct = (e_s * ((e_s - u) * raw.y_s).conjugate()).real
    p_e, p_sg, p_w = electrical_power(delta, net, e_mag, i_w)
    assert p_e == pytest.approx(direct, abs=1e-12)
    assert p_sg == pytest.approx(e_mag * abs(net.y_sg) * math.sin(delta), abs=1e-12)


def test_interface_constant_control_is_linear(raw):
    net = reduce_network(raw)
    sol = solve_interface(net, 0.6, 1.1, lambda u, th: (0.4, 0.1))
    i_w = complex(0.4, -0.1) * cmath.rect(1.0, cmath.phase(sol.u_pcc))
    assert abs(sol.u_pcc - solve_pcc_voltage(net, cmath.rect(1.1, 0.6), i_w)) < 1e-10
    s = sol.u_pcc * sol.i_w.conjugate()
    assert s.real == pytest.approx(abs(sol.u_pcc) * 0.4)
    assert s.imag == pytest.approx(abs(sol.u_pcc) * 0.1)


def test_interface_unity_pf(raw):
    net = reduce_network(raw)
    sol = solve_interface(net, 0.7, 1.1, lambda u, th: (0.65 / u, 0.0))
    assert sol.iterations <= 50 and sol.residual < 1e-10
    assert (sol.u_pcc * sol.i_w.conjugate()).real == pytest.approx(0.65, abs=1e-9)


def test_reactive_support_raises_voltage(raw):
    net = faulted_equivalent(raw, FaultSpec())
    k_q, u_enter = 2.0, 0.9

    def droop(u, th):
        return 0.3, min(max(k_q * (u_enter - u), 0.0), 1.0)

    with_q = solve_interface(net, 0.7, 1.12, droop)
    without = solve_interface(net, 0.7, 1.12, lambda u, th: (0.3, 0.0))
    assert with_q.i_q > 0
    assert abs(with_q.u_pcc) > abs(without.u_pcc)


def test_interface_no_convergence(raw):
    net = reduce_network(raw)
    with pytest.raises(NoConvergence) as info:
        # violently voltage-dependent law: the damped map cannot settle
        solve_interface(net, 0.5, 1.0, lambda u, th: (50.0 * u, 0.0), max_iter=20)
    assert info.value.iterations == 20
