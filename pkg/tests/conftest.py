from __future__ import annotations

import cmath

import numpy as np
import pytest

from swinglab.scenario_lab import table_network


@pytest.fixture
def raw():
    return table_network()


def nodal_pcc_voltage(raw, r_f_ohm, lam, e_s, i_w):
    """PCC voltage from the full nodal matrix with the fault node kept.

    Nodes: PCC (p) and fault point (f); the SG EMF and the grid source are
    fixed-voltage nodes.  A bolted fault pins the fault node to ground.
    """
    half = raw.y_g / 2.0
    y_pf = half / lam
    y_fg = half / (1.0 - lam)
    if r_f_ohm == 0.0:
        y_pp = raw.y_s + half + y_pf
        return (e_s * raw.y_s + raw.u_g * half + i_w) / y_pp
    y_f = raw.z_base_ohm / r_f_ohm
    y = np.array([[raw.y_s + half + y_pf, -y_pf],
                  [-y_pf, y_pf + y_fg + y_f]], dtype=complex)
    rhs = np.array([e_s * raw.y_s + raw.u_g * half + i_w, raw.u_g * y_fg], dtype=complex)
    return complex(np.linalg.solve(y, rhs)[0])


@pytest.fixture
def nodal_oracle():
    return nodal_pcc_voltage


def rect(mag, ang):
    return cmath.rect(mag, ang)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines.append((number, line))
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
