"""A small stability map and a damping bisection.

The sweep runs independent simulations (in parallel if SWINGLAB_THREADS > 1)
and returns cells in grid order.  Around Case 7 every cell stays stable at
the SG's own damping; to show the bisection we load the SG until it loses
synchronism, then search for the damping that saves it.
"""

from __future__ import annotations

from dataclasses import replace

from swinglab import builtin_case, stabilizing_damping, sweep
from swinglab.scenario_lab import apply_axis, evaluate

smap = sweep(builtin_case(7, 1, t_end=6.0),
             {"sigma": [0.1, 0.2, 0.3], "recovery_rate": [0.2, 0.4, 0.6]})
for cell in smap.cells:
    p = dict(cell.params)
    print(f"sigma {p['sigma']:.1f} rate {p['recovery_rate']:.1f}: {cell.outcome:8s} "
          f"max V {cell.max_v:.3f}")

heavy = apply_axis(builtin_case(3, 0, p_ibr_mw=100.0, t_end=5.0), "r_f", 0.0)
heavy = apply_axis(replace(heavy, machine=replace(heavy.machine, p_mw=550.0)), "d", 0.0)
print(f"\nheavily loaded SG without damping: {evaluate(heavy).outcome}")
print(f"stable from D = {stabilizing_damping(heavy, d_high=20.0, tol=0.25):.2f}")
