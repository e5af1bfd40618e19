"""Slow active-current recovery after clearing.

With a finite ramp the IBR coupling power stays below its steady value
through the first decelerating swing.  That shows up as a negative mean
power deviation on the swing (mvt) and as a deeper back-swing.
"""

from __future__ import annotations

from swinglab import analyze_trace, builtin_case, run_simulation

for number in (6, 7):
    print(f"case {number}")
    for variant in (0, 1):
        scenario = builtin_case(number, variant)
        tr = run_simulation(scenario)
        result = analyze_trace(tr, tr.energy_ref, tr.equilibrium.delta_uep)
        cyc = next(c for c in result.cycles if c.t_a >= 0.7)
        rate = scenario.ibr.recovery_rate
        print(f"  rate {rate:>5.3g} pu/s (system base): back-swing to {cyc.delta_b:.3f} rad, "
              f"mvt {cyc.mvt_1:+.4f} / {cyc.mvt_2:+.4f}, dV_w {cyc.dv_w:+.4f}, "
              f"dV_D {cyc.dv_d:.4f}")
