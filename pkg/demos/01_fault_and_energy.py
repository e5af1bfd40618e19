"""Run one study case and read its transient-energy ledger.

A bolted fault hits one grid circuit at 0.5 s and is cleared at 0.7 s.
During the dip the IBR switches to LVRT: reactive current up, active
current held at sigma.  With sigma = 0.5 (IBR rating) the SG speeds up in
its first swing; we then walk through the swings and the per-cycle energy
balance dV = dV_w - dV_D.
"""

from __future__ import annotations

from swinglab import analyze_trace, builtin_case, run_simulation

trace = run_simulation(builtin_case(1, 0))
eq, ref = trace.equilibrium, trace.energy_ref
print(f"SEP {eq.delta_s:.4f} rad, UEP {eq.delta_uep:.4f} rad, V_crit {eq.v_crit:.4f} pu")
print("events:", ", ".join(f"{name}@{t:.3f}s" for t, name in trace.events))

result = analyze_trace(trace, ref, eq.delta_uep)
print(f"\nverdict: {result.verdict.outcome.value}")
print("\nfirst swings")
for s in result.swings[:5]:
    print(f"  #{s.index} {s.direction.value:16s} {s.t_start:6.3f}-{s.t_end:6.3f} s "
          f"extreme {s.delta_extreme:.4f} rad, V at end {s.v_at_end:.2e}")

print("\ncycle ledger (IBR injection minus damping)")
for c in result.cycles[:3]:
    print(f"  cycle {c.cycle_index}: dV {c.dv_total:+.2e} = dV_w {c.dv_w:+.2e} - dV_D {c.dv_d:.2e}"
          f"  (residual {c.ledger_residual:.1e})")
