"""How the active current kept during LVRT (sigma) steers the first swing.

Case 1 (SG accelerating during the fault): keeping more active current
raises the energy the rotor carries out of the fault.  Case 2 (SG
decelerating): keeping less active current does the same on the other
side.  Either way a sigma that mismatches the fault-on power balance acts as
negative damping.
"""

from __future__ import annotations

import numpy as np

from swinglab import builtin_case, run_simulation
from swinglab.scenario_lab import CASES

for number in (1, 2):
    row = CASES[number]
    print(f"case {number}: IBR {row.ibr_mw:g} MW, SG {row.sg_mw:g} MW")
    for variant, sigma in enumerate(row.sigmas):
        tr = run_simulation(builtin_case(number, variant))
        k = int(np.argmin(np.abs(tr.t - 0.7)))
        during = tr.d_omega[(tr.t > 0.5) & (tr.t < 0.7)]
        sign = "accelerating" if during.mean() > 0 else "decelerating"
        print(f"  sigma {sigma:>3}: {sign}, V at clearing {tr.v[k]:.4f} pu, "
              f"post-fault angle range {tr.delta[tr.t > 0.7].min():.3f}.."
              f"{tr.delta[tr.t > 0.7].max():.3f} rad")
