"""Case IV end to end: synthesis, cascade reading, bandwidths and the Table-I run.

Run: python demos/grid_forming_case_iv.py
"""

import math

import numpy as np

from icovsynth.experiments import evaluate_case
from icovsynth.lti import freq_response
from icovsynth.plants import GridFormingParams
from icovsynth.sim import OMEGA_FUNDAMENTAL, phasor, settling_time
from icovsynth.weights import table2_cases

p = GridFormingParams()
print(f"plant: omega_LC {p.omega_LC:.0f} rad/s, omega_res {p.omega_res:.0f} rad/s")
case = next(c for c in table2_cases(p.frequencies()) if c.case_id == "IV")
ev = evaluate_case(p, case)
res, d, r = ev.result, ev.decomposition, ev.row

print(f"gamma {res.gamma:.4g}, certified norm {res.achieved_norm:.4g}, controller order {res.K.n_states}")
print("regularization:", res.regularization)

w = np.logspace(0, 5, 6)
for name, g in (("K1 (v error)", d.K1), ("K2 (i)", d.K2), ("K3 (i_inv)", d.K3)):
    print(f"{name:>13}: " + "  ".join(f"{abs(x):.3g}" for x in freq_response(g, w).values[:, 0, 0]))
print(f"bandwidths: inner {r.omega_i:.4g} rad/s, outer {r.omega_v:.4g} rad/s, ratio {r.ratio:.3g}")
print(f"eigenvalue verdict stable={r.eig_stable}, simulation {r.sim_verdict}")

tr = ev.trace
cycle = 2 * math.pi / OMEGA_FUNDAMENTAL
print(f"150 -> 180 V step settles in {settling_time(tr, 0.1, 0.2, 0.02 * 180) / cycle:.2f} cycles (2 % band)")
m = tr.window(0.2, 0.5)
print(f"largest voltage error after the 5 A injection: {np.max(np.abs(tr['v_star'] - tr['v'])[m]):.3g} V")
i0 = abs(phasor(tr, "i", OMEGA_FUNDAMENTAL, 0.2 - 4 * cycle, 0.2))
i1 = abs(phasor(tr, "i", OMEGA_FUNDAMENTAL, 0.5 - 4 * cycle, 0.5))
print(f"grid-side current amplitude {i0:.3f} A -> {i1:.3f} A")
