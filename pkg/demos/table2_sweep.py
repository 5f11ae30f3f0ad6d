"""All Table-II weight cases and the W_d pole sweep on the reference plant.

The numbers depend on the plant parameters; change them through a plant
file with the CLI (``icovsynth sweep --plant my_plant.json``).

Run: python demos/table2_sweep.py
"""

import numpy as np

from icovsynth.experiments import run_minratio, run_sweep
from icovsynth.plants import GridFormingParams
from icovsynth.weights import table2_cases

p = GridFormingParams()
print(f"{'case':>5} {'gamma':>8} {'omega_i':>10} {'omega_v':>10} {'ratio':>9}  works")
for ev in run_sweep(p, table2_cases(p.frequencies())):
    r = ev.row
    print(f"{r.case_id:>5} {r.gamma:8.4g} {r.omega_i:10.4g} {r.omega_v:10.4g} {r.ratio:9.3g}  {r.works}")

rep = run_minratio(p, np.logspace(-4, np.log10(3147.0), 9), run_simulation=False)
print("\nW_d pole sweep (base case III):")
for pt in rep.points:
    print(f"  pole {pt.pole:10.4g} rad/s  gamma {pt.row.gamma:7.4g}  ratio {pt.row.ratio:9.3g}  works {pt.row.works}")
print(f"working region contiguous: {rep.contiguous}")
print(f"smallest working ratio {rep.min_stable_ratio:.3g} at pole {rep.min_stable_pole:.3g} rad/s")
