"""The quotient by x-independent paths, and association across levels.

Pairings against test functions that are exact spatial derivatives (zero
lattice mean) annihilate any path that is constant in x, to machine
precision.  That is the mechanism by which the diverging drift -(C/2) n t
is discarded: it never registers in any pairing.

On top of the quotient sits the association trend: the log heat paths at
levels n = 4..32, all driven by one noise realization, approach the
raw-lattice log heat path in every pairing.

Run:  python demos/demo_quotient_and_association.py
"""

import numpy as np

from kpz_renorm import (
    FieldPath,
    SequenceField,
    associated,
    cole_hopf,
    initial_profile,
    ito_constant,
    make_grid,
    make_mollifier,
    make_test_function,
    mollify_noise_multi,
    quotient_check,
    sample_white_noise,
    solve_she,
)

grid = make_grid(1.0, 256, 1e-4, 2500)
levels = (4, 8, 16, 32)
battery = [
    make_test_function(grid, 0.40 * grid.T, 0.20 * grid.T, 0.47, 0.20, label="tf0"),
    make_test_function(grid, 0.00, 0.48 * grid.T, 0.31, 0.15, label="tf1"),
    make_test_function(grid, 0.24 * grid.T, 0.16 * grid.T, 0.58, 0.15, label="tf2"),
]

# -- the ideal of x-independent paths pairs to zero exactly ----------------
C = ito_constant()
counterterms = SequenceField(
    levels,
    tuple(FieldPath(np.repeat((-(0.5 * C * n) * grid.t)[:, None], grid.M, axis=1), grid)
          for n in levels),
    label="-(C/2) n t")
report = quotient_check(counterterms, battery)
print(f"drift correction paths vs battery: max |pairing| = {report.max_abs_pairing:.3e} "
      f"(threshold 1e-12, passed={report.passed})")

# -- association of the mollified log heat paths with the lattice one ------
noise = sample_white_noise(grid, seed=300, replica_id=0)
f = initial_profile(grid, "harmonics", amplitudes=(1.5, 0.75), modes=(1, 2), phases=(0.7, 1.9))
molls = tuple(make_mollifier(grid, n) for n in levels)
paths = tuple(cole_hopf(solve_she(grid, mn, None, f))
              for mn in mollify_noise_multi(noise, molls))
seq = SequenceField(levels, paths, "log heat", seed=noise.seed, replica_id=0)
reference = cole_hopf(solve_she(grid, noise, None, f))

rep = associated(seq, reference, battery)
print(f"\nassociation with the lattice path: verdict = {rep.verdict}")
for t in rep.trends:
    es = "  ".join(f"{v:+.2e}" for v in t.values)
    print(f"  {t.label}: e_n = [{es}]  ratio={t.ratio:.3f}  slope={t.slope:+.2f}  -> {t.verdict}")

print("\n(JSON form, as the reports serialize it)")
import json
print(json.dumps(rep.to_dict()["test_functions"][0], indent=2)[:400], "...")
