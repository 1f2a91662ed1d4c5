"""From the multiplicative heat equation to height paths, and the drift
identity that connects them.

The positive solution Z of  dZ = Lap Z dt + Z dW^n  is mapped to a height
path H = log Z.  On the lattice, H satisfies

    H_t = f + int_0^t [Lap H + (grad H)^2] ds + W^n_t - (C/2) n t

up to a residual that shrinks as dt is refined *with the same noise*: the
finer run uses the same Brownian sheet, aggregated into coarser increments
for the coarse run.

Run:  python demos/demo_cole_hopf_and_residuals.py
"""

from kpz_renorm import (
    cole_hopf,
    coarsen_in_time,
    initial_profile,
    ito_residual,
    make_grid,
    make_mollifier,
    make_test_function,
    mollify_noise,
    sample_white_noise,
    solve_she,
)

L, M, n = 1.0, 256, 8
dt0, K0 = 2e-3, 125
fine_grid = make_grid(L, M, dt0 / 2, 2 * K0)
fine_noise = sample_white_noise(fine_grid, seed=42, replica_id=0)

print("pathwise residual of the log heat path, coarse dt vs halved dt")
print("(same noise realization, coupled by aggregation):\n")

for label, grid, noise in [
    ("coarse", make_grid(L, M, dt0, K0), coarsen_in_time(fine_noise, 2)),
    ("fine  ", fine_grid, fine_noise),
]:
    f = initial_profile(grid, "harmonics", amplitudes=(1.5, 0.75),
                        modes=(1, 2), phases=(0.7, 1.9))
    moll = make_mollifier(grid, n)
    mn = mollify_noise(noise, moll)
    H = cole_hopf(solve_she(grid, mn, None, f))
    battery = [
        make_test_function(grid, 0.40 * grid.T, 0.20 * grid.T, 0.47, 0.20, label="wide"),
        make_test_function(grid, 0.24 * grid.T, 0.16 * grid.T, 0.58, 0.15, label="narrow"),
    ]
    report = ito_residual(H, mn, None, f, battery)
    weak = "  ".join(f"<R,{lab}> = {val:+.3e}" for lab, val in report.weak_norms)
    print(f"  {label} dt={grid.dt:g}:  sup|R| = {report.sup_norm:.3e}   {weak}")

print("""
The sup norm carries the per-point noise-quadrature fluctuation and shrinks
slowly; the weak pairings against zero-mean test functions cancel the
x-independent bookkeeping exactly and refine visibly (the `ito` experiment
quantifies this over replicas: kpz-renorm ito).""")
