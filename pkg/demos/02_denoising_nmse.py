"""Denoising NMSE across noise levels for three estimators.

The normalized MSE of proximal denoising is worst in the small-noise limit,
where it equals a Gaussian squared-distance: to the scaled subdifferential
for the regularized estimator, to the subgradient cone for the constrained
one. The mixed estimator (nonnegativity constraint plus l1 penalty) is
upper-bounded by the distance to a Minkowski sum, estimated alongside.

Run: python demos/02_denoising_nmse.py
"""

import numpy as np

from proxmse import denoise, geometry, signals

SEED = 3
inst = signals.make_sparse(200, 10, "uniform", seed=SEED)
grid = denoise.default_sigma_grid(inst)
mc = geometry.McConfig(samples=50_000, seed=SEED)

print("regularized estimator, lam = 2.0 (sparse n=200, k=10)")
ref = geometry.msd_lambda_exact_l1(200, 10, 2.0)
run = denoise.run_regularized(inst, 2.0, grid, trials=400, seed=SEED)
print(f"  exact worst-case NMSE: {ref:.2f}")
for rec in run.records:
    bar = "#" * int(rec.nmse_mean / ref * 40)
    print(f"  sigma={rec.sigma:9.5f}  NMSE={rec.nmse_mean:7.2f} (+-{rec.nmse_stderr:.2f}) {bar}")
print("  NMSE approaches the distance value as sigma shrinks and decays for large sigma.\n")

print("constrained estimator (projection onto the l1 ball of radius ||x0||_1)")
cone = geometry.msd_cone(inst.structure, mc)
run = denoise.run_constrained(inst, grid, trials=400, seed=SEED)
print(f"  cone MSD: {cone.mean:.2f} (+-{cone.stderr:.2f})")
for rec in run.records[:3]:
    print(f"  sigma={rec.sigma:9.5f}  NMSE={rec.nmse_mean:7.2f} (+-{rec.nmse_stderr:.2f})")
print()

print("mixed estimator (x >= 0 constraint + l1 penalty, lam = 1.5)")
pos = signals.nonnegative(inst)
run = denoise.run_mixed_nonneg_sparse(pos, 1.5, grid, trials=400, seed=SEED)
for rec in run.records:
    print(f"  sigma={rec.sigma:9.5f}  NMSE={rec.nmse_mean:7.2f}  <=  "
          f"distance estimate {rec.d_mean:7.2f} (+-{rec.d_stderr:.2f})")
print("  The NMSE sits below the Minkowski-sum distance estimate at every sigma.")
