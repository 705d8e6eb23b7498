"""Phase transition of the constrained LASSO in the measurement count.

Estimating a structured x0 from y = A x0 + sigma*v with the norm-ball
constraint f(x) <= f(x0), the projected error eta = ||A(x*-x0)||^2/sigma^2
and the normalized cost F = ||y - A x*||^2/sigma^2 split the noise energy:
eta + F = m. Below the cone MSD of the structure, eta = m and the cost
vanishes (no noise robustness); above it, eta flattens at the cone MSD and
the full error E becomes finite and shrinks with m.

Run: python demos/03_lasso_phase_transition.py   (about a minute)
"""

from proxmse import geometry, lasso, signals

SEED = 7
inst = signals.make_sparse(120, 6, "unit", seed=SEED)
n = inst.ambient_dim

cone = geometry.msd_cone(inst.structure, geometry.McConfig(samples=30_000, seed=SEED))
print(f"sparse n={n}, k=6; cone MSD = {cone.mean:.1f} -> transition near m = {cone.mean:.0f}\n")

m_grid = [10, 20, 30, 40, 60, 80, 100, 120]
records = lasso.sweep_measurements(
    inst, m_grid, trials=30, matrix_kind="unitary", seed=SEED,
    d_reference=cone.mean,
)

print(f"{'m':>4} {'eta':>8} {'predicted':>10} {'F':>8} {'eta+F':>8} {'E':>10}")
for rec in records:
    print(f"{rec.m:>4} {rec.eta_mean:8.2f} {rec.predicted_eta:10.2f} "
          f"{rec.f_mean:8.2f} {rec.eta_mean + rec.f_mean:8.2f} {rec.e_mean:10.2f}")

print("\neta follows min(m, cone MSD); eta + F tracks m; at m = n the full")
print("unitary operator preserves norms, so E equals eta there.")
