"""
Galerkin convergence study on the layer-adapted mesh.

The test problem -eps u'' - x(1+x^2) u' + lam(1+x^3) u = f has an interior
cusp at x = 0 whose strength is set by lam; the exact solution is known in
closed form, so the energy-norm error can be measured directly.  On the
adapted mesh the error decays like (N/(K+1))^-k uniformly in eps.
"""

from cuspfem import SweepConfig, convergence_table, emit, run_convergence

config = SweepConfig(
    lam=0.005,
    eps_list=(1e-10,),
    n_list=(64, 128, 256, 512),
    k_list=(1, 2, 3),
)
rows = run_convergence(config)

print("energy error and observed rate, eps = 1e-10, lam = 0.005\n")
print(f"{'k':>2} {'N':>5} {'energy':>12} {'rate':>6}")
for r in rows:
    rate = f"{r.energy_rate:.3f}" if r.energy_rate is not None else "-"
    print(f"{r.order:>2} {r.n_half:>5} {r.energy:>12.4e} {rate:>6}")

# The same data as a markdown table (what the CLI's --format markdown emits).
print("\n" + emit(convergence_table(rows), "markdown"))
