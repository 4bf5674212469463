"""Wiener paths and their basis expansions.

Samples a planar Brownian path from a reproducible stream, expands it in the
Haar system, and watches the partial-sum paths converge uniformly.  Also
evaluates the regularity diagnostic sup_n ||u_n|| that separates well-behaved
families from pathological ones.
"""

import numpy as np

from ogawa_lab import (
    RngSpec,
    TimeGrid,
    approximate_wiener,
    component_trig_basis,
    dump_path_csv,
    haar_basis,
    project_coefficients,
    regularity_diagnostic,
    sample_brownian,
)

grid = TimeGrid(2**10)
rng = RngSpec(master_seed=2718)

# One path per stream index: regenerating index 3 always gives these values.
path = sample_brownian(grid, dim=2, rng=rng, path_index=3)
print("omega(1) =", path.values[-1])

dump_path_csv(path, "demo_path.csv")
print("wrote demo_path.csv (header t,w1,w2)")

# --- Ito-Nisio partial sums -------------------------------------------------
# W_n(t) = sum_{i<=n} e_i(t) * n_{e_i}(omega) converges uniformly to omega.
fam = haar_basis(2)
print("\nsup_t |W_n - omega| for the Haar family:")
for n in (4, 16, 64, 256):
    approx = approximate_wiener(path, fam, n)
    sup_err = np.abs(approx.values - path.values).max()
    print(f"  n = {n:3d}   sup error = {sup_err:.4f}")

# The first few expansion coefficients are the Paley-Wiener integrals.
coeffs = project_coefficients(path, fam, 6)
print("\nfirst Haar coefficients:", np.round(coeffs, 4))

# --- regularity diagnostic ----------------------------------------------------
# u_n(t) = sum_{i<=n} phi_i(t) . e_i(t); bounded L2 norms mark a regular family.
for name, family in (("haar", haar_basis(1)), ("trig", component_trig_basis(1))):
    norms = regularity_diagnostic(family, 64, grid)
    print(f"\n||u_n|| for {name}: first 4 = {np.round(norms[:4], 4)}, "
          f"max over 64 = {norms.max():.4f}")
