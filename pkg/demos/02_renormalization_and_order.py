"""The renormalization trace term and its enumeration-order dependence.

For a linear planar field the diagonal entries <phi_i, T phi_i> have closed
forms: componentwise trig elements contribute only through the two constants
(half the divergence), while the coordinate-coupling family contributes
+-curl/(4 pi n) per frequency.  Those entries are absolutely divergent, so
reordering them moves the partial traces: front-loading the positive slots
for frequencies 1..K adds the harmonic number H_K / (2 pi).
"""

import math

import numpy as np

from ogawa_lab import (
    LinearField,
    SamplePath,
    TimeGrid,
    adversarial,
    component_trig_basis,
    diagonal_entries,
    mixed_trig_basis,
    piecewise_linear_basis,
)

grid = TimeGrid(2**12)
field = LinearField(0.25, 0.25, 1.25, 0.75)   # divergence 1, curl 1
probe = SamplePath.zero(grid, 2)              # entries ignore the path here

print(f"divergence/2 = {field.divergence_value / 2}, curl = {field.curl_value}")

# --- componentwise trig family: only the constants matter --------------------
psi = component_trig_basis(2)
entries = diagonal_entries(field, probe, psi, 10)
print("\npsi entries:", np.round(entries, 12))

# --- coupled family: curl shows up at every frequency -------------------------
xi = mixed_trig_basis()
entries = diagonal_entries(field, probe, xi, 10)
print("xi entries: ", np.round(entries, 6))
print("closed form at frequency 1: +-", field.curl_value / (4 * math.pi))

# --- order dependence ----------------------------------------------------------
K = 100
n_show = 2 + 2 * K
balanced = np.cumsum(diagonal_entries(field, probe, xi, n_show))
front = np.cumsum(diagonal_entries(field, probe, xi, n_show, adversarial(K)))
h_k = sum(1.0 / m for m in range(1, K + 1))
print(f"\nbalanced trace at prefix {n_show}:     {balanced[-1]:.6f}")
print(f"front-loaded trace at prefix {n_show}: {front[-1]:.6f}")
print(f"predicted excess H_{K}/(2 pi):        {h_k / (2 * math.pi):.6f}")

# --- piecewise-linear projectors: every level gives divergence/2 ---------------
print("\nramp-family traces:")
for level in (1, 4, 16, 64):
    fam = piecewise_linear_basis(level, 2)
    trace = diagonal_entries(field, probe, fam, 2 * level).sum()
    print(f"  level {level:3d}: trace = {trace:.15f}")
