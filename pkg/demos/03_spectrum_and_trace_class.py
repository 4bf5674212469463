"""Spectrum of the squared derivative operator and the trace-class failure.

The operator L = DG* DG of a linear field reduces, after diagonalizing a 2x2
quadratic-form matrix, to the integral operator with kernel min(t, s).  Its
eigenvalues fall off like 1/n^2, so L is trace class, but the singular
values of DG itself fall off like 1/n: their partial sums grow without
bound, which is exactly why the renormalization trace is basis-sensitive.
"""

import numpy as np

from ogawa_lab import (
    LinearField,
    TimeGrid,
    discretized_L_spectrum,
    eigenvalue_partial_sums,
    matrix_A,
    trace_class_diagnostic,
)

field = LinearField(1.0, 0.5, -0.5, 2.0)
form = matrix_A(field)
print("quadratic-form matrix A:\n", form.matrix)
print("eigenvalues a_j:", np.round(form.eigenvalues, 6))

# --- closed form vs Nystrom discretization ------------------------------------
report = discretized_L_spectrum(field, TimeGrid(2**10), count=5)
print("\n n  j   closed        numeric       rel err")
rel = report.relative_errors()
for n in range(5):
    for j in range(2):
        print(
            f" {n}  {j + 1}   {report.closed[n, j]:.8f}   "
            f"{report.numeric[n, j]:.8f}   {rel[n, j]:.2e}"
        )
print("matrix trace of discretized L:", f"{report.numeric_trace:.6f}",
      "(= Hilbert-Schmidt norm of DG squared)")

# --- summable eigenvalues, divergent singular values ---------------------------
lam_sums = eigenvalue_partial_sums(form, 10**4)
sv_sums = trace_class_diagnostic(form, 10**4)
print("\npartial sums of eigenvalues (converge to (a1+a2)/2):")
for m in (10, 100, 10**4):
    print(f"  {m:>6d} terms: {lam_sums[m - 1]:.6f}")
print("partial sums of singular values (keep growing ~ log):")
for m in (10, 100, 10**4):
    print(f"  {m:>6d} terms: {sv_sums[m - 1]:.4f}")
