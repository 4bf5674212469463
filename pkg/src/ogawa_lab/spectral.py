"""Spectrum of the squared derivative operator L = DG* DG for linear fields.

For alpha(x, y) = (h1 x + k1 y, h2 x + k2 y) the quadratic form of L on
Cameron-Martin paths is governed by the 2x2 symmetric matrix A with entries
(h1^2 + h2^2, h1 k1 + h2 k2; ., k1^2 + k2^2).  Diagonalizing A splits L into
two scalar problems whose closed-form eigenvalues are

    lambda_{n,j} = 4 a_j / (pi^2 (1 + 2 n)^2),   n = 0, 1, ...

with eigenfunctions sin((pi/2 + n pi) t) u_j.  The numeric route discretizes
the double-integral action gamma -> a int_0^t int_s^1 gamma(r) dr ds by
composite trapezoidal matrices, symmetrizes, and eigensolves; the square
roots of the eigenvalues are summable-squared but not summable, which is
the trace-class failure the diagnostics expose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fields import LinearField
from .paths import TimeGrid


@dataclass(frozen=True)
class QuadraticFormMatrix:
    """Symmetric PSD matrix of the quadratic form, with its eigensystem.

    ``eigenvalues`` are sorted in decreasing order; ``eigenvectors`` holds
    the matching orthonormal eigenvectors as columns.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "QuadraticFormMatrix":
        a = np.asarray(a, dtype=float)
        vals, vecs = np.linalg.eigh(a)
        vals = np.clip(vals, 0.0, None)[::-1].copy()
        vecs = vecs[:, ::-1].copy()
        for arr in (a, vals, vecs):
            arr.setflags(write=False)
        return cls(a, vals, vecs)


def matrix_A(field: LinearField) -> QuadraticFormMatrix:
    """Quadratic-form matrix of L for a linear field (the Gram of the Jacobian)."""
    h1, k1, h2, k2 = field.h1, field.k1, field.h2, field.k2
    a = np.array(
        [
            [h1**2 + h2**2, h1 * k1 + h2 * k2],
            [h1 * k1 + h2 * k2, k1**2 + k2**2],
        ]
    )
    return QuadraticFormMatrix.from_matrix(a)


@dataclass(frozen=True)
class SpectrumReport:
    """Closed-form and (optionally) numeric spectra of L, indexed (n, j).

    ``closed[n, j]`` is the closed-form eigenvalue for mode n in eigenblock
    j; ``numeric`` carries the matching discretized eigenvalues when the
    numeric route has run, together with the matrix trace of the
    discretization and the top scalar eigenvectors on the grid nodes.
    ``singular_partial_sums[m]`` is sum_{n<=m} sum_j sqrt(closed[n, j]).
    """

    form: QuadraticFormMatrix
    closed: np.ndarray                    # (count, 2)
    singular_partial_sums: np.ndarray     # (count,)
    numeric: np.ndarray | None = None     # (count, 2)
    numeric_trace: float | None = None
    scalar_eigenvectors: np.ndarray | None = None  # (N+1, count)
    grid: TimeGrid | None = None

    @property
    def count(self) -> int:
        return self.closed.shape[0]

    def relative_errors(self) -> np.ndarray:
        """|numeric - closed| / closed, entrywise; NaN where closed is 0."""
        if self.numeric is None:
            raise ValueError("numeric spectrum has not been computed")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(
                self.closed > 0.0,
                np.abs(self.numeric - self.closed) / self.closed,
                np.nan,
            )


def closed_form_eigenvalue(a_j: float, n: int) -> float:
    return 4.0 * a_j / (math.pi**2 * (1 + 2 * n) ** 2)


def eigenfunction_values(
    t: np.ndarray, n: int, j: int, form: QuadraticFormMatrix
) -> np.ndarray:
    """Closed-form eigenfunction sin((pi/2 + n pi) t) u_j on given times, (m, 2)."""
    shape = np.sin((math.pi / 2 + n * math.pi) * np.asarray(t, dtype=float))
    return shape[:, None] * form.eigenvectors[:, j][None, :]


def closed_form_spectrum(form: QuadraticFormMatrix, count: int) -> SpectrumReport:
    """Closed-form eigenvalues lambda_{n,j} for n = 0..count-1."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    modes = np.arange(count)
    denom = math.pi**2 * (1 + 2 * modes) ** 2
    closed = 4.0 * form.eigenvalues[None, :] / denom[:, None]
    singular = np.cumsum(np.sqrt(closed).sum(axis=1))
    return SpectrumReport(form=form, closed=closed, singular_partial_sums=singular)


def _cumtrapz_matrix(grid: TimeGrid) -> np.ndarray:
    """Matrix of the cumulative trapezoid map: row k integrates up to t_k."""
    n = grid.num_steps
    dt = grid.dt
    mat = np.tril(np.full((n + 1, n + 1), dt), k=-1)
    mat[:, 0] *= 0.5
    idx = np.arange(1, n + 1)
    mat[idx, idx] = 0.5 * dt
    mat[0, 0] = 0.0
    return mat


def discretized_operator(grid: TimeGrid) -> np.ndarray:
    """Symmetrized discretization of gamma -> int_0^t int_s^1 gamma(r) dr ds.

    Composite trapezoidal double integration (the inner integral from s to 1
    is total minus cumulative), then (M + M^T) / 2: the continuous operator
    is self-adjoint, so any asymmetry is pure discretization error.
    """
    ct = _cumtrapz_matrix(grid)
    weights = np.full(grid.num_steps + 1, grid.dt)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    crev = weights[None, :] - ct
    m = ct @ crev
    return 0.5 * (m + m.T)


def discretized_L_spectrum(
    field: LinearField, grid: TimeGrid, count: int
) -> SpectrumReport:
    """Top eigenvalues of the discretized L next to the closed forms.

    The 2x2 block structure is handled by diagonalizing A first and scaling
    one scalar eigenproblem by each a_j.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count > grid.num_steps:
        raise ValueError(
            f"count {count} exceeds the rank of a grid with {grid.num_steps} cells"
        )
    form = matrix_A(field)
    report = closed_form_spectrum(form, count)
    msym = discretized_operator(grid)
    trace_scalar = float(np.trace(msym))
    dim = msym.shape[0]
    vals, vecs = scipy.linalg.eigh(
        msym, subset_by_index=[dim - count, dim - 1], driver="evr"
    )
    vals = vals[::-1].copy()       # descending
    vecs = vecs[:, ::-1].copy()
    numeric = form.eigenvalues[None, :] * vals[:, None]
    return SpectrumReport(
        form=form,
        closed=report.closed,
        singular_partial_sums=report.singular_partial_sums,
        numeric=numeric,
        numeric_trace=float(form.eigenvalues.sum() * trace_scalar),
        scalar_eigenvectors=vecs,
        grid=grid,
    )


def trace_class_diagnostic(form: QuadraticFormMatrix, n_terms: int) -> np.ndarray:
    """Partial sums S_m = sum_{n<m} sum_j sqrt(lambda_{n,j}), m = 1..n_terms.

    Each term is 2 (sqrt(a_1) + sqrt(a_2)) / (pi (1 + 2n)), a harmonic-type
    tail: the sums grow without bound whenever A is nonzero, while the
    eigenvalues themselves stay summable.
    """
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    modes = np.arange(n_terms)
    root_sum = np.sqrt(form.eigenvalues).sum()
    terms = 2.0 * root_sum / (math.pi * (1 + 2 * modes))
    return np.cumsum(terms)


def eigenvalue_partial_sums(form: QuadraticFormMatrix, n_terms: int) -> np.ndarray:
    """Partial sums of the eigenvalues themselves (the convergent contrast)."""
    modes = np.arange(n_terms)
    denom = math.pi**2 * (1 + 2 * modes) ** 2
    terms = 4.0 * form.eigenvalues.sum() / denom
    return np.cumsum(terms)
