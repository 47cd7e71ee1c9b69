"""Compressed-sparse-row storage, a restarted GMRES solver, and a dense
direct fallback used as the oracle in tests.

GMRES uses classical Gram-Schmidt with one reorthogonalization pass and
Givens rotations on the Hessenberg column; left Jacobi preconditioning is
on by default because the coupled phase-field system carries strongly
varying row scales. Convergence is always declared on the true
(unpreconditioned) residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import DomainError, SolverError


class SparseMatrix:
    """Square CSR matrix: sorted column indices, no duplicates."""

    def __init__(self, n, indptr, indices, data):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.indptr.shape != (self.n + 1,):
            raise DomainError("indptr must have length n + 1")
        if self.indices.shape != self.data.shape:
            raise DomainError("indices and data must have equal length")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.n):
            raise DomainError("column index out of range")

    @classmethod
    def from_coo(cls, n, rows, cols, values):
        """Build from triplets, summing duplicates and sorting rows."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if np.any(rows < 0) or np.any(rows >= n) or np.any(cols < 0) or np.any(cols >= n):
            raise DomainError("triplet index out of range")
        keys = rows * n + cols
        uniq, inverse = np.unique(keys, return_inverse=True)
        data = np.zeros(uniq.size)
        np.add.at(data, inverse, values)
        urows = uniq // n
        ucols = uniq % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, urows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n, indptr, ucols, data)

    @property
    def nnz(self):
        return self.data.size

    def matvec(self, x):
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DomainError(f"matvec expects a vector of length {self.n}")
        return backend.csr_matvec(self.indptr, self.indices, self.data, x)

    def diagonal(self):
        diag = np.zeros(self.n)
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        on_diag = self.indices == rows
        diag[rows[on_diag]] = self.data[on_diag]
        return diag

    def to_dense(self):
        dense = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        dense[rows, self.indices] = self.data
        return dense


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


def matvec(A, x):
    """y = A x."""
    return A.matvec(x)


def dense_solve(A_dense, b):
    """LU with partial pivoting; the oracle route for small systems."""
    A_dense = np.asarray(A_dense, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    if A_dense.shape != (n, n):
        raise DomainError("dense_solve requires a square matrix matching b")
    if n > 4096:
        raise DomainError("dense_solve is limited to n <= 4096")
    try:
        return np.linalg.solve(A_dense, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense solve failed: {exc}") from exc


def _as_apply(A):
    if callable(A):
        return A
    return A.matvec


def gmres(A, b, tol=1e-10, restart=50, maxiter=2000, x0=None, jacobi=True,
          weighted_norm=False, precond=None):
    """Restarted GMRES. Returns (x, SolveReport).

    ``A`` is a SparseMatrix (or any object with ``matvec``; a bare callable
    also works, skipping Jacobi preconditioning). A custom left
    preconditioner may be passed as a callable ``precond``; otherwise the
    Jacobi diagonal is used where available. Convergence is declared on
    the true residual ||b - Ax|| <= tol ||b|| by default; with
    ``weighted_norm=True`` the residual is measured in the preconditioned
    norm ||M^-1 (b - Ax)|| <= tol ||M^-1 b||, which is the attainable
    criterion when the row scales of A span many orders of magnitude.
    Never raises on stagnation: the best iterate is returned with
    ``converged=False`` and callers decide.
    """
    apply_A = _as_apply(A)
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros(n), SolveReport(iterations=0, residual=0.0, converged=True)

    if precond is None:
        inv_diag = None
        if jacobi and hasattr(A, "diagonal"):
            diag = A.diagonal()
            if not np.any(diag == 0):
                inv_diag = 1.0 / diag
        if inv_diag is not None:
            def precond(vec, inv_diag=inv_diag):
                return inv_diag * vec
        else:
            def precond(vec):
                return vec
            if weighted_norm:
                weighted_norm = False

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    history = []
    total_iters = 0
    restart = max(1, min(restart, n))

    pb_norm = float(np.linalg.norm(precond(b)))
    if pb_norm == 0.0:
        pb_norm = norm_b

    def measure(xv):
        r = b - apply_A(xv)
        if weighted_norm:
            return float(np.linalg.norm(precond(r))) / pb_norm
        return float(np.linalg.norm(r)) / norm_b

    prev_cycle_res = math.inf
    while total_iters < maxiter:
        r = precond(b - apply_A(x))
        beta = float(np.linalg.norm(r))
        if beta == 0.0:
            break
        V = np.empty((restart + 1, n))
        Hcol = np.zeros((restart + 1, restart))
        cs = np.zeros(restart)
        sn = np.zeros(restart)
        g = np.zeros(restart + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        breakdown = False
        for j in range(restart):
            if total_iters >= maxiter:
                break
            w = precond(apply_A(V[j]))
            # classical Gram-Schmidt with one reorthogonalization pass
            h1 = V[: j + 1] @ w
            w -= V[: j + 1].T @ h1
            h2 = V[: j + 1] @ w
            w -= V[: j + 1].T @ h2
            h = h1 + h2
            hj1 = float(np.linalg.norm(w))
            Hcol[: j + 1, j] = h
            Hcol[j + 1, j] = hj1
            for i in range(j):
                tmp = cs[i] * Hcol[i, j] + sn[i] * Hcol[i + 1, j]
                Hcol[i + 1, j] = -sn[i] * Hcol[i, j] + cs[i] * Hcol[i + 1, j]
                Hcol[i, j] = tmp
            denom = float(np.hypot(Hcol[j, j], Hcol[j + 1, j]))
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j] = Hcol[j, j] / denom
                sn[j] = Hcol[j + 1, j] / denom
            Hcol[j, j] = cs[j] * Hcol[j, j] + sn[j] * Hcol[j + 1, j]
            Hcol[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total_iters += 1
            k = j + 1
            history.append(abs(g[j + 1]) / pb_norm)
            if hj1 == 0.0:
                breakdown = True
                break
            V[j + 1] = w / hj1
            if abs(g[j + 1]) <= tol * pb_norm:
                break
        if k > 0:
            y = np.linalg.solve(np.triu(Hcol[:k, :k]), g[:k]) if k > 1 else g[:1] / Hcol[0, 0]
            x = x + V[:k].T @ y
        cycle_res = measure(x)
        stalled = cycle_res >= 0.999 * prev_cycle_res
        prev_cycle_res = min(prev_cycle_res, cycle_res)
        if cycle_res <= tol or breakdown or stalled:
            return x, SolveReport(iterations=total_iters, residual=cycle_res,
                                  converged=cycle_res <= tol, history=history)

    final_res = measure(x)
    return x, SolveReport(iterations=total_iters, residual=final_res,
                          converged=final_res <= tol, history=history)
