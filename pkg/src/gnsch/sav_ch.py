"""Bound-preserving SAV step for the Cahn-Hilliard part.

One step solves a single sparse linear system in the stacked unknowns
(vbar, mu) - the transformed order parameter before rescaling and the
chemical potential - then applies the global mass-correction factor
lambda, updates the auxiliary energy scalar r in closed form, and rescales
by sigma = 1 - (1 - xi)^2 with xi = r / (E + C0).

All nonlinear coefficients are frozen at time n (or at the fresh density
rho^{n+1}), so the system is exactly linear: no unknown appears in its own
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend, linsolve, mesh, physics
from .errors import BoundsError, DomainError, SolverError, StepSizeError


@dataclass
class SavState:
    """Auxiliary energy scalar and the ratios produced by the last rescale."""

    r: float
    C0: float
    xi: float = 1.0
    sigma: float = 1.0

    @classmethod
    def initial(cls, E0, c_under):
        """r(0) = E(0) + C0 with C0 = 2*c_under + |E(0)|."""
        C0 = 2.0 * c_under + abs(E0)
        return cls(r=E0 + C0, C0=C0)


class StencilOperator:
    """Matrix-free view of the assembled system sharing its coefficients.

    Applies the operator with per-axis neighbor sums combined pairwise,
    which keeps the product (and hence every GMRES iterate) bit-exactly
    equivariant under the x <-> y index swap; the generic CSR summation
    order does not have that property.
    """

    def __init__(self, grid, coefs):
        self.grid = grid
        self.coefs = coefs
        self.n = 2 * grid.ncells

    def matvec(self, x):
        x = np.ascontiguousarray(x, dtype=np.float64)
        return backend.coupled_matvec(self.coefs, x, self.grid.shape)

    def diagonal(self):
        return np.concatenate([self.coefs["v_diag"].ravel(),
                               np.ones(self.grid.ncells)])

    def block_precondition(self):
        """Left preconditioner inverting the per-cell 2x2 diagonal block
        [[v_diag, mu_diag], [lap_diag, 1]].

        The off-diagonal couplings carry the stiff interface scales
        (mobility/h^2 against gamma T'/h^2), so inverting them locally
        keeps the Krylov iteration count bounded as the grid refines where
        a scalar Jacobi sweep does not. Elementwise across cells, hence
        swap-equivariant.
        """
        a = self.coefs["v_diag"].ravel()
        b = self.coefs["mu_diag"].ravel()
        c = self.coefs["lap_diag"].ravel()
        det = a - b * c
        if np.any(det == 0):
            inv_diag = np.concatenate([1.0 / a, np.ones(a.size)])
            return lambda vec: inv_diag * vec
        n = a.size

        def apply(vec):
            rv = vec[:n]
            rm = vec[n:]
            return np.concatenate([(rv - b * rm) / det, (a * rm - c * rv) / det])

        return apply

    def spectral_precondition(self):
        """Left preconditioner inverting the mean-coefficient coupled
        operator mode by mode (1D only).

        The fourth-order coupling's symbol grows like dt/h^4, which leaves
        cell-local preconditioning with hundreds of Krylov iterations on
        fine grids; inverting the constant-coefficient proxy in Fourier
        space collapses that stiffness at O(n log n) per application.
        """
        grid = self.grid
        n = grid.ncells
        h = grid.dx
        modes = np.arange(n // 2 + 1)
        lam = -4.0 / h**2 * np.sin(np.pi * modes / n) ** 2
        a = float(np.mean(self.coefs["v_diag"]))
        m1 = -0.5 * h**2 * float(np.mean(self.coefs["mu_plus0"] + self.coefs["mu_minus0"]))
        g1 = h**2 * float(np.mean(self.coefs["lap_plus0"]))
        det = a + m1 * g1 * lam**2
        mlam = m1 * lam
        glam = g1 * lam

        def apply(vec):
            rv = np.fft.rfft(vec[:n])
            rm = np.fft.rfft(vec[n:])
            v_hat = (rv + mlam * rm) / det
            m_hat = (a * rm - glam * rv) / det
            return np.concatenate([np.fft.irfft(v_hat, n), np.fft.irfft(m_hat, n)])

        return apply

    def precondition(self):
        """Preconditioner used by the coupled solve.

        1D uses the spectral proxy; 2D keeps the per-cell block inverse,
        whose application is elementwise and therefore bit-exactly
        equivariant under the x <-> y swap (the FFT path is not, because
        the two transform axes are processed in a fixed order).
        """
        if self.grid.dim == 1:
            return self.spectral_precondition()
        return self.block_precondition()


@dataclass
class SparseSystem:
    """Assembled coupled system; unknown block 1 is vbar, block 2 is mu.

    ``matrix`` is the explicit CSR form; ``operator`` applies the identical
    coefficients matrix-free (used by the iterative solve).
    """

    matrix: linsolve.SparseMatrix
    operator: StencilOperator
    rhs: np.ndarray
    grid: mesh.Grid

    @property
    def n_cells(self):
        return self.grid.ncells


@lru_cache(maxsize=8)
def _pattern(grid):
    """Fixed CSR sparsity pattern of the coupled system on this grid.

    Returns (indptr, indices, slots) where slots maps each stencil entry
    name to the positions of its per-cell coefficients inside ``data``.
    Both upwind neighbors are always present (one side may carry a zero
    coefficient), so the pattern is independent of the velocity signs.
    """
    for axis in range(grid.dim):
        if grid.shape[axis] < 3:
            raise DomainError("the coupled step needs at least 3 cells per axis")
    N = grid.ncells
    idx = np.arange(N).reshape(grid.shape)
    neighbors = []
    for axis in range(grid.dim):
        neighbors.append((np.roll(idx, 1, axis=axis).ravel(),
                          np.roll(idx, -1, axis=axis).ravel()))
    cell = idx.ravel()

    def tags_for(block):
        # per-row entry list: (tag, column index array)
        entries = []
        if block == 1:
            entries.append(("v_diag", cell))
            for axis, (im, ip) in enumerate(neighbors):
                entries.append((f"v_minus{axis}", im))
                entries.append((f"v_plus{axis}", ip))
            entries.append(("mu_diag", N + cell))
            for axis, (im, ip) in enumerate(neighbors):
                entries.append((f"mu_minus{axis}", N + im))
                entries.append((f"mu_plus{axis}", N + ip))
        else:
            entries.append(("mu_eq_diag", N + cell))
            entries.append(("lap_diag", cell))
            for axis, (im, ip) in enumerate(neighbors):
                entries.append((f"lap_minus{axis}", im))
                entries.append((f"lap_plus{axis}", ip))
        return entries

    indptr = np.zeros(2 * N + 1, dtype=np.int64)
    slot_map = {}
    indices_parts = []
    offset = 0
    for block, row_base in ((1, 0), (2, N)):
        entries = tags_for(block)
        ncols = len(entries)
        cols = np.stack([col for _, col in entries])  # (ncols, N)
        order = np.argsort(cols, axis=0, kind="stable")
        # rank of each entry within its sorted row
        ranks = np.empty_like(order)
        for pos in range(ncols):
            ranks[order[pos], np.arange(N)] = pos
        row_starts = offset + ncols * np.arange(N, dtype=np.int64)
        for k, (tag, col) in enumerate(entries):
            slot_map[tag] = row_starts + ranks[k]
        sorted_cols = np.take_along_axis(cols, order, axis=0)
        indices_parts.append(sorted_cols.T.ravel())
        indptr[row_base + 1: row_base + N + 1] = ncols
        offset += ncols * N
    np.cumsum(indptr, out=indptr)
    indices = np.concatenate(indices_parts).astype(np.int64)
    return indptr, indices, slot_map


def assemble_system(grid, params, vn, cn, rho_n, rho_next, vel_next, dt,
                    transform_kind="logistic", advect="upwind"):
    """Build the sparse system for (vbar^{n+1}, mu^{n+1}).

    Row block 1 (order parameter): vbar/dt + vel . grad(vbar)
        - div(b(c^n) grad mu) / (T'(v^n) rho^{n+1})
        = v^n/dt + F_c(rho^n, c^n) / (T'(v^n) rho^{n+1}).
    Row block 2 (potential): mu + (gamma T'(v^n)/rho^{n+1}) lap(vbar)
        = -(gamma T''(v^n)/rho^{n+1}) |grad v^n|^2 + dpsi0/dc(rho^n, c^n).
    """
    if advect not in ("upwind", "central"):
        raise DomainError(f"unknown advection discretization {advect!r}")
    vn = grid.check_field(vn)
    cn = grid.check_field(cn)
    rho_next = grid.check_field(rho_next)
    if np.any(rho_next <= 0):
        raise DomainError("assemble_system requires rho^{n+1} > 0")
    tprime = physics.transform_deriv(vn, transform_kind)
    if np.any(tprime == 0):
        raise DomainError("transform derivative vanished; v left the resolvable range")

    N = grid.ncells
    inv_tr = 1.0 / (tprime * rho_next)
    b = physics.mobility(params, cn)
    vel = np.asarray(vel_next, dtype=np.float64).reshape((grid.dim,) + grid.shape)

    # Per-axis coefficient arrays; axis partial sums of the diagonals are
    # combined pairwise so mirrored cells receive bit-identical values.
    coefs = {}
    adv_diag_parts, mu_diag_parts, lap_diag_parts = [], [], []
    lap_coef = params.gamma * tprime / rho_next
    for axis in range(grid.dim):
        h = grid.spacing(axis)
        u = vel[axis]
        if advect == "upwind":
            up = np.maximum(u, 0.0)
            um = np.minimum(u, 0.0)
            adv_diag_parts.append((up - um) / h)
            coefs[f"v_minus{axis}"] = -up / h
            coefs[f"v_plus{axis}"] = um / h
        else:
            adv_diag_parts.append(np.zeros(grid.shape))
            coefs[f"v_minus{axis}"] = -u / (2.0 * h)
            coefs[f"v_plus{axis}"] = u / (2.0 * h)
        b_plus = 0.5 * (b + np.roll(b, -1, axis=axis))
        b_minus = np.roll(b_plus, 1, axis=axis)
        mu_diag_parts.append(inv_tr * (b_plus + b_minus) / h**2)
        coefs[f"mu_plus{axis}"] = -inv_tr * b_plus / h**2
        coefs[f"mu_minus{axis}"] = -inv_tr * b_minus / h**2
        lap_diag_parts.append(-2.0 * lap_coef / h**2)
        coefs[f"lap_plus{axis}"] = lap_coef / h**2
        coefs[f"lap_minus{axis}"] = lap_coef / h**2

    def axis_sum(parts):
        return parts[0] if len(parts) == 1 else parts[0] + parts[1]

    coefs["v_diag"] = 1.0 / dt + axis_sum(adv_diag_parts)
    coefs["mu_diag"] = axis_sum(mu_diag_parts)
    coefs["lap_diag"] = axis_sum(lap_diag_parts)
    coefs = {key: np.ascontiguousarray(val, dtype=np.float64) for key, val in coefs.items()}

    indptr, indices, slots = _pattern(grid)
    data = np.empty(indices.size)
    for axis in range(grid.dim):
        for tag in (f"v_minus{axis}", f"v_plus{axis}", f"mu_minus{axis}",
                    f"mu_plus{axis}", f"lap_minus{axis}", f"lap_plus{axis}"):
            data[slots[tag]] = coefs[tag].ravel()
    data[slots["v_diag"]] = coefs["v_diag"].ravel()
    data[slots["mu_diag"]] = coefs["mu_diag"].ravel()
    data[slots["lap_diag"]] = coefs["lap_diag"].ravel()
    data[slots["mu_eq_diag"]] = np.ones(N)

    grad_vn_sq = mesh.central_gradient(grid, vn, axis=0) ** 2
    if grid.dim == 2:
        grad_vn_sq = grad_vn_sq + mesh.central_gradient(grid, vn, axis=1) ** 2
    tsecond = physics.transform_deriv2(vn, transform_kind)
    rhs = np.empty(2 * N)
    rhs[:N] = (vn / dt + physics.source_Fc(params, rho_n, cn) * inv_tr).ravel()
    rhs[N:] = (-params.gamma * tsecond / rho_next * grad_vn_sq
               + physics.dpsi0_dc(params, rho_n, cn)).ravel()

    matrix = linsolve.SparseMatrix(2 * N, indptr, indices, data)
    operator = StencilOperator(grid, coefs)
    return SparseSystem(matrix=matrix, operator=operator, rhs=rhs, grid=grid)


def solve_ch(system, tol=1e-10, restart=50, maxiter=2000, x0=None):
    """Solve the assembled system; returns (vbar, mu, report).

    Iterates on the matrix-free operator (identical coefficients to the
    CSR form, swap-equivariant application order), preconditioned per the
    grid dimension (spectral proxy in 1D, per-cell blocks in 2D).
    Convergence is measured in the preconditioned residual norm: the row
    scales span 1/dt down to O(1), which puts the plain relative
    residual's floating-point floor at the tolerance itself.
    """
    x, report = linsolve.gmres(system.operator, system.rhs, tol=tol,
                               restart=restart, maxiter=maxiter, x0=x0,
                               weighted_norm=True,
                               precond=system.operator.precondition())
    if not report.converged:
        raise SolverError(
            f"coupled solve stalled at relative residual {report.residual:.3e} "
            f"after {report.iterations} iterations",
            residual=report.residual, iterations=report.iterations)
    N = system.n_cells
    shape = system.grid.shape
    return x[:N].reshape(shape), x[N:].reshape(shape), report


def lambda_correct(grid, params, vbar, cn, rho_n, rho_next, dt,
                   transform_kind="logistic"):
    """Global mass correction enforcing the density-weighted balance

        lambda * integral rho^{n+1} T(vbar) = integral rho^n c^n + dt F_c,

    the discrete counterpart of d/dt int(rho c) = int(F_c). Weighting by
    the density matters: the plain T(vbar) integral produces mass at the
    rate int(F_c) while the transformed equation produces T-mass at
    int(F_c / rho), and for non-uniform density that mismatch makes
    lambda decay exponentially until the transform saturates.
    """
    Tv = physics.transform(vbar, transform_kind)
    denom = mesh.integrate(grid, rho_next * Tv)
    if denom <= 0:
        raise DomainError("integral of rho T(vbar) must be positive")
    target = mesh.integrate(grid, rho_n * cn + dt * physics.source_Fc(params, rho_n, cn))
    lam = target / denom
    return lam, lam * Tv


def update_r(grid, params, r_prev, C0, cbar, mu, rho_next, E_bar, dt):
    """Closed-form auxiliary update.

    r^{n+1} = r^n (1 + dt/(E+C0) * int mu F_c) / (1 + dt/(E+C0) * int b |grad mu|^2).

    Returns (r_next, C_factor). A negative numerator means the step-size
    condition failed; callers halve dt and retry.
    """
    shift = E_bar + C0
    if shift <= 0:
        raise DomainError("shifted energy E + C0 must be positive")
    grad_mu_sq = mesh.central_gradient(grid, mu, axis=0) ** 2
    if grid.dim == 2:
        grad_mu_sq = grad_mu_sq + mesh.central_gradient(grid, mu, axis=1) ** 2
    dissipation = mesh.integrate(grid, physics.mobility(params, cbar) * grad_mu_sq)
    source = mesh.integrate(grid, mu * physics.source_Fc(params, rho_next, cbar))
    numer = 1.0 + dt / shift * source
    if numer < 0:
        raise StepSizeError(
            f"auxiliary update guard failed (source factor {numer:.3e} < 0); reduce dt")
    denom = 1.0 + dt / shift * dissipation
    factor = numer / denom
    return r_prev * factor, factor


def rescale(r_next, C0, E_bar, cbar, vbar):
    """xi = r/(E+C0); sigma = 1-(1-xi)^2; scale cbar and vbar by sigma."""
    if r_next < 0:
        raise BoundsError(f"auxiliary variable r became negative ({r_next:.3e})")
    xi = r_next / (E_bar + C0)
    if not 0.0 < xi < 2.0:
        raise BoundsError(f"xi = {xi:.6g} left the admissible interval (0, 2)")
    sigma = 1.0 - (1.0 - xi) ** 2
    return xi, sigma, sigma * cbar, sigma * vbar
