"""Relaxation/upwind finite-volume update for the compressible flow part.

The conserved state U stacks (rho, momentum...) per cell; V (and W along y
in 2D) are the relaxation auxiliaries driven toward the physical fluxes
F(U) (and K(U)). The update is the first-order upwind form of the
relaxation system: a centered flux difference plus sqrt(a) times an
undivided second difference, with friction applied implicitly on the
momentum rows only, so the density row telescopes and total mass is
conserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend, mesh, physics
from .errors import CflError, DomainError, PositivityError

# Tiny slack so a step sized exactly at the CFL bound is not rejected
# for round-off reasons.
_CFL_SLACK = 1.0 + 1e-12


@dataclass
class HyperbolicState:
    """Conserved state and relaxation auxiliaries.

    U has shape (dim+1, nx[, ny]); V matches U; W is None in 1D.
    """

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray | None = None

    def validate(self):
        if np.any(self.U[0] <= 0):
            raise PositivityError("density must be positive in every cell")
        arrays = [self.U, self.V] + ([self.W] if self.W is not None else [])
        for arr in arrays:
            if not np.all(np.isfinite(arr)):
                raise DomainError("hyperbolic state contains non-finite values")
        return self


def flux_F(grid, params, U, c):
    """Physical flux of the relaxation system along x.

    1D: (rho u, rho u^2 + p - nu du/dx + gamma/2 (dc/dx)^2).
    2D: the three-component normal flux including the viscous and
    capillary couplings between the axes.
    """
    rho = U[0]
    if grid.dim == 1:
        u = U[1] / rho
        du = mesh.central_gradient(grid, u, axis=0)
        dc = mesh.central_gradient(grid, c, axis=0)
        p = physics.pressure(params, rho, c)
        f0 = U[1]
        f1 = rho * u * u + p - params.nu0 * du + 0.5 * params.gamma * dc * dc
        return np.stack([f0, f1])
    return _flux_2d(grid, params, U, c, axis=0)


def flux_K(grid, params, U, c):
    """Physical flux of the relaxation system along y (2D only)."""
    if grid.dim != 2:
        raise DomainError("flux_K is defined for 2D grids only")
    return _flux_2d(grid, params, U, c, axis=1)


def _flux_2d(grid, params, U, c, axis):
    rho = U[0]
    ux = U[1] / rho
    uy = U[2] / rho
    dux_dx = mesh.central_gradient(grid, ux, axis=0)
    duy_dy = mesh.central_gradient(grid, uy, axis=1)
    dux_dy = mesh.central_gradient(grid, ux, axis=1)
    duy_dx = mesh.central_gradient(grid, uy, axis=0)
    gx = mesh.central_gradient(grid, c, axis=0)
    gy = mesh.central_gradient(grid, c, axis=1)
    p = physics.pressure(params, rho, c)
    div_u = dux_dx + duy_dy
    # shear component, identical in F and K; the commutative pair products
    # (ux*uy, gx*gy) are grouped so the array is bit-exactly swap-symmetric
    shear = rho * (ux * uy) - params.nu0 * (dux_dy + duy_dx) + params.gamma * (gx * gy)
    if axis == 0:
        normal = (rho * ux * ux + p - 2.0 * params.nu0 * dux_dx
                  + (2.0 / 3.0) * params.nu0 * div_u
                  + 0.5 * params.gamma * (gx * gx - gy * gy))
        return np.stack([rho * ux, normal, shear])
    normal = (rho * uy * uy + p - 2.0 * params.nu0 * duy_dy
              + (2.0 / 3.0) * params.nu0 * div_u
              + 0.5 * params.gamma * (gy * gy - gx * gx))
    return np.stack([rho * uy, shear, normal])


def subchar_constants(grid, params, U, c):
    """Grid maxima of (u +- sqrt(dp/drho))^2 per axis.

    Returns a scalar in 1D and (a1, b1) in 2D. These diagonal relaxation
    constants must majorize the physical wave speeds (subcharacteristic
    condition) for the split system to be dissipative.
    """
    rho = U[0]
    dp = physics.dpressure_drho(params, rho, c)
    if np.any(dp < 0):
        raise DomainError("dp/drho must be nonnegative for the wave-speed bound")
    s = np.sqrt(dp)

    def axis_max(u):
        return float(max(np.max((u + s) ** 2), np.max(u * u), np.max((u - s) ** 2)))

    if grid.dim == 1:
        return axis_max(U[1] / rho)
    return axis_max(U[1] / rho), axis_max(U[2] / rho)


def relax_star(Vn, Fn, dt, eta):
    """Closed-form solve of V* = V^n - (dt/eta)(V* - F): the stiff relaxation."""
    if eta <= 0:
        raise DomainError("relaxation parameter eta must be positive")
    ratio = dt / eta
    return (Vn + ratio * Fn) / (1.0 + ratio)


def check_cfl(grid, dt, a1, b1=None):
    """Raise CflError unless the upwind stability bound holds."""
    courant = dt * np.sqrt(a1) / grid.dx
    if grid.dim == 2:
        courant = courant + dt * np.sqrt(b1) / grid.dy
    if courant > _CFL_SLACK:
        raise CflError(
            f"CFL condition violated: dt*sqrt(a1)/dx sums to {courant:.6g} > 1 (dt={dt:.3e})")


def fv_update(grid, params, U, Vstar, a1, dt, c, Wstar=None, b1=None):
    """One upwind finite-volume step: (U^n, V*) -> (U^{n+1}, V^{n+1}[, W^{n+1}]).

    The density row carries no source; momentum rows absorb the friction
    G = (0, -kappa v) implicitly, which is a closed-form division because
    kappa is evaluated at (rho^{n+1}, c^n) and the equation is linear in
    the new momentum.
    """
    check_cfl(grid, dt, a1, b1)
    sqrt_a = float(np.sqrt(a1))
    cx = dt / (2.0 * grid.dx)

    ncomp = U.shape[0]
    Unew = np.empty_like(U)
    Vnew = np.empty_like(Vstar)
    if grid.dim == 1:
        for comp in range(ncomp):
            Unew[comp] = U[comp] + backend.shift_combo(U[comp], Vstar[comp], -cx, cx * sqrt_a, 0)
            Vnew[comp] = Vstar[comp] + backend.shift_combo(Vstar[comp], U[comp],
                                                           -a1 * cx, cx * sqrt_a, 0)
        Wnew = None
    else:
        sqrt_b = float(np.sqrt(b1))
        cy = dt / (2.0 * grid.dy)
        Wnew = np.empty_like(Wstar)
        for comp in range(ncomp):
            # per-axis increments combined pairwise so the update commutes
            # bit-exactly with the x <-> y swap on symmetric data
            inc_x = backend.shift_combo(U[comp], Vstar[comp], -cx, cx * sqrt_a, 0)
            inc_y = backend.shift_combo(U[comp], Wstar[comp], -cy, cy * sqrt_b, 1)
            Unew[comp] = U[comp] + (inc_x + inc_y)
            Vnew[comp] = Vstar[comp] + backend.shift_combo(Vstar[comp], U[comp],
                                                           -a1 * cx, cx * sqrt_a, 0)
            Wnew[comp] = Wstar[comp] + backend.shift_combo(Wstar[comp], U[comp],
                                                           -b1 * cy, cy * sqrt_b, 1)

    rho_new = Unew[0]
    if np.any(rho_new <= 0):
        raise PositivityError("density lost positivity during the finite-volume update")
    kappa = physics.friction(params, rho_new, c)
    if np.any(kappa):
        damp = 1.0 + dt * kappa / rho_new
        for comp in range(1, ncomp):
            Unew[comp] = Unew[comp] / damp
    return Unew, Vnew, Wnew


def weighted_norms(grid, U, V, W, a1):
    """sqrt(a1)*||U|| + ||V|| (+ ||W||): the quantity tracked by the
    discrete dissipation inequality."""
    total = np.sqrt(a1) * mesh.l2_norm(grid, U) + mesh.l2_norm(grid, V)
    if W is not None:
        total += mesh.l2_norm(grid, W)
    return total
