"""Uniform periodic cell-centered grids and their discrete operators.

A field is a plain ``numpy`` array of one value per cell: shape ``(nx,)``
in 1D and ``(nx, ny)`` in 2D with axis 0 along x. All operators wrap
periodically, are linear, and preserve the telescoping identities
(summation by parts, zero total flux) that the scheme's conservation and
dissipation proofs rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with cell centers at (j + 1/2) * dx."""

    dim: int
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f"grid dim must be 1 or 2, got {self.dim}")
        if self.nx < 1 or self.ny < 1:
            raise DomainError("cell counts must be positive")
        if self.dim == 1 and self.ny != 1:
            raise DomainError("1D grid requires ny == 1")
        if self.lx <= 0 or self.ly <= 0:
            raise DomainError("domain lengths must be positive")

    @classmethod
    def line(cls, nx, lx=1.0):
        return cls(dim=1, nx=nx, ny=1, lx=float(lx), ly=1.0)

    @classmethod
    def box(cls, nx, ny, lx=1.0, ly=1.0):
        return cls(dim=2, nx=nx, ny=ny, lx=float(lx), ly=float(ly))

    @property
    def dx(self):
        return self.lx / self.nx

    @property
    def dy(self):
        return self.ly / self.ny

    @property
    def shape(self):
        return (self.nx,) if self.dim == 1 else (self.nx, self.ny)

    @property
    def ncells(self):
        return self.nx * self.ny

    @property
    def cell_volume(self):
        return self.dx if self.dim == 1 else self.dx * self.dy

    def x_centers(self):
        return (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self):
        return (np.arange(self.ny) + 0.5) * self.dy

    def spacing(self, axis):
        return self.dx if axis == 0 else self.dy

    def check_axis(self, axis):
        if not 0 <= axis < self.dim:
            raise DomainError(f"axis {axis} out of range for a {self.dim}D grid")

    def check_field(self, f):
        f = np.asarray(f, dtype=np.float64)
        if f.shape != self.shape:
            raise DomainError(f"field shape {f.shape} does not match grid shape {self.shape}")
        return f


def central_gradient(grid, f, axis=0):
    """Centered first derivative (f_{j+1} - f_{j-1}) / (2 dx), periodic."""
    grid.check_axis(axis)
    f = grid.check_field(f)
    if f.shape[axis] < 3:
        raise DomainError("central gradient needs at least 3 cells along the axis")
    h = grid.spacing(axis)
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)


def second_difference(grid, f, axis=0):
    """Undivided second difference f_{j+1} - 2 f_j + f_{j-1}, periodic.

    Callers scale by 1/dx^2 where a Laplacian is intended.
    """
    grid.check_axis(axis)
    f = grid.check_field(f)
    if f.shape[axis] < 3:
        raise DomainError("second difference needs at least 3 cells along the axis")
    return np.roll(f, -1, axis=axis) - 2.0 * f + np.roll(f, 1, axis=axis)


def laplacian(grid, f):
    """Sum over axes of the scaled second differences."""
    out = second_difference(grid, f, axis=0) / grid.dx**2
    if grid.dim == 2:
        out = out + second_difference(grid, f, axis=1) / grid.dy**2
    return out


def div_coef_grad(grid, b, mu):
    """Flux-form divergence of b * grad(mu) with arithmetic-mean face coefficients.

    out_j = [b_{j+1/2} (mu_{j+1} - mu_j) - b_{j-1/2} (mu_j - mu_{j-1})] / dx^2
    summed over axes. Requires b >= 0; a negative coefficient signals a
    mobility or potential misconfiguration upstream.
    """
    b = grid.check_field(b)
    mu = grid.check_field(mu)
    if np.any(b < 0):
        raise DomainError("div_coef_grad requires a nonnegative coefficient field")
    out = np.zeros(grid.shape)
    for axis in range(grid.dim):
        h = grid.spacing(axis)
        b_plus = 0.5 * (b + np.roll(b, -1, axis=axis))
        flux_plus = b_plus * (np.roll(mu, -1, axis=axis) - mu)
        out = out + (flux_plus - np.roll(flux_plus, 1, axis=axis)) / h**2
    return out


def integrate(grid, f):
    """Midpoint-rule integral: cell volume times the sum over cells."""
    f = grid.check_field(f)
    return grid.cell_volume * float(np.sum(f))


def l2_norm(grid, f):
    """Discrete L2 norm sqrt(cell_volume * sum f^2) over one or more fields.

    Accepts a single field or a stacked array whose trailing axes match the
    grid shape; all components contribute to the sum.
    """
    f = np.asarray(f, dtype=np.float64)
    return float(np.sqrt(grid.cell_volume * np.sum(f * f)))
