"""Constitutive closures: free energy, pressure, mobility, friction,
proliferation source, and the bound-preserving transform.

All functions accept scalars or arrays and validate their mathematical
domain; a :class:`~gnsch.errors.DomainError` from here usually means a
bound- or positivity-preservation failure upstream, not a local bug.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mesh
from .errors import DomainError

TRANSFORM_KINDS = ("logistic", "tanh")


@dataclass
class PhysParams:
    """Model constants.

    a          barotropic pressure exponent (p_e = rho^a), a > 1
    gamma      square of the diffuse-interface width
    nu0        constant viscosity
    eta        relaxation parameter of the hyperbolic stabilization
    alpha1/2   weights of the two logarithmic wells
    theta      well-depth coefficient, theta > 1
    k          additive potential offset (keeps rho*psi0 positive)
    cb         mobility amplitude, b(c) = cb * c * (1-c)^alpha_mob
    alpha_mob  mobility degeneracy exponent, >= 1
    kappa1/2   phase friction weights
    growth_rate  prefactor of the proliferation source (0 disables it)
    c_star     saturation fraction of the proliferating phase
    c_under    lower-bound shift of the auxiliary energy variable
    """

    a: float = 3.0
    gamma: float = 1.0 / 500.0
    nu0: float = 1e-2
    eta: float = 1e-3
    alpha1: float = 1.0
    alpha2: float = 1.0
    theta: float = 4.0
    k: float = 100.0
    cb: float = 1.0
    alpha_mob: float = 1.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    growth_rate: float = 0.0
    c_star: float = 0.9
    c_under: float = 100.0

    def validate(self):
        checks = [
            (self.a > 1, "a", "must be > 1"),
            (self.gamma > 0, "gamma", "must be > 0"),
            (self.nu0 >= 0, "nu0", "must be >= 0"),
            (self.eta > 0, "eta", "must be > 0"),
            (self.alpha1 > 0, "alpha1", "must be > 0"),
            (self.alpha2 > 0, "alpha2", "must be > 0"),
            (self.theta > 1, "theta", "must be > 1"),
            (self.cb >= 0, "cb", "must be >= 0"),
            (self.alpha_mob >= 1, "alpha_mob", "must be >= 1"),
            (self.kappa1 >= 0, "kappa1", "must be >= 0"),
            (self.kappa2 >= 0, "kappa2", "must be >= 0"),
            (0 < self.c_star <= 1, "c_star", "must be in (0, 1]"),
            (self.c_under > 0, "c_under", "must be > 0"),
        ]
        for ok, name, msg in checks:
            if not ok:
                raise DomainError(f"{name} {msg} (got {getattr(self, name)})")
        return self


def _check_open_unit(c, what="c"):
    if np.any(np.asarray(c) <= 0) or np.any(np.asarray(c) >= 1):
        raise DomainError(f"{what} must lie strictly in (0, 1)")


def H(params, c):
    """Coefficient of log(rho) in the mixing energy: (alpha1(1-c) + alpha2 c)/2."""
    c = np.asarray(c, dtype=np.float64)
    return 0.5 * (params.alpha1 * (1.0 - c) + params.alpha2 * c)


def dH(params, c):
    c = np.asarray(c, dtype=np.float64)
    return np.full_like(c, 0.5 * (params.alpha2 - params.alpha1))


def Q(params, c):
    """Double-well logarithmic potential (value part of the mixing energy)."""
    c = np.asarray(c, dtype=np.float64)
    _check_open_unit(c)
    logs = params.alpha1 * (1.0 - c) * np.log(1.0 - c) + params.alpha2 * c * np.log(c)
    return 0.5 * logs - 0.5 * params.theta * (c - 0.5) ** 2 + params.k


def dQ(params, c):
    c = np.asarray(c, dtype=np.float64)
    _check_open_unit(c)
    return 0.5 * (-params.alpha1 * np.log(1.0 - c) - params.alpha1
                  + params.alpha2 * np.log(c) + params.alpha2) \
        - params.theta * (c - 0.5)


def pressure(params, rho, c):
    """p = rho^a + rho * H(c)."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise DomainError("pressure requires rho >= 0")
    return rho**params.a + rho * H(params, c)


def dpressure_drho(params, rho, c):
    """a rho^(a-1) + H(c); the sound-speed squared entering the wave bounds."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise DomainError("dpressure_drho requires rho >= 0")
    return params.a * rho ** (params.a - 1.0) + H(params, c)


def psi0(params, rho, c):
    """Homogeneous free energy rho^(a-1)/(a-1) + H(c) log(rho) + Q(c)."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho <= 0):
        raise DomainError("psi0 requires rho > 0")
    return rho ** (params.a - 1.0) / (params.a - 1.0) + H(params, c) * np.log(rho) + Q(params, c)


def dpsi0_dc(params, rho, c):
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho <= 0):
        raise DomainError("dpsi0_dc requires rho > 0")
    return dH(params, c) * np.log(rho) + dQ(params, c)


def mobility(params, c):
    """Doubly degenerate mobility cb * c * (1-c)^alpha_mob, zero at pure phases."""
    c = np.asarray(c, dtype=np.float64)
    if np.any(c < 0) or np.any(c > 1):
        raise DomainError("mobility requires c in [0, 1]")
    return params.cb * c * (1.0 - c) ** params.alpha_mob


def friction(params, rho, c):
    """kappa1 * rho * c + kappa2 * rho * (1-c)."""
    rho = np.asarray(rho, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    return params.kappa1 * rho * c + params.kappa2 * rho * (1.0 - c)


def source_Fc(params, rho, c):
    """Proliferation source growth_rate * rho * c * (1 - c/c_star)."""
    if params.growth_rate == 0.0:
        return np.zeros_like(np.asarray(c, dtype=np.float64))
    rho = np.asarray(rho, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    return params.growth_rate * rho * c * (1.0 - c / params.c_star)


def transform(v, kind="logistic"):
    """Monotone map from the real line onto (0, 1)."""
    v = np.asarray(v, dtype=np.float64)
    if kind == "logistic":
        # both np.where branches evaluate; out-of-branch overflows are discarded
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(v >= 0, 1.0 / (1.0 + np.exp(-v)),
                            np.exp(v) / (1.0 + np.exp(v)))
    if kind == "tanh":
        return 0.5 * np.tanh(v) + 0.5
    raise DomainError(f"unknown transform kind {kind!r}")


def transform_deriv(v, kind="logistic"):
    """T'(v), expressed through c = T(v): c(1-c) (logistic) or 2c(1-c) (tanh)."""
    c = transform(v, kind)
    if kind == "logistic":
        return c * (1.0 - c)
    return 2.0 * c * (1.0 - c)


def transform_deriv2(v, kind="logistic"):
    """T''(v) = T'(v) * (1 - 2c) up to the kind-specific factor."""
    c = transform(v, kind)
    if kind == "logistic":
        return c * (1.0 - c) * (1.0 - 2.0 * c)
    return 2.0 * (1.0 - 2.0 * c) * 2.0 * c * (1.0 - c)


def transform_inverse(c, kind="logistic"):
    """v with T(v) = c; requires c strictly inside (0, 1)."""
    c = np.asarray(c, dtype=np.float64)
    _check_open_unit(c, "transform_inverse argument")
    if kind == "logistic":
        return np.log(c) - np.log(1.0 - c)
    if kind == "tanh":
        return np.arctanh(2.0 * c - 1.0)
    raise DomainError(f"unknown transform kind {kind!r}")


def energy(grid, params, rho, c):
    """E = integral of gamma/2 |grad c|^2 + rho * psi0(rho, c)."""
    grad_sq = mesh.central_gradient(grid, c, axis=0) ** 2
    if grid.dim == 2:
        grad_sq = grad_sq + mesh.central_gradient(grid, c, axis=1) ** 2
    return mesh.integrate(grid, 0.5 * params.gamma * grad_sq + rho * psi0(params, rho, c))
