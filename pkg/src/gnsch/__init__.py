"""Finite-volume simulator for a compressible two-phase flow coupled to a
degenerate Cahn-Hilliard interface, discretized by a relaxation/upwind
method for the flow and a bound-preserving scalar-auxiliary-variable step
for the phase field.

The time step conserves total mass exactly, keeps the mass fraction
strictly inside (0, 1) by construction, and satisfies a discrete energy
dissipation inequality that the diagnostics measure every step.
"""

from .backend import BACKEND, available_backends
from .config import RunConfig, parse_config, parse_config_text, serialize_config
from .driver import (DiagRecord, SimState, convergence_space, convergence_time,
                     init_state, run, step)
from .mesh import Grid
from .physics import PhysParams

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "available_backends",
    "RunConfig", "parse_config", "parse_config_text", "serialize_config",
    "DiagRecord", "SimState", "convergence_space", "convergence_time",
    "init_state", "run", "step",
    "Grid", "PhysParams", "__version__",
]
