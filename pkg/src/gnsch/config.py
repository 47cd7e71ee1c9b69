"""Run configuration: dataclasses, the .cfg (INI) file format, and its
validation. Unknown sections or keys are hard errors so typos never pass
silently; every message names the offending key.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .mesh import Grid
from .physics import TRANSFORM_KINDS, PhysParams

INIT_KINDS = ("constant", "noisy-constant", "cosine", "gaussian")
RHO_MODES = ("constant", "mixture")
ADVECT_KINDS = ("upwind", "central")


@dataclass
class InitSpec:
    """Initial data. Meaning of the c-field keys depends on ``kind``:

    constant        c = c_base
    noisy-constant  c = c_base + c_noise * u, u ~ U(0,1) per cell (seeded)
    cosine          c = c_base + c_amp * cos(2 pi c_modes x)
    gaussian        c = c_floor + c_amp * exp(-c_width ((x-x0)^2 + (y-y0)^2))

    rho_mode constant gives rho = rho0; mixture gives rho = rho1*c + rho2*(1-c).
    """

    kind: str = "constant"
    c_base: float = 0.5
    c_noise: float = 0.0
    c_amp: float = 0.0
    c_modes: int = 1
    c_floor: float = 0.0
    c_width: float = 100.0
    x0: float = 0.5
    y0: float = 0.5
    rho_mode: str = "constant"
    rho0: float = 1.0
    rho1: float = 1.0
    rho2: float = 0.5
    v0: float = 0.0
    vy0: float = 0.0
    seed: int = 0


@dataclass
class TimeSpec:
    t_final: float = 0.1
    dt_init: float = 1e-6
    dt_max: float = 1e-5
    cfl_safety: float = 0.9
    fixed_dt: float = 0.0  # > 0 disables adaptation (convergence studies)


@dataclass
class SolverSpec:
    tol: float = 1e-10
    restart: int = 50
    maxiter: int = 2000


@dataclass
class SchemeSpec:
    transform: str = "logistic"
    advect: str = "upwind"


@dataclass
class OutputSpec:
    dir: str = "out"
    snapshot_interval: float = 0.0  # simulation-time units; 0 -> first and last only
    diag_stride: int = 1


@dataclass
class ConvergenceSpec:
    space_grids: tuple = (64, 128, 256, 512, 1024, 2048)
    dt_space: float = 1e-5
    t_final_space: float = 0.1
    dt_time_base: float = 1e-4
    time_refinements: int = 6
    t_final_time: float = 0.2


@dataclass
class RunConfig:
    label: str
    grid: Grid
    physics: PhysParams
    init: InitSpec = field(default_factory=InitSpec)
    time: TimeSpec = field(default_factory=TimeSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    scheme: SchemeSpec = field(default_factory=SchemeSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    convergence: ConvergenceSpec = field(default_factory=ConvergenceSpec)

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs)


_INT_KEYS = {"dim", "nx", "ny", "c_modes", "seed", "restart", "maxiter",
             "diag_stride", "time_refinements"}
_STR_KEYS = {"label", "kind", "rho_mode", "transform", "advect", "dir"}


def _convert(section, key, raw):
    where = f"[{section}] {key}"
    if key == "space_grids":
        try:
            grids = tuple(int(tok) for tok in raw.replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"{where}: expected a list of integers, got {raw!r}") from exc
        if len(grids) < 1:
            raise ConfigError(f"{where}: needs at least one grid size")
        return grids
    if key in _STR_KEYS:
        return raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        expected = "an integer" if key in _INT_KEYS else "a number"
        raise ConfigError(f"{where}: expected {expected}, got {raw!r}") from exc


_SECTION_FIELDS = {
    "case": {"label"},
    "grid": {"dim", "nx", "ny", "lx", "ly"},
    "physics": {f.name for f in fields(PhysParams)},
    "init": {f.name for f in fields(InitSpec)},
    "time": {f.name for f in fields(TimeSpec)},
    "solver": {f.name for f in fields(SolverSpec)},
    "scheme": {f.name for f in fields(SchemeSpec)},
    "output": {f.name for f in fields(OutputSpec)},
    "convergence": {f.name for f in fields(ConvergenceSpec)},
}


def _read_ini(text, origin):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {origin}: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _SECTION_FIELDS:
            raise ConfigError(f"unknown section [{section}]")
        allowed = _SECTION_FIELDS[section]
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[(section, key)] = _convert(section, key, raw)
    return values


def _build_section(cls, values, section):
    kwargs = {key: val for (sec, key), val in values.items() if sec == section}
    return cls(**kwargs)


def _validate(cfg):
    if cfg.init.kind not in INIT_KINDS:
        raise ConfigError(f"[init] kind must be one of {INIT_KINDS}, got {cfg.init.kind!r}")
    if cfg.init.rho_mode not in RHO_MODES:
        raise ConfigError(f"[init] rho_mode must be one of {RHO_MODES}")
    if cfg.scheme.transform not in TRANSFORM_KINDS:
        raise ConfigError(f"[scheme] transform must be one of {TRANSFORM_KINDS}")
    if cfg.scheme.advect not in ADVECT_KINDS:
        raise ConfigError(f"[scheme] advect must be one of {ADVECT_KINDS}")
    positive = [("time", "dt_init", cfg.time.dt_init), ("time", "dt_max", cfg.time.dt_max),
                ("solver", "tol", cfg.solver.tol)]
    for sec, key, val in positive:
        if val <= 0:
            raise ConfigError(f"[{sec}] {key} must be positive, got {val}")
    if cfg.time.t_final < 0:
        raise ConfigError(f"[time] t_final must be nonnegative, got {cfg.time.t_final}")
    if not 0 < cfg.time.cfl_safety <= 1:
        raise ConfigError(f"[time] cfl_safety must lie in (0, 1], got {cfg.time.cfl_safety}")
    if cfg.time.fixed_dt < 0:
        raise ConfigError("[time] fixed_dt must be >= 0 (0 means adaptive)")
    if cfg.solver.restart < 1 or cfg.solver.maxiter < 1:
        raise ConfigError("[solver] restart and maxiter must be >= 1")
    if cfg.output.diag_stride < 1:
        raise ConfigError("[output] diag_stride must be >= 1")
    if cfg.init.seed < 0:
        raise ConfigError("[init] seed must be a nonnegative integer")
    try:
        cfg.physics.validate()
    except Exception as exc:
        raise ConfigError(f"[physics] {exc}") from exc
    return cfg


def parse_config_text(text, origin="<string>"):
    values = _read_ini(text, origin)
    for required in (("grid", "nx"), ("time", "t_final")):
        if required not in values:
            raise ConfigError(f"missing required key {required[1]!r} in section [{required[0]}]")
    dim = values.get(("grid", "dim"), 1)
    nx = values[("grid", "nx")]
    ny = values.get(("grid", "ny"), 1 if dim == 1 else nx)
    lx = values.get(("grid", "lx"), 1.0)
    ly = values.get(("grid", "ly"), 1.0)
    try:
        grid = Grid(dim=dim, nx=nx, ny=ny, lx=lx, ly=ly)
    except Exception as exc:
        raise ConfigError(f"[grid] {exc}") from exc
    cfg = RunConfig(
        label=values.get(("case", "label"), "run"),
        grid=grid,
        physics=_build_section(PhysParams, values, "physics"),
        init=_build_section(InitSpec, values, "init"),
        time=_build_section(TimeSpec, values, "time"),
        solver=_build_section(SolverSpec, values, "solver"),
        scheme=_build_section(SchemeSpec, values, "scheme"),
        output=_build_section(OutputSpec, values, "output"),
        convergence=_build_section(ConvergenceSpec, values, "convergence"),
    )
    return _validate(cfg)


def parse_config(path):
    """Parse and validate a .cfg file into a RunConfig."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, origin=str(path))


def serialize_config(cfg):
    """Render a RunConfig as .cfg text; parsing it back yields an equal config."""
    parser = configparser.ConfigParser()
    parser["case"] = {"label": cfg.label}
    parser["grid"] = {"dim": cfg.grid.dim, "nx": cfg.grid.nx, "ny": cfg.grid.ny,
                      "lx": repr(cfg.grid.lx), "ly": repr(cfg.grid.ly)}

    def section_of(obj, skip=()):
        out = {}
        for f in fields(obj):
            if f.name in skip:
                continue
            val = getattr(obj, f.name)
            if isinstance(val, tuple):
                out[f.name] = " ".join(str(v) for v in val)
            elif isinstance(val, float):
                out[f.name] = repr(val)
            else:
                out[f.name] = str(val)
        return out

    parser["physics"] = section_of(cfg.physics)
    parser["init"] = section_of(cfg.init)
    parser["time"] = section_of(cfg.time)
    parser["solver"] = section_of(cfg.solver)
    parser["scheme"] = section_of(cfg.scheme)
    parser["output"] = section_of(cfg.output)
    parser["convergence"] = section_of(cfg.convergence)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
