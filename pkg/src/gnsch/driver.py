"""Time-stepping orchestration: initial data, one full step (relaxation
update, coupled solve, mass correction, auxiliary update, rescale),
adaptive step control with guarded retries, whole runs, and the grid/step
refinement harnesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import mesh, ns_relax, physics, sav_ch
from .errors import BoundsError, ConfigError, DomainError, RetryLimitError, StepSizeError
from .mesh import Grid

MAX_DT_HALVINGS = 20


@dataclass
class SimState:
    """All evolved fields at one time level.

    ``vtrans`` is the transformed order parameter: it is consistent with c
    only at initialization (v0 = T^{-1}(c0)) and afterwards evolves as its
    own variable, exactly as the rescaling step dictates.
    """

    grid: Grid
    rho: np.ndarray
    mom: np.ndarray          # (dim, nx[, ny])
    c: np.ndarray
    vtrans: np.ndarray
    V: np.ndarray            # relaxation auxiliary, shape (dim+1, ...)
    W: np.ndarray | None
    mu: np.ndarray           # chemical potential of the last completed solve
    sav: sav_ch.SavState
    t: float = 0.0
    step_index: int = 0
    last_solution: np.ndarray | None = None

    @property
    def U(self):
        return np.concatenate([self.rho[None], self.mom], axis=0)

    @property
    def vel(self):
        return self.mom / self.rho

    def total_mass(self):
        return mesh.integrate(self.grid, self.rho)


@dataclass
class DiagRecord:
    """Per-step invariant measurements."""

    t: float
    dt: float
    total_mass: float
    energy: float
    dissipation: float
    r: float
    xi: float
    c_min: float
    c_max: float
    solver_iterations: int
    retries: int = 0
    cbar_max: float = 0.0

    FIELDS = ("t", "dt", "total_mass", "energy", "dissipation", "r", "xi",
              "c_min", "c_max", "solver_iterations", "retries", "cbar_max")


@dataclass
class Snapshot:
    grid: Grid
    t: float
    step_index: int
    rho: np.ndarray
    c: np.ndarray
    vel: np.ndarray
    p: np.ndarray
    mu: np.ndarray


@dataclass
class RunResult:
    snapshots: list
    diagnostics: list
    final_state: SimState


def _initial_c(cfg):
    grid, init = cfg.grid, cfg.init
    x = grid.x_centers()
    if grid.dim == 2:
        x = x[:, None]
        y = grid.y_centers()[None, :]
    if init.kind == "constant":
        return np.full(grid.shape, init.c_base)
    if init.kind == "noisy-constant":
        rng = np.random.default_rng(init.seed)
        return init.c_base + init.c_noise * rng.random(grid.shape)
    if init.kind == "cosine":
        prof = init.c_base + init.c_amp * np.cos(2.0 * np.pi * init.c_modes * x)
        return prof * np.ones(grid.shape)
    if init.kind == "gaussian":
        r2 = (x - init.x0) ** 2
        if grid.dim == 2:
            r2 = r2 + (y - init.y0) ** 2
        return init.c_floor + init.c_amp * np.exp(-init.c_width * r2)
    raise ConfigError(f"unknown init kind {init.kind!r}")


def gaussian_profile(init, x, y=None):
    """The gaussian initial-condition formula at arbitrary points."""
    r2 = (np.asarray(x) - init.x0) ** 2
    if y is not None:
        r2 = r2 + (np.asarray(y) - init.y0) ** 2
    return init.c_floor + init.c_amp * np.exp(-init.c_width * r2)


def diagnostic_mu(grid, params, rho, c, vtrans, kind):
    """Chemical potential evaluated from the current fields (snapshot use)."""
    lap_v = mesh.laplacian(grid, vtrans)
    grad_v_sq = mesh.central_gradient(grid, vtrans, axis=0) ** 2
    if grid.dim == 2:
        grad_v_sq = grad_v_sq + mesh.central_gradient(grid, vtrans, axis=1) ** 2
    tp = physics.transform_deriv(vtrans, kind)
    tpp = physics.transform_deriv2(vtrans, kind)
    return (-params.gamma * (tp * lap_v + tpp * grad_v_sq)) / rho \
        + physics.dpsi0_dc(params, rho, c)


def init_state(cfg):
    """Build the initial SimState for a run configuration."""
    grid, p = cfg.grid, cfg.physics
    c0 = _initial_c(cfg)
    if np.any(c0 <= 0) or np.any(c0 >= 1):
        raise BoundsError("initial mass fraction must lie strictly in (0, 1)")
    if cfg.init.rho_mode == "mixture":
        rho0 = cfg.init.rho1 * c0 + cfg.init.rho2 * (1.0 - c0)
    else:
        rho0 = np.full(grid.shape, cfg.init.rho0)
    if np.any(rho0 <= 0):
        raise BoundsError("initial density must be positive")
    vels = [cfg.init.v0] if grid.dim == 1 else [cfg.init.v0, cfg.init.vy0]
    mom = np.stack([rho0 * v for v in vels])
    vtrans = physics.transform_inverse(c0, cfg.scheme.transform)
    U = np.concatenate([rho0[None], mom], axis=0)
    # relaxation auxiliaries start at equilibrium with the physical fluxes
    hyp = ns_relax.HyperbolicState(
        U=U,
        V=ns_relax.flux_F(grid, p, U, c0),
        W=ns_relax.flux_K(grid, p, U, c0) if grid.dim == 2 else None,
    ).validate()
    V, W = hyp.V, hyp.W
    E0 = physics.energy(grid, p, rho0, c0)
    sav = sav_ch.SavState.initial(E0, p.c_under)
    mu0 = diagnostic_mu(grid, p, rho0, c0, vtrans, cfg.scheme.transform)
    return SimState(grid=grid, rho=rho0, mom=mom, c=c0, vtrans=vtrans,
                    V=V, W=W, mu=mu0, sav=sav)


def compute_dt(grid, time_cfg, a1, b1=None, step_index=0, remaining=None):
    """Adaptive step: min(dt_max, safety * CFL bound), first step capped by
    dt_init, final step clamped to the remaining time. fixed_dt overrides
    adaptation (refinement studies)."""
    if a1 <= 0:
        raise DomainError("wave-speed bound a1 must be positive")
    if time_cfg.fixed_dt > 0:
        dt = time_cfg.fixed_dt
    else:
        speed = math.sqrt(a1) / grid.dx
        if grid.dim == 2:
            speed += math.sqrt(b1) / grid.dy
        dt = min(time_cfg.dt_max, time_cfg.cfl_safety / speed)
        if step_index == 0:
            dt = min(dt, time_cfg.dt_init)
    if remaining is not None:
        dt = min(dt, remaining)
    if dt <= 0:
        raise DomainError("computed a nonpositive time step")
    return dt


def step(state, cfg, force_dt=None, remaining=None):
    """Advance one time level. Returns (new_state, DiagRecord).

    On an auxiliary-guard failure the step is retried from the relaxation
    stage with dt halved, at most MAX_DT_HALVINGS times.
    """
    grid, p = state.grid, cfg.physics
    c_n, v_n, rho_n = state.c, state.vtrans, state.rho
    U = state.U

    consts = ns_relax.subchar_constants(grid, p, U, c_n)
    a1, b1 = (consts, None) if grid.dim == 1 else consts
    if force_dt is not None:
        dt = force_dt
    else:
        dt = compute_dt(grid, cfg.time, a1, b1, state.step_index, remaining)

    F = ns_relax.flux_F(grid, p, U, c_n)
    K = ns_relax.flux_K(grid, p, U, c_n) if grid.dim == 2 else None

    retries = 0
    while True:
        Vstar = ns_relax.relax_star(state.V, F, dt, p.eta)
        Wstar = ns_relax.relax_star(state.W, K, dt, p.eta) if grid.dim == 2 else None
        Unew, Vnew, Wnew = ns_relax.fv_update(grid, p, U, Vstar, a1, dt, c_n,
                                              Wstar=Wstar, b1=b1)
        rho_next = Unew[0]
        mom_next = Unew[1:]
        vel_next = mom_next / rho_next

        system = sav_ch.assemble_system(grid, p, v_n, c_n, rho_n, rho_next, vel_next,
                                        dt, cfg.scheme.transform, cfg.scheme.advect)
        vbar, mu, report = sav_ch.solve_ch(system, tol=cfg.solver.tol,
                                           restart=cfg.solver.restart,
                                           maxiter=cfg.solver.maxiter,
                                           x0=state.last_solution)
        lam, cbar = sav_ch.lambda_correct(grid, p, vbar, c_n, rho_n, rho_next, dt,
                                          cfg.scheme.transform)
        E_bar = physics.energy(grid, p, rho_next, cbar)
        try:
            r_next, C_factor = sav_ch.update_r(grid, p, state.sav.r, state.sav.C0,
                                               cbar, mu, rho_next, E_bar, dt)
        except StepSizeError:
            retries += 1
            if retries > MAX_DT_HALVINGS:
                raise RetryLimitError(
                    f"step at t={state.t:.6g} failed after {MAX_DT_HALVINGS} dt halvings")
            dt *= 0.5
            continue
        break

    xi, sigma, c_next, v_next = sav_ch.rescale(r_next, state.sav.C0, E_bar, cbar, vbar)
    if np.any(c_next <= 0) or np.any(c_next >= 1):
        raise BoundsError("mass fraction left (0, 1) after the rescale")

    dissipation = (ns_relax.weighted_norms(grid, Unew, Vnew, Wnew, a1) + r_next) \
        - (ns_relax.weighted_norms(grid, U, Vstar, Wstar, a1) + C_factor * state.sav.r)

    new_state = SimState(
        grid=grid, rho=rho_next, mom=mom_next, c=c_next, vtrans=v_next,
        V=Vnew, W=Wnew, mu=mu,
        sav=sav_ch.SavState(r=r_next, C0=state.sav.C0, xi=xi, sigma=sigma),
        t=state.t + dt, step_index=state.step_index + 1,
        last_solution=np.concatenate([vbar.ravel(), mu.ravel()]),
    )
    record = DiagRecord(
        t=new_state.t, dt=dt,
        total_mass=new_state.total_mass(),
        energy=physics.energy(grid, p, rho_next, c_next),
        dissipation=dissipation, r=r_next, xi=xi,
        c_min=float(np.min(c_next)), c_max=float(np.max(c_next)),
        solver_iterations=report.iterations, retries=retries,
        cbar_max=float(np.max(cbar)),
    )
    return new_state, record


def make_snapshot(state, params):
    return Snapshot(grid=state.grid, t=state.t, step_index=state.step_index,
                    rho=state.rho.copy(), c=state.c.copy(), vel=state.vel.copy(),
                    p=np.asarray(physics.pressure(params, state.rho, state.c)),
                    mu=state.mu.copy())


def run(cfg, quiet=True):
    """Run to t_final; returns snapshots, diagnostics and the final state."""
    state = init_state(cfg)
    T = cfg.time.t_final
    snapshots = [make_snapshot(state, cfg.physics)]
    diagnostics = []
    interval = cfg.output.snapshot_interval
    next_mark = interval if interval > 0 else math.inf
    stride = cfg.output.diag_stride
    eps = 1e-12 * max(T, 1.0)
    while state.t < T - eps:
        state, record = step(state, cfg, remaining=T - state.t)
        final = state.t >= T - eps
        if state.step_index % stride == 0 or final:
            diagnostics.append(record)
        if state.t >= next_mark - eps and not final:
            snapshots.append(make_snapshot(state, cfg.physics))
            next_mark += interval
            if not quiet:
                print(f"[{cfg.label}] t={state.t:.6g} dt={record.dt:.3e} "
                      f"xi={record.xi:.6f} c in [{record.c_min:.4f}, {record.c_max:.4f}]",
                      flush=True)
    if state.step_index != snapshots[-1].step_index:
        snapshots.append(make_snapshot(state, cfg.physics))
    if not quiet:
        print(f"[{cfg.label}] done: t={state.t:.6g} in {state.step_index} steps", flush=True)
    return RunResult(snapshots=snapshots, diagnostics=diagnostics, final_state=state)


# ---------------------------------------------------------------------------
# refinement harnesses

@dataclass
class ConvergenceResult:
    """Pairwise refinement errors and least-squares orders.

    ``resolutions`` holds the coarse dx (or dt) of each consecutive pair;
    ``errors`` maps field name ('rho', 'c', 'v', 'total') to the error list;
    ``orders`` maps the same keys to the fitted slope.
    """

    kind: str
    resolutions: list
    errors: dict
    orders: dict

    def rows(self):
        """(resolution, total error, fitted order) rows for the CSV format."""
        order = self.orders["total"]
        return [(res, err, order) for res, err in zip(self.resolutions, self.errors["total"])]


def fit_order(resolutions, errors):
    """Least-squares slope of log(error) against log(resolution)."""
    if len(resolutions) < 2:
        raise DomainError("order fit needs at least two points")
    return float(np.polyfit(np.log(resolutions), np.log(errors), 1)[0])


def _fit_all(resolutions, errors):
    # a two-level ladder yields a single pair: the table exists but no
    # slope can be fitted
    if len(resolutions) < 2:
        return {name: math.nan for name in errors}
    return {name: fit_order(resolutions, errs) for name, errs in errors.items()}


def _final_fields(cfg):
    result = run(cfg, quiet=True)
    s = result.final_state
    return {"rho": s.rho, "c": s.c, "v": s.vel[0]}


def _quiet_variant(cfg, **time_overrides):
    time_cfg = replace(cfg.time, **time_overrides)
    output = replace(cfg.output, snapshot_interval=0.0, diag_stride=10**9)
    return cfg.with_overrides(time=time_cfg, output=output)


def convergence_space(cfg):
    """Grid-refinement study at fixed dt; piecewise-constant coarse-to-fine
    comparison of (rho, c, v) between consecutive grids."""
    conv = cfg.convergence
    grids = list(conv.space_grids)
    if len(grids) < 2:
        raise ConfigError("space_grids needs at least two grid sizes")
    if cfg.grid.dim != 1:
        raise ConfigError("the grid-refinement study is defined for 1D runs")
    for coarse, fine in zip(grids, grids[1:]):
        if fine != 2 * coarse:
            raise ConfigError("space_grids must refine by factors of two")

    finals = []
    for nx in grids:
        sub = _quiet_variant(cfg, fixed_dt=conv.dt_space, t_final=conv.t_final_space)
        sub = sub.with_overrides(grid=Grid.line(nx, lx=cfg.grid.lx))
        finals.append(_final_fields(sub))

    resolutions, errors = [], {"rho": [], "c": [], "v": [], "total": []}
    for i in range(len(grids) - 1):
        nx_c = grids[i]
        dx_fine = cfg.grid.lx / grids[i + 1]
        total = 0.0
        for name in ("rho", "c", "v"):
            coarse = np.repeat(finals[i][name], 2)
            diff = finals[i + 1][name] - coarse
            err = float(np.sqrt(dx_fine * np.sum(diff * diff)))
            errors[name].append(err)
            total += err
        errors["total"].append(total)
        resolutions.append(cfg.grid.lx / nx_c)
    orders = _fit_all(resolutions, errors)
    return ConvergenceResult(kind="space", resolutions=resolutions,
                             errors=errors, orders=orders)


def convergence_time(cfg):
    """Step-refinement study on a fixed grid; same-grid L2 differences of
    (rho, c, v) between consecutive dt levels."""
    conv = cfg.convergence
    if conv.time_refinements < 2:
        raise ConfigError("time_refinements must be at least 2")
    dts = [conv.dt_time_base / 2**k for k in range(conv.time_refinements)]
    finals = []
    for dt in dts:
        sub = _quiet_variant(cfg, fixed_dt=dt, t_final=conv.t_final_time)
        finals.append(_final_fields(sub))

    dx = cfg.grid.dx
    resolutions, errors = [], {"rho": [], "c": [], "v": [], "total": []}
    for i in range(len(dts) - 1):
        total = 0.0
        for name in ("rho", "c", "v"):
            diff = finals[i][name] - finals[i + 1][name]
            err = float(np.sqrt(dx * np.sum(diff * diff)))
            errors[name].append(err)
            total += err
        errors["total"].append(total)
        resolutions.append(dts[i])
    orders = _fit_all(resolutions, errors)
    return ConvergenceResult(kind="time", resolutions=resolutions,
                             errors=errors, orders=orders)
