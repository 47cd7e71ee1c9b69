import numpy as np
import pytest

from gnsch import linsolve, mesh, physics, sav_ch
from gnsch.errors import BoundsError, DomainError, StepSizeError


@pytest.fixture
def params():
    return physics.PhysParams(a=3.0, alpha1=1.2, alpha2=0.5, theta=4.0, k=100.0)


def smooth_inputs(grid, seed=0, dim=1):
    rng = np.random.default_rng(seed)
    shape = grid.shape
    cn = 0.45 + 0.1 * rng.random(shape)
    vn = physics.transform_inverse(cn)
    rho_n = 0.85 + 0.1 * rng.random(shape)
    rho_next = rho_n + 1e-3 * rng.standard_normal(shape)
    vel = 0.5 * rng.standard_normal((grid.dim,) + shape)
    return vn, cn, rho_n, rho_next, vel


def manual_row_residual(grid, params, system, vn, cn, rho_n, rho_next, vel, dt,
                        x, advect="upwind"):
    """Apply the documented row formulas with mesh operators directly."""
    N = grid.ncells
    vbar = x[:N].reshape(grid.shape)
    mu = x[N:].reshape(grid.shape)
    tp = physics.transform_deriv(vn)
    inv_tr = 1.0 / (tp * rho_next)
    b = physics.mobility(params, cn)

    adv = np.zeros(grid.shape)
    for axis in range(grid.dim):
        h = grid.spacing(axis)
        u = vel[axis]
        fwd = (np.roll(vbar, -1, axis=axis) - vbar) / h
        bwd = (vbar - np.roll(vbar, 1, axis=axis)) / h
        if advect == "upwind":
            adv = adv + np.where(u >= 0, u * bwd, u * fwd)
        else:
            adv = adv + u * mesh.central_gradient(grid, vbar, axis=axis)
    row1 = vbar / dt + adv - mesh.div_coef_grad(grid, b, mu) * inv_tr
    row2 = mu + params.gamma * tp / rho_next * mesh.laplacian(grid, vbar)
    return np.concatenate([row1.ravel(), row2.ravel()])


class TestAssembly:
    @pytest.mark.parametrize("dim,advect", [(1, "upwind"), (1, "central"),
                                            (2, "upwind"), (2, "central")])
    def test_matrix_matches_row_formulas(self, params, dim, advect):
        grid = mesh.Grid.line(12) if dim == 1 else mesh.Grid.box(6, 5)
        vn, cn, rho_n, rho_next, vel = smooth_inputs(grid, seed=dim)
        dt = 1e-5
        system = sav_ch.assemble_system(grid, params, vn, cn, rho_n, rho_next,
                                        vel, dt, advect=advect)
        rng = np.random.default_rng(9)
        x = rng.standard_normal(2 * grid.ncells)
        via_matrix = system.matrix.matvec(x)
        via_formula = manual_row_residual(grid, params, system, vn, cn, rho_n,
                                          rho_next, vel, dt, x, advect)
        scale = np.max(np.abs(via_formula))
        assert np.max(np.abs(via_matrix - via_formula)) < 1e-12 * scale

    def test_operator_matches_matrix(self, params):
        grid = mesh.Grid.box(8, 8)
        vn, cn, rho_n, rho_next, vel = smooth_inputs(grid, seed=4)
        system = sav_ch.assemble_system(grid, params, vn, cn, rho_n, rho_next, vel, 1e-5)
        x = np.random.default_rng(5).standard_normal(2 * grid.ncells)
        ym = system.matrix.matvec(x)
        yo = system.operator.matvec(x)
        assert np.max(np.abs(ym - yo)) < 1e-13 * np.max(np.abs(ym))
        assert np.array_equal(system.matrix.diagonal(), system.operator.diagonal())

    def test_uniform_fixed_point(self, params):
        grid = mesh.Grid.line(16)
        cn = np.full(16, 0.47)
        vn = physics.transform_inverse(cn)
        rho = np.full(16, 0.9)
        vel = np.full((1, 16), 0.8)
        dt = 1e-4
        system = sav_ch.assemble_system(grid, params, vn, cn, rho, rho, vel, dt)
        mu_exact = physics.dpsi0_dc(params, rho, cn)
        x_exact = np.concatenate([vn, mu_exact])
        assert np.allclose(system.matrix.matvec(x_exact), system.rhs, rtol=1e-12, atol=1e-12)

    def test_large_dt_reduces_to_flux_balance(self, params):
        # with vel = 0 and dt -> inf the first row block approaches
        # -div(b grad mu) / (T' rho) = F_c / (T' rho)
        grid = mesh.Grid.line(10)
        vn, cn, rho_n, rho_next, _ = smooth_inputs(grid, seed=2)
        vel = np.zeros((1, 10))
        dt = 1e12
        system = sav_ch.assemble_system(grid, params, vn, cn, rho_n, rho_next, vel, dt)
        mu = np.random.default_rng(1).standard_normal(10)
        x = np.concatenate([np.zeros(10), mu])
        block1 = system.matrix.matvec(x)[:10]
        expect = -mesh.div_coef_grad(grid, physics.mobility(params, cn), mu) \
            / (physics.transform_deriv(vn) * rho_next)
        assert np.allclose(block1, expect, rtol=1e-10, atol=1e-12)

    def test_rejects_vanished_transform_derivative(self, params):
        grid = mesh.Grid.line(8)
        vn = np.full(8, 800.0)  # T'(v) underflows to zero
        cn = np.full(8, 0.5)
        rho = np.ones(8)
        with pytest.raises(DomainError):
            sav_ch.assemble_system(grid, params, vn, cn, rho, rho, np.zeros((1, 8)), 1e-5)

    def test_rejects_nonpositive_density(self, params):
        grid = mesh.Grid.line(8)
        cn = np.full(8, 0.5)
        vn = physics.transform_inverse(cn)
        rho = np.ones(8)
        bad = rho.copy()
        bad[0] = 0.0
        with pytest.raises(DomainError):
            sav_ch.assemble_system(grid, params, vn, cn, rho, bad, np.zeros((1, 8)), 1e-5)


class TestSolve:
    def test_toy_system_matches_dense_lu(self, params):
        grid = mesh.Grid.line(8)
        vn, cn, rho_n, rho_next, vel = smooth_inputs(grid, seed=7)
        system = sav_ch.assemble_system(grid, params, vn, cn, rho_n, rho_next, vel, 1e-5)
        vbar, mu, report = sav_ch.solve_ch(system, tol=1e-12)
        dense = linsolve.dense_solve(system.matrix.to_dense(), system.rhs)
        stacked = np.concatenate([vbar, mu])
        assert report.residual <= 1e-12
        assert np.max(np.abs(stacked - dense)) < 1e-10

    def test_solver_independence_up_to_32_cells(self, params):
        for nx in (16, 32):
            grid = mesh.Grid.line(nx)
            vn, cn, rho_n, rho_next, vel = smooth_inputs(grid, seed=nx)
            system = sav_ch.assemble_system(grid, params, vn, cn, rho_n, rho_next, vel, 1e-5)
            vbar, mu, _ = sav_ch.solve_ch(system, tol=1e-12)
            dense = linsolve.dense_solve(system.matrix.to_dense(), system.rhs)
            assert np.max(np.abs(np.concatenate([vbar, mu]) - dense)) < 1e-8


class TestLambdaCorrect:
    def test_consistency(self, params):
        grid = mesh.Grid.line(16)
        cn = 0.3 + 0.2 * np.random.default_rng(0).random(16)
        vbar = physics.transform_inverse(cn)
        rho = np.ones(16)
        lam, cbar = sav_ch.lambda_correct(grid, params, vbar, cn, rho, rho, 1e-5)
        assert lam == pytest.approx(1.0, rel=1e-12)
        assert np.allclose(cbar, cn, rtol=1e-12)

    def test_domain_length_invariance(self, params):
        cn_val, tv = 0.5, 0.4
        for lx in (1.0, 2.0):
            grid = mesh.Grid.line(16, lx)
            vbar = np.full(16, float(physics.transform_inverse(tv)))
            rho = np.ones(16)
            lam, _ = sav_ch.lambda_correct(grid, params, vbar, np.full(16, cn_val),
                                           rho, rho, 1e-5)
            assert lam == pytest.approx(cn_val / tv, rel=1e-12)

    def test_ratio_arithmetic(self, params):
        grid = mesh.Grid.line(8)
        vbar = np.full(8, float(physics.transform_inverse(0.4)))
        rho = np.ones(8)
        lam, cbar = sav_ch.lambda_correct(grid, params, vbar, np.full(8, 0.5),
                                          rho, rho, 1e-5)
        assert lam == pytest.approx(1.25, rel=1e-12)
        assert np.allclose(cbar, 0.5, rtol=1e-12)

    def test_density_weighted_balance(self, params):
        # the enforced identity: int rho^{n+1} cbar = int rho^n c^n + dt int F_c
        grid = mesh.Grid.line(32)
        rng = np.random.default_rng(5)
        cn = 0.3 + 0.3 * rng.random(32)
        rho_n = 0.6 + 0.4 * rng.random(32)
        rho_next = rho_n + 0.01 * rng.standard_normal(32)
        vbar = physics.transform_inverse(np.clip(cn + 0.05 * rng.standard_normal(32),
                                                 0.05, 0.95))
        p = physics.PhysParams(growth_rate=20.0, c_star=0.9)
        dt = 1e-4
        lam, cbar = sav_ch.lambda_correct(grid, p, vbar, cn, rho_n, rho_next, dt)
        lhs = mesh.integrate(grid, rho_next * cbar)
        rhs = mesh.integrate(grid, rho_n * cn + dt * physics.source_Fc(p, rho_n, cn))
        assert lhs == pytest.approx(rhs, rel=1e-13)


class TestUpdateR:
    def test_no_dissipation_no_source(self, params):
        grid = mesh.Grid.line(8)
        cbar = np.full(8, 0.5)
        mu = np.full(8, 2.0)
        r_next, factor = sav_ch.update_r(grid, params, 10.0, 0.0, cbar, mu,
                                         np.ones(8), 1.0, 1e-3)
        assert r_next == pytest.approx(10.0)
        assert factor == pytest.approx(1.0)

    def test_monotone_without_source(self, params):
        grid = mesh.Grid.line(32)
        rng = np.random.default_rng(3)
        cbar = 0.3 + 0.4 * rng.random(32)
        mu = rng.standard_normal(32)
        r_next, factor = sav_ch.update_r(grid, params, 5.0, 100.0, cbar, mu,
                                         np.ones(32), 50.0, 1e-3)
        assert r_next <= 5.0
        assert factor <= 1.0

    def test_hand_ratio(self, params):
        # dissipation integral: b(0.5) = 1/4, |grad mu|^2 = (0,16,0,16),
        # dx = 1/4 -> integral 2.0; dt/(E+C0) = 0.125 -> denominator 1.25
        grid = mesh.Grid.line(4)
        cbar = np.full(4, 0.5)
        mu = np.array([0.0, 1.0, 2.0, 1.0])
        r_next, factor = sav_ch.update_r(grid, params, 10.0, 0.0, cbar, mu,
                                         np.ones(4), 1.0, 0.125)
        assert r_next == pytest.approx(8.0, rel=1e-14)
        assert factor == pytest.approx(0.8, rel=1e-14)

    def test_guard_failure_raises(self):
        p = physics.PhysParams(growth_rate=20.0, c_star=0.9)
        grid = mesh.Grid.line(8)
        cbar = np.full(8, 0.95)          # above saturation: F_c < 0
        mu = np.full(8, 50.0)            # large positive potential
        with pytest.raises(StepSizeError):
            sav_ch.update_r(grid, p, 1.0, 0.0, cbar, mu, np.ones(8), 1.0, 10.0)


class TestRescale:
    def test_unit_ratio_identity(self):
        cbar = np.array([0.2, 0.8])
        vbar = np.array([-1.0, 1.0])
        xi, sigma, c2, v2 = sav_ch.rescale(3.0, 1.0, 2.0, cbar, vbar)
        assert xi == pytest.approx(1.0)
        assert sigma == pytest.approx(1.0)
        assert np.array_equal(c2, cbar)
        assert np.array_equal(v2, vbar)

    def test_known_sigma(self):
        xi, sigma, _, _ = sav_ch.rescale(0.9, 0.0, 1.0, np.array([0.5]), np.array([0.0]))
        assert xi == pytest.approx(0.9)
        assert sigma == pytest.approx(0.99)

    def test_continuity_at_zero(self):
        xi, sigma, _, _ = sav_ch.rescale(1e-8, 0.0, 1.0, np.array([0.5]), np.array([0.0]))
        assert 0 < sigma < 3e-8

    def test_out_of_range_raises(self):
        with pytest.raises(BoundsError):
            sav_ch.rescale(2.5, 0.0, 1.0, np.array([0.5]), np.array([0.0]))
        with pytest.raises(BoundsError):
            sav_ch.rescale(0.0, 0.0, 1.0, np.array([0.5]), np.array([0.0]))
        with pytest.raises(BoundsError):
            sav_ch.rescale(-1.0, 0.0, 1.0, np.array([0.5]), np.array([0.0]))


class TestSavState:
    def test_initial_shift(self):
        sav = sav_ch.SavState.initial(E0=90.0, c_under=100.0)
        assert sav.C0 == pytest.approx(290.0)
        assert sav.r == pytest.approx(380.0)
        assert sav.xi == 1.0 and sav.sigma == 1.0
