import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnsch import mesh
from gnsch.errors import DomainError


def periodic_field(seed, n):
    return np.random.default_rng(seed).normal(size=n)


class TestGrid:
    def test_spacing(self):
        g = mesh.Grid.line(128, 1.0)
        assert g.dx == pytest.approx(1.0 / 128)
        g2 = mesh.Grid.box(64, 32, 1.0, 2.0)
        assert g2.dy == pytest.approx(2.0 / 32)
        assert g2.ncells == 64 * 32

    def test_cell_centers(self):
        g = mesh.Grid.line(4, 1.0)
        assert np.allclose(g.x_centers(), [0.125, 0.375, 0.625, 0.875])

    def test_invalid(self):
        with pytest.raises(DomainError):
            mesh.Grid(dim=3, nx=4, ny=4, lx=1.0, ly=1.0)
        with pytest.raises(DomainError):
            mesh.Grid.line(0)
        with pytest.raises(DomainError):
            mesh.Grid(dim=1, nx=4, ny=2, lx=1.0, ly=1.0)


class TestCentralGradient:
    def test_constant_is_zero(self):
        g = mesh.Grid.line(16)
        out = mesh.central_gradient(g, np.full(16, 3.7))
        assert np.all(out == 0.0)

    def test_hand_stencil(self):
        # (f_{j+1} - f_{j-1}) / (2 dx) with periodic wrap, dx = 1/4
        g = mesh.Grid.line(4, 1.0)
        out = mesh.central_gradient(g, np.array([0.0, 1.0, 0.0, -1.0]))
        assert np.allclose(out, [4.0, 0.0, -4.0, 0.0])

    def test_sin_second_order(self):
        g = mesh.Grid.line(256, 1.0)
        x = g.x_centers()
        out = mesh.central_gradient(g, np.sin(2 * np.pi * x))
        exact = 2 * np.pi * np.cos(2 * np.pi * x)
        bound = (2 * np.pi) ** 3 * g.dx**2 / 6.0
        assert np.max(np.abs(out - exact)) <= bound * 1.01

    def test_axis_out_of_range(self):
        g = mesh.Grid.line(8)
        with pytest.raises(DomainError):
            mesh.central_gradient(g, np.zeros(8), axis=1)


class TestSecondDifference:
    def test_constant_is_zero(self):
        g = mesh.Grid.line(8)
        assert np.all(mesh.second_difference(g, np.full(8, 2.0)) == 0.0)

    def test_hand_stencil(self):
        g = mesh.Grid.line(4)
        out = mesh.second_difference(g, np.array([0.0, 1.0, 0.0, 1.0]))
        assert np.allclose(out, [2.0, -2.0, 2.0, -2.0])

    def test_telescoping(self):
        g = mesh.Grid.line(33)
        f = periodic_field(0, 33)
        assert abs(np.sum(mesh.second_difference(g, f))) < 1e-12 * np.max(np.abs(f)) * 33


class TestLaplacian:
    def test_constant(self):
        g = mesh.Grid.box(8, 8)
        assert np.all(mesh.laplacian(g, np.full((8, 8), 5.0)) == 0.0)

    def test_sin_second_order(self):
        g = mesh.Grid.line(256, 1.0)
        x = g.x_centers()
        out = mesh.laplacian(g, np.sin(2 * np.pi * x))
        exact = -((2 * np.pi) ** 2) * np.sin(2 * np.pi * x)
        bound = (2 * np.pi) ** 4 * g.dx**2 / 12.0
        assert np.max(np.abs(out - exact)) <= bound * 1.01

    def test_2d_separable_matches_axis_sum(self):
        g = mesh.Grid.box(16, 16)
        rng = np.random.default_rng(3)
        fx = rng.normal(size=16)
        fy = rng.normal(size=16)
        f = fx[:, None] * fy[None, :]
        gx = mesh.Grid.line(16)
        lap_x = mesh.laplacian(gx, fx)[:, None] * fy[None, :]
        lap_y = fx[:, None] * mesh.laplacian(gx, fy)[None, :]
        assert np.allclose(mesh.laplacian(g, f), lap_x + lap_y, rtol=1e-12, atol=1e-12)


class TestDivCoefGrad:
    def test_constant_mu_no_flux(self):
        g = mesh.Grid.line(12)
        b = np.abs(periodic_field(1, 12))
        assert np.all(mesh.div_coef_grad(g, b, np.full(12, 4.2)) == 0.0)

    def test_unit_coefficient_is_laplacian(self):
        g = mesh.Grid.box(8, 6)
        mu = periodic_field(2, 48).reshape(8, 6)
        out = mesh.div_coef_grad(g, np.ones((8, 6)), mu)
        assert np.allclose(out, mesh.laplacian(g, mu), rtol=1e-13, atol=1e-13)

    def test_discrete_divergence_theorem(self):
        g = mesh.Grid.line(40)
        b = np.abs(periodic_field(4, 40))
        mu = periodic_field(5, 40)
        total = mesh.integrate(g, mesh.div_coef_grad(g, b, mu))
        scale = np.max(np.abs(mu)) * np.max(b) / g.dx
        assert abs(total) <= 1e-12 * scale

    def test_negative_coefficient_rejected(self):
        g = mesh.Grid.line(8)
        b = np.ones(8)
        b[3] = -1e-12
        with pytest.raises(DomainError):
            mesh.div_coef_grad(g, b, np.zeros(8))


class TestIntegrate:
    def test_unit_1d(self):
        g = mesh.Grid.line(17)
        assert mesh.integrate(g, np.ones(17)) == pytest.approx(1.0, abs=1e-15)

    def test_unit_square(self):
        g = mesh.Grid.box(64, 64)
        assert mesh.integrate(g, np.ones((64, 64))) == pytest.approx(1.0, abs=1e-13)

    def test_midpoint_symmetry(self):
        g = mesh.Grid.line(128, 1.0)
        assert mesh.integrate(g, g.x_centers()) == pytest.approx(0.5, abs=1e-15)


class TestOperatorProperties:
    @given(st.integers(0, 2**31), st.integers(4, 64))
    @settings(max_examples=25, deadline=None)
    def test_summation_by_parts(self, seed, n):
        g = mesh.Grid.line(n)
        rng = np.random.default_rng(seed)
        u, v = rng.normal(size=n), rng.normal(size=n)
        lhs = mesh.integrate(g, mesh.second_difference(g, u) * v)
        rhs = mesh.integrate(g, u * mesh.second_difference(g, v))
        scale = max(1.0, abs(lhs), abs(rhs), np.max(np.abs(u)) * np.max(np.abs(v)) * n * g.dx)
        assert abs(lhs - rhs) <= 1e-12 * scale

    @given(st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_flux_telescoping_2d(self, seed):
        g = mesh.Grid.box(10, 12)
        rng = np.random.default_rng(seed)
        b = np.abs(rng.normal(size=(10, 12)))
        mu = rng.normal(size=(10, 12))
        total = mesh.integrate(g, mesh.div_coef_grad(g, b, mu))
        scale = np.max(np.abs(mu)) * np.max(b) / min(g.dx, g.dy)
        assert abs(total) <= 1e-12 * scale

    @given(st.integers(0, 2**31), st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=25, deadline=None)
    def test_linearity(self, seed, alpha, beta):
        g = mesh.Grid.line(24)
        rng = np.random.default_rng(seed)
        u, v = rng.normal(size=24), rng.normal(size=24)
        for op in (lambda f: mesh.central_gradient(g, f),
                   lambda f: mesh.second_difference(g, f),
                   lambda f: mesh.laplacian(g, f)):
            combined = op(alpha * u + beta * v)
            split = alpha * op(u) + beta * op(v)
            assert np.allclose(combined, split, rtol=1e-12, atol=1e-10)
