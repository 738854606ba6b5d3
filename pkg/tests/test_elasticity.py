import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from confsim.grid_field import Grid, ScalarField, d1
from confsim.material import MaterialParams
from confsim.elasticity import (
    GreenKernel,
    OutOfDomain,
    elastic_rhs,
    fd_residual,
    homogeneous_solutions,
    solve_fd,
    solve_green,
)

A, D = 1.0, 2.0


def params(mu=2.0, lam=0.2):
    return MaterialParams(c=1.0, nu=0.1, mu=mu, lam=lam, e=0.06, well_weight=1.0)


def sine_case(grid):
    """Exact displacement vanishing at both ends plus its operator image."""
    k = math.pi / (grid.d - grid.a)
    u = np.sin(k * (grid.x - grid.a))
    up = k * np.cos(k * (grid.x - grid.a))
    upp = -(k**2) * np.sin(k * (grid.x - grid.a))
    g = upp + 2.0 * up / grid.x - 2.0 * u / grid.x**2
    return u, g


class TestHomogeneousSolutions:
    def test_boundary_values(self):
        u1, u2 = homogeneous_solutions(A, D)
        assert u1(A) == 0.0
        assert u2(D) == 0.0

    def test_operator_annihilates(self):
        # substitute into (x^2 u')' - 2u = x^2 u'' + 2x u' - 2u with derivatives
        # worked out by hand for u = x + c/x^2
        for c, sign in ((A**3, -1.0), (D**3, -1.0)):
            for x in (1.1, 1.5, 1.9):
                u = x + sign * c / x**2
                up = 1.0 - sign * 2.0 * c / x**3 * -1.0  # d/dx (c x^-2) = -2c x^-3
                up = 1.0 + sign * (-2.0) * c / x**3
                upp = sign * 6.0 * c / x**4
                residual = x**2 * upp + 2.0 * x * up - 2.0 * u
                assert abs(residual) < 1e-10

    def test_euler_exponents(self):
        # (x^2 (x^m)')' - 2 x^m = (m^2 + m - 2) x^m, roots are the exponents
        roots = sorted(np.roots([1.0, 1.0, -2.0]))
        assert roots[0] == pytest.approx(-2.0, abs=1e-12)
        assert roots[1] == pytest.approx(1.0, abs=1e-12)

    def test_wronskian_normalization_constant(self):
        kernel = GreenKernel(A, D)
        for x in np.linspace(1.05, 1.95, 10):
            w = kernel.u1(x) * kernel.u2_prime(x) - kernel.u1_prime(x) * kernel.u2(x)
            assert abs(x**2 * w - kernel.norm_const) < 1e-10


class TestGreenKernel:
    def test_symmetry(self):
        kernel = GreenKernel(A, D)
        rng = np.random.default_rng(1)
        for x, y in rng.uniform(A, D, size=(20, 2)):
            assert abs(kernel.eval(x, y) - kernel.eval(y, x)) < 1e-12

    def test_boundary_vanishing(self):
        kernel = GreenKernel(A, D)
        rng = np.random.default_rng(2)
        for y in rng.uniform(A, D, size=20):
            assert abs(kernel.eval(A, y)) < 1e-14
            assert abs(kernel.eval(D, y)) < 1e-14

    def test_derivative_jump(self):
        kernel = GreenKernel(A, D)
        rng = np.random.default_rng(3)
        for y in rng.uniform(1.05, 1.95, size=20):
            target = 1.0 / y**2
            delta = 2.0e-4
            g1 = kernel.eval_dx(y + delta, y) - kernel.eval_dx(y - delta, y)
            g2 = kernel.eval_dx(y + delta / 2, y) - kernel.eval_dx(y - delta / 2, y)
            # first-order in delta, so halving roughly halves the error
            assert abs(g1 - target) < 0.05
            assert abs(2.0 * g2 - g1 - target) < 1e-6

    def test_jump_error_scales_linearly(self):
        kernel = GreenKernel(A, D)
        y = 1.5
        target = 1.0 / y**2
        e1 = abs(kernel.eval_dx(y + 1e-3, y) - kernel.eval_dx(y - 1e-3, y) - target)
        e2 = abs(kernel.eval_dx(y + 5e-4, y) - kernel.eval_dx(y - 5e-4, y) - target)
        assert e1 / e2 == pytest.approx(2.0, abs=0.3)

    def test_operator_residual_off_diagonal(self):
        kernel = GreenKernel(A, D)
        rng = np.random.default_rng(4)
        for _ in range(20):
            x, y = rng.uniform(A, D, size=2)
            if abs(x - y) < 1e-3:
                continue
            assert abs(kernel.operator_residual(x, y)) < 1e-8

    def test_out_of_domain(self):
        kernel = GreenKernel(A, D)
        with pytest.raises(OutOfDomain):
            kernel.eval(0.5, 1.5)
        with pytest.raises(OutOfDomain):
            kernel.eval(1.5, 2.5)


class TestElasticRhs:
    def test_zero_fields(self):
        grid = Grid(A, D, 17)
        z = ScalarField.zeros(grid)
        assert np.all(elastic_rhs(z, z, params()).values == 0.0)

    def test_lambda_zero_reduces_to_body_term(self):
        grid = Grid(A, D, 17)
        rng = np.random.default_rng(5)
        s_x = ScalarField(grid, rng.normal(size=grid.n))
        b = ScalarField(grid, rng.normal(size=grid.n))
        p = params(mu=2.0, lam=0.0)
        out = elastic_rhs(s_x, b, p)
        assert np.array_equal(out.values, b.values / 2.0)

    def test_matches_pointwise_formula(self):
        grid = Grid(A, D, 17)
        rng = np.random.default_rng(6)
        s_x = ScalarField(grid, rng.normal(size=grid.n))
        b = ScalarField(grid, rng.normal(size=grid.n))
        p = params()
        out = elastic_rhs(s_x, b, p)
        expected = (p.lam / p.mu) * s_x.values + b.values / p.mu
        assert np.max(np.abs(out.values - expected)) < 1e-15


class TestDirectSolve:
    def test_zero_rhs_gives_zero(self):
        grid = Grid(A, D, 65)
        u = solve_fd(ScalarField.zeros(grid))
        assert np.all(u.values == 0.0)

    def test_quadratic_is_reproduced_exactly(self):
        # second-order stencils are exact on quadratics, so the discrete
        # solution coincides with the continuum one up to solver roundoff
        grid = Grid(A, D, 129)
        u_star = (grid.x - A) * (D - grid.x)
        up = (A + D) - 2.0 * grid.x
        g = -2.0 + 2.0 * up / grid.x - 2.0 * u_star / grid.x**2
        u = solve_fd(ScalarField(grid, g))
        assert np.max(np.abs(u.values - u_star)) < 1e-11

    def test_sine_convergence_rate(self):
        errs, hs = [], []
        for n in (65, 129, 257):
            grid = Grid(A, D, n)
            u_star, g = sine_case(grid)
            u = solve_fd(ScalarField(grid, g))
            errs.append(np.max(np.abs(u.values - u_star)))
            hs.append(grid.h)
        rate = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert rate == pytest.approx(2.0, abs=0.2)

    def test_linearity(self):
        grid = Grid(A, D, 65)
        rng = np.random.default_rng(7)
        g1 = ScalarField(grid, rng.normal(size=grid.n))
        g2 = ScalarField(grid, rng.normal(size=grid.n))
        alpha, beta = 1.7, -0.6
        combo = ScalarField(grid, alpha * g1.values + beta * g2.values)
        lhs = solve_fd(combo).values
        rhs = alpha * solve_fd(g1).values + beta * solve_fd(g2).values
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_discrete_residual(self):
        grid = Grid(A, D, 129)
        rng = np.random.default_rng(8)
        g = ScalarField(grid, rng.normal(size=grid.n))
        u = solve_fd(g)
        assert fd_residual(u, g) < 1e-12

    def test_discrete_energy_identity(self):
        # sum (x^2 u_x^2 + 2 u^2) h = -sum x^2 g u h up to O(h^2)
        def mismatch(n):
            grid = Grid(A, D, n)
            _, g = sine_case(grid)
            gf = ScalarField(grid, g)
            u = solve_fd(gf)
            u_x = d1(u).values
            lhs = trapezoid(grid.x**2 * u_x**2 + 2.0 * u.values**2, dx=grid.h)
            rhs = -trapezoid(grid.x**2 * g * u.values, dx=grid.h)
            return abs(lhs - rhs)

        m1, m2 = mismatch(65), mismatch(129)
        assert m1 / m2 > 2.0 ** 1.5


class TestGreenSolve:
    def test_zero_inputs(self):
        grid = Grid(A, D, 65)
        z = ScalarField.zeros(grid)
        u = solve_green(GreenKernel(A, D), z, z, params())
        assert np.all(u.values == 0.0)

    def test_cross_agreement_with_direct(self):
        grid = Grid(A, D, 129)
        kernel = GreenKernel(A, D)
        p = params()
        rng = np.random.default_rng(9)
        tol = max(1e-6, 5.0 * grid.h**2)
        xi = (grid.x - A) / (D - A)
        for _ in range(10):
            coeff_s = rng.uniform(-1, 1, 3)
            coeff_b = rng.uniform(-1, 1, 3)
            s = ScalarField(
                grid, sum(c * np.sin((m + 1) * math.pi * xi) for m, c in enumerate(coeff_s))
            )
            b = ScalarField(grid, sum(c * xi**m for m, c in enumerate(coeff_b)))
            u_direct = solve_fd(elastic_rhs(d1(s), b, p))
            u_green = solve_green(kernel, s, b, p)
            assert np.max(np.abs(u_direct.values - u_green.values)) < tol

    def test_manufactured_recovery_rate(self):
        # with no gradient coupling, b = mu * g drives u to the closed form
        p = params(mu=2.0, lam=0.0)
        errs, hs = [], []
        for n in (65, 129, 257):
            grid = Grid(A, D, n)
            u_star, g = sine_case(grid)
            b = ScalarField(grid, p.mu * g)
            u = solve_green(GreenKernel(A, D), ScalarField.zeros(grid), b, p)
            errs.append(np.max(np.abs(u.values - u_star)))
            hs.append(grid.h)
        rate = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert rate >= 1.9
