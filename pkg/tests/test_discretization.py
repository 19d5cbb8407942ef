"""Grid, difference operators, quadratures, and the eigenvalue solve."""

import math

import numpy as np
import pytest

from piezobeam.discretization import (Grid, apply_dplus, apply_dxx, as_field,
                                      dxx_diagonals, h_norm_sq, l2_norm_sq,
                                      lp_seminorm, midpoint_inner,
                                      smallest_eigenvalue, weighted_inner)
from piezobeam.errors import DimensionMismatchError
from piezobeam.integrator import State
from piezobeam.model import PhysicalParams


def test_grid_geometry():
    grid = Grid(2.0, 8)
    assert grid.dx == 0.25
    nodes = grid.nodes()
    assert nodes[0] == pytest.approx(0.25)
    assert nodes[-1] == pytest.approx(2.0)
    assert len(nodes) == 8
    w = grid.weights()
    assert w[-1] == pytest.approx(0.5 * grid.dx)
    assert np.all(w[:-1] == grid.dx)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(-1.0, 10)
    with pytest.raises(ValueError):
        Grid(1.0, 1)


def test_as_field_rejects_bad_shapes_and_nans():
    grid = Grid(1.0, 4)
    with pytest.raises(DimensionMismatchError):
        as_field(grid, [1.0, 2.0])
    with pytest.raises(ValueError):
        as_field(grid, [1.0, np.nan, 0.0, 0.0])
    u = as_field(grid, [1, 2, 3, 4])
    assert u.dtype == float


def test_quadrature_weights_integrate_linear_exactly():
    # trapezoid on [0, L] with u(0) = 0: integral of x over (0, 1) = 1/2
    grid = Grid(1.0, 50)
    assert weighted_inner(grid, grid.nodes(), np.ones(50)) == pytest.approx(0.5)


def test_dxx_matches_diagonals():
    grid = Grid(1.0, 20)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(20)
    sub, diag, sup = dxx_diagonals(grid)
    expected = diag * u
    expected[1:] += sub[1:] * u[:-1]
    expected[:-1] += sup[:-1] * u[1:]
    assert np.allclose(apply_dxx(grid, u), expected, rtol=1e-14)


def test_dxx_exact_on_quadratic_with_binary_dx():
    # dx = 1/64 is binary-exact, so u = x(2 - x) incurs no evaluation
    # rounding and the second difference is exactly -2
    grid = Grid(1.0, 64)
    x = grid.nodes()
    u = x * (2.0 - x)
    assert np.max(np.abs(apply_dxx(grid, u) + 2.0)) == 0.0


def test_summation_by_parts_identity():
    grid = Grid(1.0, 200)
    rng = np.random.default_rng(1)
    for _ in range(20):
        u = rng.standard_normal(200)
        lhs = weighted_inner(grid, -apply_dxx(grid, u), u)
        du = apply_dplus(grid, u)
        rhs = midpoint_inner(grid, du, du)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_dplus_on_linear_field():
    grid = Grid(1.0, 30)
    assert np.allclose(apply_dplus(grid, 3.0 * grid.nodes()), 3.0)


def test_lp_seminorm_matches_l2():
    grid = Grid(1.0, 40)
    u = np.sin(grid.nodes())
    assert lp_seminorm(grid, u, 2) == pytest.approx(math.sqrt(l2_norm_sq(grid, u)))
    with pytest.raises(ValueError):
        lp_seminorm(grid, u, 3)


def test_h_norm_velocity_only():
    # pure v-velocity state: ||z||^2 = rho*||vt||^2
    grid = Grid(1.0, 50)
    params = PhysicalParams(rho=2.0)
    vt = np.sin(grid.nodes())
    z = State(np.zeros(50), np.zeros(50), vt, np.zeros(50))
    assert h_norm_sq(grid, params, z) == pytest.approx(2.0 * l2_norm_sq(grid, vt))


def test_h_norm_gradient_terms():
    # v = x, p = 0, unit params: alpha1*1 + beta*gamma^2 integrated over (0,1)
    grid = Grid(1.0, 100)
    z = State(grid.nodes(), np.zeros(100), np.zeros(100), np.zeros(100))
    params = PhysicalParams(alpha1=1.0, beta=1.0, gamma=2.0)
    assert h_norm_sq(grid, params, z) == pytest.approx(1.0 + 4.0)


def test_smallest_eigenvalue_close_to_analytic():
    grid = Grid(1.0, 200)
    lam = smallest_eigenvalue(grid)
    exact = (math.pi / 2.0) ** 2
    assert abs(lam - exact) <= 5e-4


def test_smallest_eigenvalue_second_order():
    exact = (math.pi / 2.0) ** 2
    e200 = abs(smallest_eigenvalue(Grid(1.0, 200)) - exact)
    e400 = abs(smallest_eigenvalue(Grid(1.0, 400)) - exact)
    assert e200 / e400 >= 3.5
