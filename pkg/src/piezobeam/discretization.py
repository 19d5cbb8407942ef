"""1-D grid and difference operators on the clamped/free beam domain.

The left end x=0 carries a homogeneous Dirichlet condition and is
eliminated from the unknowns: fields live on the nodes x_j = j*dx,
j = 1..N.  The right end carries a homogeneous Neumann condition
realized by ghost reflection u_{N+1} = u_{N-1}.

With the trapezoid weights (full weight at interior nodes, half weight
at x_N, the Dirichlet node contributing nothing) the second-difference
operator is self-adjoint and satisfies an exact summation-by-parts
identity against the forward (midpoint) first difference.  Every
quadrature in the package uses the same weight vector so that energies,
seminorms and the eigenvalue solve are mutually consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import DimensionMismatchError, NewtonDivergedError


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on (0, L] with N cells; node 0 is eliminated."""

    length: float
    n_cells: int

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("grid length must be positive")
        if self.n_cells < 2:
            raise ValueError("grid needs at least 2 cells")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    def nodes(self) -> np.ndarray:
        """Node coordinates x_j = j*dx, j = 1..N."""
        return self.dx * np.arange(1, self.n_cells + 1)

    def midpoints(self) -> np.ndarray:
        return self.dx * (np.arange(self.n_cells) + 0.5)

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights (Dirichlet node excluded)."""
        w = np.full(self.n_cells, self.dx)
        w[-1] = 0.5 * self.dx
        return w


def as_field(grid: Grid, values) -> np.ndarray:
    """Validate and return a nodal field vector for the grid."""
    u = np.asarray(values, dtype=float)
    if u.shape != (grid.n_cells,):
        raise DimensionMismatchError(
            f"field has shape {u.shape}, expected ({grid.n_cells},)")
    if not np.all(np.isfinite(u)):
        raise ValueError("field contains non-finite entries")
    return u


def apply_dxx(grid: Grid, u) -> np.ndarray:
    """Second difference with Dirichlet ghost at 0 and reflected ghost at L."""
    u = _conform(grid, u)
    # difference of first differences: avoids the cancellation of the
    # naive 3-point form, keeping quadratics exact to ~eps/dx
    left = np.diff(u, prepend=0.0)
    right = np.diff(u, append=u[-2])
    return (right - left) / grid.dx ** 2


def apply_dplus(grid: Grid, u) -> np.ndarray:
    """Forward difference (u_j - u_{j-1})/dx at the N cell midpoints, u_0 = 0."""
    u = _conform(grid, u)
    return np.diff(u, prepend=0.0) / grid.dx


def weighted_inner(grid: Grid, u, w) -> float:
    """Discrete L^2 inner product (trapezoid with the Dirichlet zero at node 0)."""
    u = _conform(grid, u)
    w = _conform(grid, w)
    return float(np.sum(grid.weights() * u * w))


def midpoint_inner(grid: Grid, a, b) -> float:
    """Inner product of midpoint vectors (uniform weight dx)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (grid.n_cells,) or b.shape != (grid.n_cells,):
        raise DimensionMismatchError("midpoint vector does not conform to grid")
    return float(grid.dx * np.sum(a * b))


def l2_norm_sq(grid: Grid, u) -> float:
    return weighted_inner(grid, u, u)


def lp_seminorm(grid: Grid, u, p_exp: int) -> float:
    """||u||_{p} with the shared trapezoid weights; p_exp even, >= 2."""
    if p_exp < 2 or p_exp % 2 != 0:
        raise ValueError("p_exp must be an even integer >= 2")
    u = _conform(grid, u)
    return float(np.sum(grid.weights() * np.abs(u) ** p_exp) ** (1.0 / p_exp))


def h_norm_sq(grid: Grid, params, z) -> float:
    """Squared phase-space norm
    alpha1*||v_x||^2 + beta*||gamma*v_x - p_x||^2 + rho*||vt||^2 + mu*||pt||^2.

    Gradient norms use the midpoint quadrature so the value is exactly
    compatible with the summation-by-parts identity of apply_dxx.
    """
    dv = apply_dplus(grid, z.v)
    dp = apply_dplus(grid, z.p)
    cross = params.gamma * dv - dp
    return (params.alpha1 * midpoint_inner(grid, dv, dv)
            + params.beta * midpoint_inner(grid, cross, cross)
            + params.rho * l2_norm_sq(grid, z.vt)
            + params.mu * l2_norm_sq(grid, z.pt))


def dxx_diagonals(grid: Grid):
    """(sub, diag, sup) diagonals of apply_dxx as a matrix.

    sub[0] and sup[-1] are unused.  The operator is self-adjoint under
    the trapezoid weights even though the matrix itself is not symmetric
    (the last row carries the reflected ghost).
    """
    n = grid.n_cells
    c = 1.0 / grid.dx ** 2
    sub = np.full(n, c)
    sub[-1] = 2.0 * c
    diag = np.full(n, -2.0 * c)
    sup = np.full(n, c)
    sub[0] = 0.0
    sup[-1] = 0.0
    return sub, diag, sup


def smallest_eigenvalue(grid: Grid, tol: float = 1e-12, max_iter: int = 2000) -> float:
    """Smallest eigenvalue of -apply_dxx by inverse power iteration.

    Convergence is measured on the Rayleigh quotient in the weighted
    inner product.  Approximates the Poincare constant lambda_1; the
    analytic value for the mixed problem is (pi/2L)^2.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = grid.n_cells
    sub, diag, sup = dxx_diagonals(grid)
    # banded form of -Dxx for solve_banded
    ab = np.zeros((3, n))
    ab[0, 1:] = -sup[:-1]
    ab[1, :] = -diag
    ab[2, :-1] = -sub[1:]

    rng = np.random.default_rng(0)
    u = rng.standard_normal(n)
    lam = 0.0
    for _ in range(max_iter):
        u = solve_banded((1, 1), ab, u)
        u = u / math.sqrt(l2_norm_sq(grid, u))
        lam_new = weighted_inner(grid, -apply_dxx(grid, u), u)
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    raise NewtonDivergedError("inverse power iteration cap exceeded",
                              residual=abs(lam_new - lam))


def _conform(grid: Grid, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_cells,):
        raise DimensionMismatchError(
            f"field has shape {u.shape}, expected ({grid.n_cells},)")
    return u
