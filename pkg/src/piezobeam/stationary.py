"""Newton solver for the stationary elliptic system and the bound on the
stationary set.

Stationary points solve

    -alpha*v_xx + gamma*beta*p_xx + f1(v,p) = eps*h1
    -beta*p_xx  + gamma*beta*v_xx + f2(v,p) = eps*h2

with the same discrete operators as the integrator, so every returned
point, embedded as (v, p, 0, 0), is a fixed point of the time stepper.
The set is sampled by multi-start Newton from smooth random guesses; the
sample is honest about incompleteness (non-converged starts are dropped
and counted, nothing is claimed exhaustive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import Grid, apply_dxx, dxx_diagonals, h_norm_sq
from .errors import NewtonDivergedError, SingularJacobianError
from .integrator import State, _f_derivatives, solve_block_tridiagonal
from .model import DerivedConstants, Forcing, Nonlinearity, PhysicalParams


@dataclass
class StationaryPoint:
    v: np.ndarray
    p: np.ndarray
    residual_norm: float
    h_norm_sq: float

    def as_state(self, t: float = 0.0) -> State:
        n = self.v.shape[0]
        return State(self.v.copy(), self.p.copy(),
                     np.zeros(n), np.zeros(n), t)


def _residual(grid, v, p, params, nl, forcing):
    gb = params.gamma * params.beta
    rv = (-params.alpha * apply_dxx(grid, v) + gb * apply_dxx(grid, p)
          + nl.f1(v, p) - params.epsilon * forcing.h1)
    rp = (-params.beta * apply_dxx(grid, p) + gb * apply_dxx(grid, v)
          + nl.f2(v, p) - params.epsilon * forcing.h2)
    return rv, rp


def solve_stationary(grid: Grid, guess, params: PhysicalParams,
                     nl: Nonlinearity, forcing: Forcing,
                     tol: float = 1e-12, max_iter: int = 50) -> StationaryPoint:
    """Damped Newton iteration on the coupled elliptic system."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = np.array(guess[0], dtype=float)
    p = np.array(guess[1], dtype=float)
    sub, diag, sup = dxx_diagonals(grid)
    gb = params.gamma * params.beta

    def floor(v, p):
        # round-off floor of the residual evaluation: the second
        # differences contribute ~eps*coef/dx^2 of cancellation noise
        coef = params.alpha + params.beta * (1.0 + params.gamma)
        amp = 1.0 + max(np.max(np.abs(v)), np.max(np.abs(p)))
        return 64.0 * np.finfo(float).eps * coef * amp / grid.dx ** 2

    rv, rp = _residual(grid, v, p, params, nl, forcing)
    res = max(np.max(np.abs(rv)), np.max(np.abs(rp)))
    for _ in range(max_iter):
        if res <= max(tol, floor(v, p)):
            break
        f1v, f1p, f2v, f2p = _f_derivatives(nl, v, p)
        jvv = (-params.alpha * sub, -params.alpha * diag + f1v,
               -params.alpha * sup)
        jvp = (gb * sub, gb * diag + f1p, gb * sup)
        jpv = (gb * sub, gb * diag + f2v, gb * sup)
        jpp = (-params.beta * sub, -params.beta * diag + f2p,
               -params.beta * sup)
        dv, dp = solve_block_tridiagonal(jvv, jvp, jpv, jpp, rv, rp)
        if not (np.all(np.isfinite(dv)) and np.all(np.isfinite(dp))):
            raise SingularJacobianError("singular-jacobian: non-finite update")

        # backtracking line search on the residual norm
        step = 1.0
        for _ in range(30):
            v_new = v - step * dv
            p_new = p - step * dp
            rv_new, rp_new = _residual(grid, v_new, p_new, params, nl, forcing)
            res_new = max(np.max(np.abs(rv_new)), np.max(np.abs(rp_new)))
            if math.isfinite(res_new) and res_new < res:
                break
            step *= 0.5
        else:
            if res <= max(tol, floor(v, p)):
                break
            raise NewtonDivergedError(
                f"newton-diverged: line search stalled at residual {res:.3e}",
                residual=res)
        v, p, rv, rp, res = v_new, p_new, rv_new, rp_new, res_new
    else:
        raise NewtonDivergedError(
            f"newton-diverged: residual {res:.3e} > {tol:.1e} "
            f"after {max_iter} iterations", residual=res)

    pt = StationaryPoint(v=v, p=p, residual_norm=float(res), h_norm_sq=0.0)
    pt.h_norm_sq = h_norm_sq(grid, params, pt.as_state())
    return pt


def check_stationary_bound(pt: StationaryPoint, dc: DerivedConstants,
                           m_F: float, forcing: Forcing, grid: Grid,
                           length: float):
    """Bound on the stationary set:
    3*beta2*||z||^2 <= 2*L*m_F + beta1/(4*beta2)*(||h1||^2 + ||h2||^2).
    """
    h1sq, h2sq = forcing.norms_sq(grid)
    lhs = 3.0 * dc.beta2 * pt.h_norm_sq
    rhs = 2.0 * length * m_F + dc.beta1 / (4.0 * dc.beta2) * (h1sq + h2sq)
    return lhs, rhs, bool(lhs <= rhs + 1e-9)


def random_smooth_fields(grid: Grid, rng, scale: float = 1.0, n_modes: int = 6):
    """Truncated sine sums respecting u(0) = 0 and u_x(L) = 0.

    Modes sin((k - 1/2)*pi*x/L) with 1/k^2 coefficient decay; smooth,
    boundary-compatible starts that keep Newton well behaved.
    """
    x = grid.nodes()
    u = np.zeros_like(x)
    for k in range(1, n_modes + 1):
        c = rng.standard_normal() * scale / k ** 2
        u += c * np.sin((k - 0.5) * math.pi * x / grid.length)
    return u


def _pair_distance(grid, params, a: StationaryPoint, b: StationaryPoint) -> float:
    diff = StationaryPoint(a.v - b.v, a.p - b.p, 0.0, 0.0)
    return math.sqrt(h_norm_sq(grid, params, diff.as_state()))


def sample_stationary_set(grid: Grid, params: PhysicalParams, nl: Nonlinearity,
                          forcing: Forcing, n_guesses: int = 10,
                          guess_scale: float = 1.0, seed: int = 0,
                          dedup_tol: float = 1e-6, tol: float = 1e-12,
                          max_iter: int = 60):
    """Multi-start Newton sample of the stationary set.

    Returns (points, n_dropped).  Points closer than
    dedup_tol*(1 + ||z||_H) are merged; deterministic per seed.
    """
    if n_guesses < 1:
        raise ValueError("need n_guesses >= 1")
    rng = np.random.default_rng(seed)
    points: list[StationaryPoint] = []
    dropped = 0
    # always include the zero guess; random smooth starts after it
    guesses = [(np.zeros(grid.n_cells), np.zeros(grid.n_cells))]
    for _ in range(n_guesses - 1):
        guesses.append((random_smooth_fields(grid, rng, guess_scale),
                        random_smooth_fields(grid, rng, guess_scale)))
    for guess in guesses:
        try:
            pt = solve_stationary(grid, guess, params, nl, forcing,
                                  tol=tol, max_iter=max_iter)
        except (NewtonDivergedError, SingularJacobianError):
            dropped += 1
            continue
        is_new = all(
            _pair_distance(grid, params, pt, q)
            > dedup_tol * (1.0 + math.sqrt(q.h_norm_sq))
            for q in points)
        if is_new:
            points.append(pt)
    return points, dropped
