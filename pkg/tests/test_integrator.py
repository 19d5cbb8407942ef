"""Time stepping: conservation, dissipation identities, convergence
order, reversibility, and failure modes."""

import math

import numpy as np
import pytest

from piezobeam.discretization import Grid, h_norm_sq, weighted_inner
from piezobeam.errors import BlowUpError, NewtonDivergedError
from piezobeam.integrator import (EnergySeries, State, StepConfig,
                                  default_step_config, dissipation_rate,
                                  semidiscrete_rhs, simulate, step_midpoint,
                                  total_energy)
from piezobeam.model import (Nonlinearity, PhysicalParams,
                             default_nonlinearity,
                             linear_damping_nonlinearity, make_forcing,
                             zero_nonlinearity)


def _smooth_state(grid, amp=0.5):
    x = grid.nodes()
    s = math.pi / (2.0 * grid.length)
    return State(v=amp * np.sin(s * x), p=0.5 * amp * np.sin(s * x),
                 vt=amp * np.sin(3 * s * x), pt=np.zeros_like(x))


def test_step_config_validation():
    with pytest.raises(ValueError):
        StepConfig(dt=0.0)
    with pytest.raises(ValueError):
        StepConfig(dt=0.1, newton_tol=-1.0)
    cfg = default_step_config(Grid(1.0, 100))
    assert cfg.dt == pytest.approx(0.005)


def test_energy_series_requires_increasing_time():
    s = EnergySeries()
    s.append(0.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        s.append(0.0, 1.0, 1.0, 0.0)


def test_energy_conservation_without_damping():
    # no potential, no damping: the quadratic energy is a midpoint invariant
    grid = Grid(1.0, 100)
    params = PhysicalParams()
    nl = zero_nonlinearity()
    forcing = make_forcing(grid, "zero")
    cfg = StepConfig(dt=0.02)
    z0 = _smooth_state(grid)
    _, series, _ = simulate(grid, z0, 5.0, cfg, params, nl, forcing)
    _, e, _, _ = series.as_arrays()
    assert np.max(np.abs(e - e[0])) <= 1e-12 * e[0]


def test_linear_damping_exact_dissipation_identity():
    # E_{n+1} - E_n = -dt * <g(a), a> with a the midpoint velocity, exactly
    grid = Grid(1.0, 100)
    params = PhysicalParams()
    nl = linear_damping_nonlinearity()
    forcing = make_forcing(grid, "zero")
    cfg = StepConfig(dt=0.02)
    z = _smooth_state(grid)
    for _ in range(50):
        e0 = 0.5 * h_norm_sq(grid, params, z)
        z_new = step_midpoint(grid, z, cfg, params, nl, forcing)
        e1 = 0.5 * h_norm_sq(grid, params, z_new)
        a = 0.5 * (z.vt + z_new.vt)
        b = 0.5 * (z.pt + z_new.pt)
        diss = weighted_inner(grid, nl.g1(a), a) + weighted_inner(grid, nl.g2(b), b)
        assert abs(e1 - e0 + cfg.dt * diss) <= 10 * cfg.newton_tol
        z = z_new


def test_total_energy_monotone_with_nonlinear_damping():
    grid = Grid(1.0, 100)
    params = PhysicalParams()
    nl = default_nonlinearity()
    forcing = make_forcing(grid, "zero")
    cfg = StepConfig(dt=0.02)
    _, series, _ = simulate(grid, _smooth_state(grid, 1.0), 10.0, cfg,
                            params, nl, forcing)
    _, _, tot, _ = series.as_arrays()
    assert np.max(np.diff(tot)) <= 1e-10


def test_dissipation_rate_positive():
    grid = Grid(1.0, 50)
    nl = default_nonlinearity()
    z = _smooth_state(grid)
    assert dissipation_rate(grid, z, nl) > 0.0


def test_semidiscrete_rhs_zero_at_origin():
    grid = Grid(1.0, 50)
    rhs = semidiscrete_rhs(grid, State.zero(grid), PhysicalParams(),
                           default_nonlinearity(), make_forcing(grid, "zero"))
    for f in (rhs.v, rhs.p, rhs.vt, rhs.pt):
        assert np.all(f == 0.0)


def test_step_reversibility():
    # midpoint is time-symmetric: forward then backward step returns
    grid = Grid(1.0, 80)
    params = PhysicalParams()
    nl = zero_nonlinearity()
    forcing = make_forcing(grid, "zero")
    cfg = StepConfig(dt=0.05)
    z0 = _smooth_state(grid)
    z1 = step_midpoint(grid, z0, cfg, params, nl, forcing)
    z2 = step_midpoint(grid, z1, cfg, params, nl, forcing, _dt=-cfg.dt)
    err = math.sqrt(h_norm_sq(grid, params, State(
        z2.v - z0.v, z2.p - z0.p, z2.vt - z0.vt, z2.pt - z0.pt)))
    assert err <= 1e-10


def _normal_mode(grid, params, t):
    """Exact standing-wave solution of the linear undamped system."""
    k = math.pi / (2.0 * grid.length)
    gb = params.gamma * params.beta
    m = np.array([[params.alpha, -gb], [-gb, params.beta]])
    mass = np.diag([params.rho, params.mu])
    w, vecs = np.linalg.eig(np.linalg.solve(mass, m))
    idx = int(np.argmin(w))
    omega = k * math.sqrt(w[idx])
    amp_v, amp_p = vecs[:, idx]
    shape = np.sin(k * grid.nodes())
    c, s = math.cos(omega * t), math.sin(omega * t)
    return State(v=amp_v * c * shape, p=amp_p * c * shape,
                 vt=-amp_v * omega * s * shape,
                 pt=-amp_p * omega * s * shape, t=t)


def test_convergence_second_order():
    params = PhysicalParams()
    nl = zero_nonlinearity()
    T = 1.0
    errs = []
    for n in (25, 50, 100):
        grid = Grid(1.0, n)
        forcing = make_forcing(grid, "zero")
        cfg = StepConfig(dt=0.5 * grid.dx)
        z0 = _normal_mode(grid, params, 0.0)
        zf, _, _ = simulate(grid, z0, T, cfg, params, nl, forcing)
        exact = _normal_mode(grid, params, zf.t)
        errs.append(math.sqrt(h_norm_sq(grid, params, State(
            zf.v - exact.v, zf.p - exact.p, zf.vt - exact.vt,
            zf.pt - exact.pt))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    for order in orders:
        assert abs(order - 2.0) <= 0.2


def test_blow_up_detected():
    # a repulsive "potential" drives finite-time escape; diagnostics-only
    grid = Grid(1.0, 40)
    params = PhysicalParams()
    zero1 = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    nl = Nonlinearity(
        name="repulsive", potential=lambda v, p: -0.25 * (v ** 4 + p ** 4),
        f1=lambda v, p: -v ** 3, f2=lambda v, p: -p ** 3,
        g1=zero1, g2=zero1, g1_prime=zero1, g2_prime=zero1,
        diagnostics_only=True, m=0.0)
    forcing = make_forcing(grid, "zero")
    cfg = StepConfig(dt=0.05, newton_max_iter=100)
    with pytest.raises((BlowUpError, NewtonDivergedError)):
        simulate(grid, _smooth_state(grid, 5.0), 50.0, cfg, params, nl,
                 forcing)


def test_newton_diverges_with_starved_iterations():
    grid = Grid(1.0, 40)
    cfg = StepConfig(dt=0.5, newton_max_iter=1, newton_tol=1e-14)
    with pytest.raises(NewtonDivergedError) as err:
        step_midpoint(grid, _smooth_state(grid, 2.0), cfg, PhysicalParams(),
                      default_nonlinearity(), make_forcing(grid, "zero"))
    assert err.value.residual > 0


def test_simulate_recording_and_snapshots():
    grid = Grid(1.0, 40)
    cfg = StepConfig(dt=0.1, record_every=5)
    zf, series, snaps = simulate(grid, _smooth_state(grid), 1.0, cfg,
                                 PhysicalParams(), default_nonlinearity(),
                                 make_forcing(grid, "zero"),
                                 snapshot_every=5)
    t, _, _, _ = series.as_arrays()
    assert len(t) == 3   # t = 0, 0.5, 1.0
    assert len(snaps) == 3
    assert zf.t == pytest.approx(1.0)


def test_total_energy_includes_forcing_work():
    grid = Grid(1.0, 50)
    params = PhysicalParams(epsilon=1.0)
    nl = zero_nonlinearity()
    forcing = make_forcing(grid, "constant", amplitude=2.0)
    z = _smooth_state(grid)
    e = total_energy(grid, z, params, nl, forcing)
    base = 0.5 * h_norm_sq(grid, params, z)
    work = weighted_inner(grid, forcing.h1, z.v) + weighted_inner(
        grid, forcing.h2, z.p)
    assert e == pytest.approx(base - work)
