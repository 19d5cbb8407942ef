"""Experiment harness: decay fits, co-evolution experiments, point
clouds, and set distances."""

import math

import numpy as np
import pytest

from piezobeam import analysis
from piezobeam.discretization import Grid, h_norm_sq, l2_norm_sq
from piezobeam.errors import NonpositiveDataError
from piezobeam.integrator import State, StepConfig
from piezobeam.model import (PhysicalParams, default_nonlinearity,
                             linear_damping_nonlinearity, make_forcing)
from piezobeam.stationary import sample_stationary_set


GRID = Grid(1.0, 60)
PARAMS = PhysicalParams()
CFG = StepConfig(dt=0.05)


def _state(seed, scale=0.5):
    rng = np.random.default_rng(seed)
    return analysis.random_state(GRID, rng, scale)


def test_decay_fit_recovers_planted_exponential():
    t = np.linspace(0.0, 10.0, 100)
    fit = analysis.fit_exponential_decay(t, 2.0 * np.exp(-0.5 * t))
    assert abs(fit.sigma - 0.5) <= 1e-10
    assert abs(fit.amplitude - 2.0) <= 1e-10
    assert fit.r_squared == pytest.approx(1.0)


def test_decay_fit_with_floor():
    t = np.linspace(0.0, 10.0, 100)
    fit = analysis.fit_exponential_decay(t, 2.0 * np.exp(-0.5 * t) + 0.1,
                                         floor=0.1)
    assert abs(fit.sigma - 0.5) <= 1e-10
    assert fit.offset == 0.1


def test_decay_fit_rejects_bad_input():
    t = np.linspace(0.0, 1.0, 50)
    with pytest.raises(NonpositiveDataError):
        analysis.fit_exponential_decay(t, np.exp(-t) - 0.5)
    with pytest.raises(ValueError):
        analysis.fit_exponential_decay(t[:5], np.exp(-t[:5]))
    with pytest.raises(ValueError):
        analysis.fit_exponential_decay(t, np.exp(-t), floor=-1.0)


def test_difference_energy_identical_inputs_is_zero():
    z = _state(0)
    forcing = make_forcing(GRID, "zero")
    t, e, chi = analysis.difference_energy_experiment(
        GRID, z, z.copy(), 1.0, CFG, PARAMS, default_nonlinearity(), forcing)
    assert np.all(e == 0.0)
    assert np.all(chi == 0.0)


def test_difference_energy_initial_value():
    # velocity-only perturbation: E_diff(0) = rho/2 * ||delta||^2
    z1 = _state(1)
    z2 = z1.copy()
    delta = np.sin(GRID.nodes())
    z2.vt = z2.vt + delta
    t, e, _ = analysis.difference_energy_experiment(
        GRID, z1, z2, 0.5, CFG, PARAMS, default_nonlinearity(),
        make_forcing(GRID, "zero"))
    assert e[0] == pytest.approx(0.5 * PARAMS.rho * l2_norm_sq(GRID, delta))


def test_difference_energy_chi_sup_is_nondecreasing():
    t, e, chi = analysis.difference_energy_experiment(
        GRID, _state(2), _state(3), 2.0, CFG, PARAMS,
        default_nonlinearity(), make_forcing(GRID, "zero"))
    assert np.all(np.diff(chi) >= 0.0)
    assert e[-1] < e[0]


def test_continuous_dependence_scale_free_for_linear_dynamics():
    rows, worst = analysis.continuous_dependence_experiment(
        GRID, _state(4), [1e-5, 1e-4, 1e-3], 2.0, CFG, PARAMS,
        linear_damping_nonlinearity(), make_forcing(GRID, "zero"), seed=0)
    slopes = [c for _, c in rows]
    assert max(slopes) - min(slopes) <= 0.01 * max(abs(s) for s in slopes)
    assert worst == max(abs(s) for s in slopes)


def test_continuous_dependence_rejects_bad_scales():
    with pytest.raises(ValueError):
        analysis.continuous_dependence_experiment(
            GRID, _state(4), [], 1.0, CFG, PARAMS,
            linear_damping_nonlinearity(), make_forcing(GRID, "zero"))


def test_epsilon_gap_zero_without_forcing():
    rows = analysis.epsilon_lipschitz_experiment(
        GRID, _state(5), [(0.0, 0.5), (0.2, 0.9)], 1.0, CFG, PARAMS,
        default_nonlinearity(), make_forcing(GRID, "zero"))
    for _, gap, _ in rows:
        assert gap == 0.0


def test_epsilon_gap_zero_for_equal_epsilons():
    rows = analysis.epsilon_lipschitz_experiment(
        GRID, _state(5), [(0.3, 0.3)], 1.0, CFG, PARAMS,
        default_nonlinearity(), make_forcing(GRID, "constant"))
    d, gap, ratio = rows[0]
    assert d == 0.0 and gap == 0.0 and math.isinf(ratio)


def test_hausdorff_semidistance_properties():
    z0 = State.zero(GRID)
    z1 = _state(6, scale=1.0)
    norm1 = math.sqrt(h_norm_sq(GRID, PARAMS, z1))
    a = analysis.PointCloud([z0], 0.0, 1.0, 1.0, 0)
    ab = analysis.PointCloud([z0, z1], 0.0, 1.0, 1.0, 0)
    # subset gives 0; the reverse direction sees the extra point
    assert analysis.hausdorff_semidistance(GRID, PARAMS, a, ab) == 0.0
    assert analysis.hausdorff_semidistance(GRID, PARAMS, ab, a) == \
        pytest.approx(norm1)
    with pytest.raises(ValueError):
        analysis.hausdorff_semidistance(
            GRID, PARAMS, analysis.PointCloud([], 0.0, 1.0, 1.0, 0), a)


def test_point_cloud_rejects_mixed_grids():
    z_small = State.zero(Grid(1.0, 30))
    with pytest.raises(ValueError):
        analysis.PointCloud([State.zero(GRID), z_small], 0.0, 1.0, 1.0, 0)


def test_distance_to_stationary_set():
    nl = linear_damping_nonlinearity()
    forcing = make_forcing(GRID, "constant", amplitude=1.0)
    params = PhysicalParams(epsilon=1.0)
    points, _ = sample_stationary_set(GRID, params, nl, forcing, n_guesses=2,
                                      seed=0)
    z = points[0].as_state()
    assert analysis.distance_to_stationary_set(GRID, params, z, points) == 0.0
    bump = np.sin(GRID.nodes())
    z2 = State(z.v.copy(), z.p.copy(), bump.copy(), np.zeros_like(bump))
    d = analysis.distance_to_stationary_set(GRID, params, z2, points)
    assert d == pytest.approx(math.sqrt(params.rho * l2_norm_sq(GRID, bump)))
    with pytest.raises(ValueError):
        analysis.distance_to_stationary_set(GRID, params, z, [])


def test_attractor_cloud_deterministic_and_contracting():
    nl = default_nonlinearity()
    forcing = make_forcing(GRID, "zero")
    kwargs = dict(ensemble_size=2, T_transient=15.0, T_sample=2.0,
                  sample_stride=10, seed=3, cfg=CFG)
    a = analysis.attractor_cloud(GRID, PARAMS, nl, forcing, **kwargs)
    b = analysis.attractor_cloud(GRID, PARAMS, nl, forcing, **kwargs)
    assert np.array_equal(a.norms(GRID, PARAMS), b.norms(GRID, PARAMS))
    assert a.dropped == 0
    # gradient dynamics with zero forcing collapses toward the origin
    assert np.max(a.norms(GRID, PARAMS)) <= 1e-2


def test_semicontinuity_sweep_zero_at_base_epsilon():
    nl = default_nonlinearity()
    forcing = make_forcing(GRID, "constant", amplitude=1.0)
    kwargs = dict(ensemble_size=2, T_transient=8.0, T_sample=2.0,
                  sample_stride=10, seed=3, cfg=CFG)
    rows, base = analysis.semicontinuity_sweep(
        GRID, PARAMS, nl, forcing, eps0=0.5, eps_list=[0.5, 0.6],
        cloud_kwargs=kwargs)
    assert rows[0] == (0.5, 0.0)   # same seed, same epsilon
    assert rows[1][1] > 0.0


def test_h2_proxy_norm_zero_state():
    nl = default_nonlinearity()
    forcing = make_forcing(GRID, "zero")
    assert analysis.h2_proxy_norm(GRID, State.zero(GRID), PARAMS, nl,
                                  forcing) == 0.0


def test_state_distance_symmetry():
    z1, z2 = _state(7), _state(8)
    d12 = analysis.state_distance(GRID, PARAMS, z1, z2)
    d21 = analysis.state_distance(GRID, PARAMS, z2, z1)
    assert d12 == pytest.approx(d21)
    assert analysis.state_distance(GRID, PARAMS, z1, z1) == 0.0
