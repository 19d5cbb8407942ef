"""Experiment harness turning the dissipativity/stability estimates into
fitted, falsifiable numerical checks.

All experiments are deterministic per (config, seed): ensembles use
per-member seeds derived from the base seed and all reductions are
sequential folds over ordered inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import Grid, apply_dplus, apply_dxx, h_norm_sq, lp_seminorm
from .errors import BlowUpError, NewtonDivergedError, NonpositiveDataError
from .integrator import (State, StepConfig, semidiscrete_rhs, simulate,
                         step_midpoint, total_energy)
from .model import Forcing, Nonlinearity, PhysicalParams
from .stationary import StationaryPoint, random_smooth_fields


@dataclass
class DecayFit:
    sigma: float          # decay rate of A*exp(-sigma*t) + floor
    amplitude: float
    offset: float
    r_squared: float


@dataclass
class PointCloud:
    states: list
    epsilon: float
    t_transient: float
    sample_interval: float
    seed: int
    dropped: int = 0

    def __post_init__(self):
        if self.states:
            n = self.states[0].v.shape[0]
            if any(s.v.shape[0] != n for s in self.states):
                raise ValueError("cloud states must share one grid")

    def norms(self, grid: Grid, params: PhysicalParams) -> np.ndarray:
        return np.array([math.sqrt(h_norm_sq(grid, params, s))
                         for s in self.states])

    def diameter(self, grid: Grid, params: PhysicalParams) -> float:
        best = 0.0
        for i, a in enumerate(self.states):
            for b in self.states[i + 1:]:
                best = max(best, state_distance(grid, params, a, b))
        return best


def state_distance(grid: Grid, params: PhysicalParams, a: State, b: State) -> float:
    diff = State(a.v - b.v, a.p - b.p, a.vt - b.vt, a.pt - b.pt)
    return math.sqrt(h_norm_sq(grid, params, diff))


def fit_exponential_decay(t, y, floor: float = 0.0) -> DecayFit:
    """Least squares of log(y - floor) against t.

    sigma > 0 means decay; r_squared is the goodness of fit in log space.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.size < 10:
        raise ValueError("need >= 10 (t, y) samples")
    if floor < 0:
        raise ValueError("floor must be >= 0")
    shifted = y - floor
    if np.any(shifted <= 0):
        raise NonpositiveDataError(
            "nonpositive-data: y must exceed the floor everywhere")
    logy = np.log(shifted)
    slope, intercept = np.polyfit(t, logy, 1)
    fit = slope * t + intercept
    ss_res = float(np.sum((logy - fit) ** 2))
    ss_tot = float(np.sum((logy - np.mean(logy)) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(sigma=float(-slope), amplitude=float(math.exp(intercept)),
                    offset=floor, r_squared=min(1.0, r2))


def _coevolve(grid, z1, z2, T, cfg, params1, nl, forcing, params2=None,
              observer=None):
    """Step two trajectories in lockstep, calling observer each sample."""
    params2 = params2 or params1
    n_steps = max(1, math.ceil(T / cfg.dt - 1e-9))
    if observer:
        observer(z1, z2)
    for k in range(1, n_steps + 1):
        z1 = step_midpoint(grid, z1, cfg, params1, nl, forcing)
        z2 = step_midpoint(grid, z2, cfg, params2, nl, forcing)
        if observer and (k % cfg.record_every == 0 or k == n_steps):
            observer(z1, z2)
    return z1, z2


def difference_energy_experiment(grid: Grid, z1_0: State, z2_0: State,
                                 T: float, cfg: StepConfig,
                                 params: PhysicalParams, nl: Nonlinearity,
                                 forcing: Forcing, theta: int = 2):
    """Co-evolve two trajectories; record the difference energy
    E_diff(t) = 0.5*||z1 - z2||_H^2 and the running sup of the squared
    compact seminorm chi(v1-v2, p1-p2)^2 with chi the L^{2*theta} pair norm.
    """
    if theta < 2:
        raise ValueError("theta must be >= 2")
    ts, e_diff, chi_sup = [], [], []
    running = [0.0]

    def observer(z1, z2):
        dv = z1.v - z2.v
        dp = z1.p - z2.p
        chi2 = (lp_seminorm(grid, dv, 2 * theta) ** 2
                + lp_seminorm(grid, dp, 2 * theta) ** 2)
        running[0] = max(running[0], chi2)
        ts.append(z1.t)
        e_diff.append(0.5 * h_norm_sq(
            grid, params, State(dv, dp, z1.vt - z2.vt, z1.pt - z2.pt)))
        chi_sup.append(running[0])

    _coevolve(grid, z1_0.copy(), z2_0.copy(), T, cfg, params, nl, forcing,
              observer=observer)
    return np.asarray(ts), np.asarray(e_diff), np.asarray(chi_sup)


def continuous_dependence_experiment(grid: Grid, z0: State, delta_scales,
                                     T: float, cfg: StepConfig,
                                     params: PhysicalParams, nl: Nonlinearity,
                                     forcing: Forcing, seed: int = 0):
    """Fitted growth/decay constant of perturbed trajectory pairs.

    For each scale the initial state is perturbed by scale*direction
    (one fixed random smooth direction) and the slope C of
    log(||dz(t)||/||dz(0)||) over t is fitted.  Returns (per-scale list
    of (scale, C), worst-case C).
    """
    scales = sorted(float(s) for s in delta_scales)
    if not scales or scales[0] <= 0:
        raise ValueError("delta_scales must be positive")
    rng = np.random.default_rng(seed)
    direction = State(random_smooth_fields(grid, rng),
                      random_smooth_fields(grid, rng),
                      random_smooth_fields(grid, rng),
                      random_smooth_fields(grid, rng))
    dir_norm = math.sqrt(h_norm_sq(grid, params, direction))

    rows = []
    for scale in scales:
        c = scale / dir_norm
        z2 = State(z0.v + c * direction.v, z0.p + c * direction.p,
                   z0.vt + c * direction.vt, z0.pt + c * direction.pt, z0.t)
        ts, ratios = [], []

        def observer(a, b, _d0=scale):
            ts.append(a.t)
            ratios.append(state_distance(grid, params, a, b) / _d0)

        _coevolve(grid, z0.copy(), z2, T, cfg, params, nl, forcing,
                  observer=observer)
        slope = float(np.polyfit(np.asarray(ts), np.log(ratios), 1)[0])
        rows.append((scale, slope))
    worst = max(abs(c) for _, c in rows)
    return rows, worst


def epsilon_lipschitz_experiment(grid: Grid, z0: State, eps_pairs,
                                 T: float, cfg: StepConfig,
                                 params: PhysicalParams, nl: Nonlinearity,
                                 forcing: Forcing):
    """Sup-in-time flow gap between runs that differ only in epsilon.

    Returns rows (|eps1 - eps2|, sup_t gap, gap/|eps1 - eps2|); the
    ratio is reported as inf when eps1 == eps2 and the gap is 0.
    """
    rows = []
    for eps1, eps2 in eps_pairs:
        for e in (eps1, eps2):
            if not 0.0 <= e <= 1.0:
                raise ValueError("epsilon values must lie in [0, 1]")
        p1 = _with_epsilon(params, eps1)
        p2 = _with_epsilon(params, eps2)
        sup_gap = [0.0]

        def observer(a, b):
            sup_gap[0] = max(sup_gap[0], state_distance(grid, params, a, b))

        _coevolve(grid, z0.copy(), z0.copy(), T, cfg, p1, nl, forcing,
                  params2=p2, observer=observer)
        d_eps = abs(eps1 - eps2)
        ratio = sup_gap[0] / d_eps if d_eps > 0 else math.inf
        rows.append((d_eps, sup_gap[0], ratio))
    return rows


def _with_epsilon(params: PhysicalParams, eps: float) -> PhysicalParams:
    return PhysicalParams(rho=params.rho, mu=params.mu, alpha1=params.alpha1,
                          beta=params.beta, gamma=params.gamma,
                          length=params.length, epsilon=eps)


def random_state(grid: Grid, rng, scale: float = 1.0) -> State:
    return State(random_smooth_fields(grid, rng, scale),
                 random_smooth_fields(grid, rng, scale),
                 random_smooth_fields(grid, rng, scale),
                 random_smooth_fields(grid, rng, scale))


def attractor_cloud(grid: Grid, params: PhysicalParams, nl: Nonlinearity,
                    forcing: Forcing, ensemble_size: int = 6,
                    T_transient: float = 40.0, T_sample: float = 10.0,
                    sample_stride: int = 20, seed: int = 0,
                    cfg: StepConfig = None, init_scale: float = 1.0) -> PointCloud:
    """Sampled stand-in for the global attractor.

    Each ensemble member evolves through the transient, then states are
    collected every sample_stride steps.  Blown-up members are dropped
    and counted.  Deterministic per seed.
    """
    if T_transient <= 0 or T_sample <= 0:
        raise ValueError("T_transient and T_sample must be positive")
    if cfg is None:
        cfg = StepConfig(dt=0.05)
    states, dropped = [], 0
    for member in range(ensemble_size):
        rng = np.random.default_rng((seed, member))
        z = random_state(grid, rng, init_scale)
        try:
            z, _, _ = simulate(grid, z, T_transient, cfg, params, nl, forcing)
            n_steps = max(1, math.ceil(T_sample / cfg.dt - 1e-9))
            for k in range(1, n_steps + 1):
                z = step_midpoint(grid, z, cfg, params, nl, forcing)
                if k % sample_stride == 0 or k == n_steps:
                    states.append(z.copy())
        except (BlowUpError, NewtonDivergedError):
            dropped += 1
    return PointCloud(states=states, epsilon=params.epsilon,
                      t_transient=T_transient,
                      sample_interval=sample_stride * cfg.dt,
                      seed=seed, dropped=dropped)


def hausdorff_semidistance(grid: Grid, params: PhysicalParams,
                           cloud_a: PointCloud, cloud_b: PointCloud) -> float:
    """sup over A of the inf distance to B (asymmetric)."""
    if not cloud_a.states or not cloud_b.states:
        raise ValueError("clouds must be nonempty")
    return max(
        min(state_distance(grid, params, a, b) for b in cloud_b.states)
        for a in cloud_a.states)


def semicontinuity_sweep(grid: Grid, params: PhysicalParams, nl: Nonlinearity,
                         forcing: Forcing, eps0: float, eps_list,
                         cloud_kwargs: dict = None):
    """Semidistance dist(A_eps, A_eps0) per eps, sorted by |eps - eps0|.

    All clouds share one seed so the sweep isolates the epsilon effect.
    Returns (rows, eps0_cloud) with rows of (eps, semidistance).
    """
    cloud_kwargs = dict(cloud_kwargs or {})
    base = attractor_cloud(grid, _with_epsilon(params, eps0), nl, forcing,
                           **cloud_kwargs)
    rows = []
    for eps in eps_list:
        if not 0.0 <= eps <= 1.0:
            raise ValueError("epsilon values must lie in [0, 1]")
        cloud = attractor_cloud(grid, _with_epsilon(params, eps), nl, forcing,
                                **cloud_kwargs)
        rows.append((eps, hausdorff_semidistance(grid, params, cloud, base)))
    rows.sort(key=lambda r: abs(r[0] - eps0))
    return rows, base


def distance_to_stationary_set(grid: Grid, params: PhysicalParams,
                               z: State, stationary_points) -> float:
    """min over the sampled stationary set of ||z - (v, p, 0, 0)||_H."""
    points = list(stationary_points)
    if not points:
        raise ValueError("stationary set must be nonempty")
    return min(state_distance(grid, params, z, pt.as_state())
               for pt in points)


def h2_proxy_norm(grid: Grid, z: State, params: PhysicalParams,
                  nl: Nonlinearity, forcing: Forcing) -> float:
    """Discrete proxy for the H^2-level regularity of a state:
    second differences of (v, p), first differences of (v_t, p_t), and
    the accelerations recovered from the semidiscrete residual form.
    """
    rhs = semidiscrete_rhs(grid, z, params, nl, forcing)
    w = grid.weights()

    def nsq(u):
        return float(np.sum(w * u * u))

    def midsq(u):
        return float(grid.dx * np.sum(u * u))

    return math.sqrt(nsq(apply_dxx(grid, z.v)) + nsq(apply_dxx(grid, z.p))
                     + midsq(apply_dplus(grid, z.vt))
                     + midsq(apply_dplus(grid, z.pt))
                     + nsq(rhs.vt) + nsq(rhs.pt))


def regularity_envelope(grid: Grid, cloud: PointCloud, params: PhysicalParams,
                        nl: Nonlinearity, forcing: Forcing) -> float:
    """Largest H^2-proxy norm over a cloud (the envelope constant R)."""
    p = _with_epsilon(params, cloud.epsilon)
    return max(h2_proxy_norm(grid, s, p, nl, forcing) for s in cloud.states)
