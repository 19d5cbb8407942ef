"""Physical parameters, nonlinearity/damping families, derived constants,
and a sampling-based validator for the structural assumptions.

The coupled beam system reads

    rho*v_tt - alpha*v_xx + gamma*beta*p_xx + f1(v,p) + g1(v_t) = eps*h1
    mu*p_tt  - beta*p_xx  + gamma*beta*v_xx + f2(v,p) + g2(p_t) = eps*h2

with alpha = alpha1 + gamma^2*beta.  The potential F with gradient
(f1, f2) and the damping pair (g1, g2) come with declared constants
(beta0, m_F, C_f, r) and (m, M1, q, M2, l); the validator checks the
declared constants against samples, it never infers them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import Grid, l2_norm_sq
from .errors import AssumptionViolatedError, ConfigError


@dataclass(frozen=True)
class PhysicalParams:
    rho: float = 1.0
    mu: float = 1.0
    alpha1: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    length: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("rho", "mu", "alpha1", "beta", "gamma", "length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")

    @property
    def alpha(self) -> float:
        return self.alpha1 + self.gamma ** 2 * self.beta


@dataclass(frozen=True)
class Nonlinearity:
    """Potential/damping bundle with its declared assumption constants.

    All maps are vectorized over numpy arrays.  The partial derivatives
    of (f1, f2) are optional; the integrators fall back to elementwise
    finite differences when they are absent.
    """

    name: str
    potential: Callable          # F(v, p)
    f1: Callable                 # dF/dv
    f2: Callable                 # dF/dp
    g1: Callable
    g2: Callable
    g1_prime: Optional[Callable] = None
    g2_prime: Optional[Callable] = None
    f1_v: Optional[Callable] = None
    f1_p: Optional[Callable] = None
    f2_v: Optional[Callable] = None
    f2_p: Optional[Callable] = None
    beta0: float = 0.0
    m_F: float = 0.0
    C_f: float = 1.0
    r: float = 1.0
    m: float = 1.0
    M1: float = 1.0
    q: float = 1.0
    M2: Optional[float] = None
    l: Optional[float] = None
    diagnostics_only: bool = False   # permits g == 0 (conservation tests)

    def __post_init__(self):
        if self.beta0 < 0 or self.m_F < 0:
            raise ValueError("beta0 and m_F must be nonnegative")
        if self.C_f <= 0 or self.r < 1:
            raise ValueError("need C_f > 0 and r >= 1")
        if not self.diagnostics_only and self.m <= 0:
            raise ValueError("damping lower bound m must be positive "
                             "(set diagnostics_only=True for g == 0)")
        if self.q >= 3 and not self.diagnostics_only:
            if self.M2 is None or self.l is None or self.l <= self.q - 1:
                raise ValueError("q >= 3 requires M2 > 0 and l > q - 1")


@dataclass(frozen=True)
class Forcing:
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        for h in (self.h1, self.h2):
            if not np.all(np.isfinite(h)):
                raise ValueError("forcing field contains non-finite entries")

    def norms_sq(self, grid: Grid) -> tuple[float, float]:
        return l2_norm_sq(grid, self.h1), l2_norm_sq(grid, self.h2)


def make_forcing(grid: Grid, profile: str = "zero", amplitude: float = 1.0,
                 center: float = 0.5, width: float = 0.1) -> Forcing:
    """Named forcing profiles applied identically to both equations."""
    x = grid.nodes()
    if profile == "zero":
        h = np.zeros_like(x)
    elif profile == "constant":
        h = np.full_like(x, amplitude)
    elif profile == "gaussian":
        if width <= 0:
            raise ConfigError("gaussian forcing needs width > 0")
        h = amplitude * np.exp(-0.5 * ((x - center) / width) ** 2)
    else:
        raise ConfigError(f"unknown forcing profile '{profile}'")
    return Forcing(h1=h.copy(), h2=h.copy())


@dataclass(frozen=True)
class DerivedConstants:
    alpha: float
    lambda1: float
    kappa: float
    beta1: float
    beta2: float
    C_F: float


def poincare_lambda1(length: float) -> float:
    """Analytic fundamental eigenvalue of -u'' with u(0)=0, u'(L)=0."""
    return (math.pi / (2.0 * length)) ** 2


def derived_constants(params: PhysicalParams, beta0: float, m_F: float,
                      forcing: Forcing, grid: Grid,
                      lambda1: Optional[float] = None) -> DerivedConstants:
    """Constants kappa, beta1, beta2, C_F of the energy estimates.

    lambda1 defaults to the analytic value (pi/2L)^2; pass the discrete
    eigenvalue for a cross-check against the mesh.
    """
    if lambda1 is None:
        lambda1 = poincare_lambda1(params.length)
    kappa = max((2.0 * params.gamma ** 2 + 1.0) / params.alpha1,
                2.0 / params.beta)
    beta1 = kappa / lambda1
    beta2 = 0.25 * (1.0 - 2.0 * beta0 * beta1)
    if beta2 <= 0:
        raise AssumptionViolatedError(
            f"assumption-violated: beta2 = {beta2:.6g} <= 0 "
            f"(need beta0 < 1/(2*beta1) = {1.0 / (2.0 * beta1):.6g})")
    h1sq, h2sq = forcing.norms_sq(grid)
    c_f = params.length * m_F + beta1 / (4.0 * beta2) * (h1sq + h2sq)
    return DerivedConstants(alpha=params.alpha, lambda1=lambda1, kappa=kappa,
                            beta1=beta1, beta2=beta2, C_F=c_f)


# ---------------------------------------------------------------------------
# Nonlinearity families
# ---------------------------------------------------------------------------

def default_nonlinearity(c1: float = 1.0, c2: float = 1.0, c12: float = 1.0,
                         damp_lin: float = 1.0, damp_cubic: float = 1.0) -> Nonlinearity:
    """Convex quartic potential with cubic-augmented monotone damping.

    F(v,p) = c1/4 v^4 + c2/4 p^4 + c12/2 v^2 p^2,  g(s) = damp_lin*s + damp_cubic*s^3.

    Requires c12^2 <= c1*c2 so F >= 0 (then beta0 = m_F = 0).
    """
    if min(c1, c2) < 0 or c12 < 0 or c12 ** 2 > c1 * c2 + 1e-12:
        raise ValueError("need c1, c2 >= 0 and c12^2 <= c1*c2")
    if damp_lin <= 0 or damp_cubic < 0:
        raise ValueError("need damp_lin > 0 and damp_cubic >= 0")

    a, b = damp_lin, damp_cubic
    cubic = b > 0
    return Nonlinearity(
        name="default_quartic",
        potential=lambda v, p: 0.25 * c1 * v ** 4 + 0.25 * c2 * p ** 4
                               + 0.5 * c12 * v ** 2 * p ** 2,
        f1=lambda v, p: c1 * v ** 3 + c12 * v * p ** 2,
        f2=lambda v, p: c2 * p ** 3 + c12 * v ** 2 * p,
        g1=lambda s: a * s + b * s ** 3,
        g2=lambda s: a * s + b * s ** 3,
        g1_prime=lambda s: a + 3.0 * b * s ** 2,
        g2_prime=lambda s: a + 3.0 * b * s ** 2,
        f1_v=lambda v, p: 3.0 * c1 * v ** 2 + c12 * p ** 2,
        f1_p=lambda v, p: 2.0 * c12 * v * p,
        f2_v=lambda v, p: 2.0 * c12 * v * p,
        f2_p=lambda v, p: 3.0 * c2 * p ** 2 + c12 * v ** 2,
        beta0=0.0, m_F=0.0,
        C_f=4.0 * (c1 + c2 + c12) + 1.0, r=3.0,
        m=a, M1=max(a, 3.0 * b) if cubic else a,
        q=3.0 if cubic else 1.0,
        M2=b if cubic else None, l=4.0 if cubic else None,
    )


def linear_damping_nonlinearity(slope: float = 1.0) -> Nonlinearity:
    """Zero potential with linear damping g(s) = slope*s."""
    if slope <= 0:
        raise ValueError("slope must be positive")
    zero2 = lambda v, p: np.zeros_like(np.asarray(v, dtype=float))
    return Nonlinearity(
        name="linear_damping",
        potential=zero2, f1=zero2, f2=zero2,
        g1=lambda s: slope * s, g2=lambda s: slope * s,
        g1_prime=lambda s: np.full_like(np.asarray(s, dtype=float), slope),
        g2_prime=lambda s: np.full_like(np.asarray(s, dtype=float), slope),
        f1_v=zero2, f1_p=zero2, f2_v=zero2, f2_p=zero2,
        beta0=0.0, m_F=0.0, C_f=1.0, r=1.0,
        m=slope, M1=slope, q=1.0,
    )


def zero_nonlinearity() -> Nonlinearity:
    """F = 0 and g = 0; diagnostics-only (energy-conservation tests)."""
    zero2 = lambda v, p: np.zeros_like(np.asarray(v, dtype=float))
    zero1 = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return Nonlinearity(
        name="zero",
        potential=zero2, f1=zero2, f2=zero2,
        g1=zero1, g2=zero1, g1_prime=zero1, g2_prime=zero1,
        f1_v=zero2, f1_p=zero2, f2_v=zero2, f2_p=zero2,
        beta0=0.0, m_F=0.0, C_f=1.0, r=1.0,
        m=0.0, M1=1.0, q=1.0, diagnostics_only=True,
    )


def double_well_nonlinearity(depth: float = 1.0, damp_lin: float = 1.0,
                             damp_cubic: float = 1.0) -> Nonlinearity:
    """Uncoupled double wells F = depth/4 * ((v^2-1)^2 + (p^2-1)^2).

    Multistable: used for stationary-set multiplicity and attractor
    experiments that need a set of positive diameter.  Pointwise
    grad(F).(v,p) - F >= -depth/3 per component, so m_F = 0.7*depth
    covers the coercivity floor with margin; the lower bound on F itself
    is trivial since F >= 0.
    """
    if depth <= 0 or damp_lin <= 0 or damp_cubic < 0:
        raise ValueError("need depth, damp_lin > 0 and damp_cubic >= 0")
    a, b, d = damp_lin, damp_cubic, depth
    cubic = b > 0
    return Nonlinearity(
        name="double_well",
        potential=lambda v, p: 0.25 * d * ((v ** 2 - 1.0) ** 2
                                           + (p ** 2 - 1.0) ** 2),
        f1=lambda v, p: d * (v ** 3 - v) + 0.0 * p,
        f2=lambda v, p: d * (p ** 3 - p) + 0.0 * v,
        g1=lambda s: a * s + b * s ** 3,
        g2=lambda s: a * s + b * s ** 3,
        g1_prime=lambda s: a + 3.0 * b * s ** 2,
        g2_prime=lambda s: a + 3.0 * b * s ** 2,
        f1_v=lambda v, p: d * (3.0 * v ** 2 - 1.0) + 0.0 * p,
        f1_p=lambda v, p: np.zeros_like(np.asarray(v, dtype=float) + p),
        f2_v=lambda v, p: np.zeros_like(np.asarray(v, dtype=float) + p),
        f2_p=lambda v, p: d * (3.0 * p ** 2 - 1.0) + 0.0 * v,
        beta0=0.0, m_F=0.7 * d,
        C_f=8.0 * d + 1.0, r=3.0,
        m=a, M1=max(a, 3.0 * b) if cubic else a,
        q=3.0 if cubic else 1.0,
        M2=b if cubic else None, l=4.0 if cubic else None,
    )


_NONLINEARITY_FACTORIES = {
    "default_quartic": default_nonlinearity,
    "linear_damping": linear_damping_nonlinearity,
    "zero": zero_nonlinearity,
    "double_well": double_well_nonlinearity,
}


def make_nonlinearity(name: str, **overrides) -> Nonlinearity:
    """Construct a named nonlinearity with coefficient overrides."""
    try:
        factory = _NONLINEARITY_FACTORIES[name]
    except KeyError:
        raise ConfigError(f"unknown nonlinearity '{name}' "
                          f"(choose from {sorted(_NONLINEARITY_FACTORIES)})")
    try:
        return factory(**overrides)
    except TypeError as exc:
        raise ConfigError(f"bad overrides for nonlinearity '{name}': {exc}")


# ---------------------------------------------------------------------------
# Assumption validator
# ---------------------------------------------------------------------------

@dataclass
class AssumptionCheck:
    check_id: str
    description: str
    passed: bool
    worst_point: tuple
    margin: float


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [{"id": c.check_id, "description": c.description,
                        "passed": c.passed, "worst_point": list(c.worst_point),
                        "margin": c.margin} for c in self.checks],
            "warnings": list(self.warnings),
            "skipped": list(self.skipped),
        }


def _record(report, check_id, description, margins, points):
    """Margins >= 0 pass; the worst (most negative) sample is reported."""
    margins = np.asarray(margins, dtype=float)
    k = int(np.argmin(margins))
    slack = -1e-9 * (1.0 + np.max(np.abs(margins)))
    report.checks.append(AssumptionCheck(
        check_id=check_id, description=description,
        passed=bool(margins[k] >= slack),
        worst_point=tuple(np.atleast_1d(points[k]).tolist()),
        margin=float(margins[k])))


def validate_assumptions(nl: Nonlinearity, sample_box=((-5.0, 5.0), (-5.0, 5.0)),
                         n_samples: int = 1000, seed: int = 0,
                         beta1: Optional[float] = None) -> ValidationReport:
    """Sampling-based check of the structural assumptions on F and g.

    Failures become report entries, never exceptions.  Deterministic for
    a fixed seed.  Damping checks are skipped for diagnostics-only
    nonlinearities (g == 0 is permitted there by construction).
    """
    if n_samples < 100:
        raise ValueError("need n_samples >= 100")
    (vlo, vhi), (plo, phi) = sample_box
    if vhi <= vlo or phi <= plo:
        raise ValueError("sample_box is degenerate")

    rng = np.random.default_rng(seed)
    v = rng.uniform(vlo, vhi, n_samples)
    p = rng.uniform(plo, phi, n_samples)
    v2 = rng.uniform(vlo, vhi, n_samples)
    p2 = rng.uniform(plo, phi, n_samples)
    pts = np.column_stack([v, p])
    report = ValidationReport()

    F = nl.potential(v, p)
    f1 = nl.f1(v, p)
    f2 = nl.f2(v, p)

    # gradient consistency: central differences, second-order step
    scale = 1.0 + np.maximum(np.abs(v), np.abs(p))
    h = 1e-5 * scale
    fd1 = (nl.potential(v + h, p) - nl.potential(v - h, p)) / (2.0 * h)
    fd2 = (nl.potential(v, p + h) - nl.potential(v, p - h)) / (2.0 * h)
    fscale = 1.0 + np.abs(f1) + np.abs(f2)
    tol = 1e-6 * fscale * scale ** 2
    _record(report, "grad-consistency",
            "finite-difference gradient of F matches (f1, f2)",
            tol - np.abs(fd1 - f1) - np.abs(fd2 - f2), pts)

    # lower bound on F
    bound = -nl.beta0 * (v ** 2 + p ** 2) - nl.m_F
    _record(report, "potential-lower-bound",
            "F(v,p) >= -beta0*(v^2+p^2) - m_F", F - bound, pts)

    # grad F . (v,p) - F lower bound
    expr = f1 * v + f2 * p - F
    _record(report, "gradient-coercivity",
            "grad F.(v,p) - F >= -beta0*(v^2+p^2) - m_F", expr - bound, pts)

    # joint Lipschitz-growth bound on f_i at sampled pairs
    f1b = nl.f1(v2, p2)
    f2b = nl.f2(v2, p2)
    growth = 1.0 + (np.abs(v) ** (nl.r - 1) + np.abs(p) ** (nl.r - 1)
                    + np.abs(v2) ** (nl.r - 1) + np.abs(p2) ** (nl.r - 1))
    gap = np.sqrt((v - v2) ** 2 + (p - p2) ** 2)
    rhs = nl.C_f * growth * gap
    lip = rhs - np.maximum(np.abs(f1 - f1b), np.abs(f2 - f2b))
    _record(report, "lipschitz-growth",
            "|f_i(v1,p1) - f_i(v2,p2)| <= C_f*(1 + sum |.|^(r-1))*|delta|",
            lip, np.column_stack([v, p, v2, p2]))

    if nl.diagnostics_only and nl.m <= 0:
        report.skipped.append("damping checks skipped (diagnostics-only, g == 0)")
    else:
        s = rng.uniform(min(vlo, plo), max(vhi, phi), n_samples)
        s2 = rng.uniform(min(vlo, plo), max(vhi, phi), n_samples)
        for tag, g, gp in (("g1", nl.g1, nl.g1_prime), ("g2", nl.g2, nl.g2_prime)):
            g0 = float(np.atleast_1d(g(np.array([0.0])))[0])
            _record(report, f"{tag}-zero", f"{tag}(0) = 0",
                    np.array([1e-12 - abs(g0)]), np.array([[0.0]]))
            if gp is None:
                hs = 1e-6 * (1.0 + np.abs(s))
                gps = (g(s + hs) - g(s - hs)) / (2.0 * hs)
            else:
                gps = gp(s)
            _record(report, f"{tag}-derivative-lower",
                    f"m <= {tag}'(s)", gps - nl.m, s)
            _record(report, f"{tag}-derivative-upper",
                    f"{tag}'(s) <= M1*(1 + |s|^(q-1))",
                    nl.M1 * (1.0 + np.abs(s) ** (nl.q - 1)) - gps, s)
            # monotonicity gap
            _record(report, f"{tag}-monotonicity",
                    f"({tag}(a) - {tag}(b))*(a - b) >= m*(a - b)^2",
                    (g(s) - g(s2)) * (s - s2) - nl.m * (s - s2) ** 2,
                    np.column_stack([s, s2]))
            if nl.q >= 3:
                big = s[np.abs(s) >= 1.0]
                if big.size:
                    _record(report, f"{tag}-superlinear",
                            f"{tag}(s)*s >= M2*|s|^l for |s| >= 1",
                            g(big) * big - nl.M2 * np.abs(big) ** nl.l, big)
        if nl.m < 1.0:
            report.warnings.append(
                f"m = {nl.m:.6g} < 1: accepted as a positive dissipation "
                "constant, flagged for attention")

    if beta1 is not None:
        lim = 1.0 / (2.0 * beta1)
        _record(report, "beta0-smallness", "beta0 < 1/(2*beta1)",
                np.array([lim - nl.beta0 - 1e-15]), np.array([[nl.beta0]]))

    return report
