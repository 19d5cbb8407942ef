"""piezobeam: numerical laboratory for a coupled damped beam system.

Simulation (implicit midpoint with exact discrete energy accounting),
stationary analysis, and long-time dynamics experiments (decay fits,
attractor sampling, parameter-continuity sweeps) on a 1-D clamped/free
domain.
"""

from .discretization import (Grid, apply_dplus, apply_dxx, h_norm_sq,
                             l2_norm_sq, smallest_eigenvalue, weighted_inner)
from .errors import (AssumptionViolatedError, BlowUpError, ConfigError,
                     DimensionMismatchError, NewtonDivergedError,
                     NonpositiveDataError, PiezobeamError,
                     SingularJacobianError)
from .integrator import (State, StepConfig, default_step_config,
                         dissipation_rate, semidiscrete_rhs, simulate,
                         step_midpoint, total_energy)
from .model import (DerivedConstants, Forcing, Nonlinearity, PhysicalParams,
                    default_nonlinearity, derived_constants,
                    double_well_nonlinearity, linear_damping_nonlinearity,
                    make_forcing, make_nonlinearity, poincare_lambda1,
                    validate_assumptions, zero_nonlinearity)
from .stationary import (StationaryPoint, check_stationary_bound,
                         sample_stationary_set, solve_stationary)

__version__ = "0.1.0"
