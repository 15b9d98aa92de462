"""Finite-volume simulator and functional auditor for the 1D quasilinear
Keller-Segel system with density-dependent diffusion (1+u)^(-p).

The package simulates the coupled cell-density/chemoattractant system on
[0, 1] with zero-flux boundaries and audits, along every trajectory, the
dissipation identities and a-priori bounds that govern it: the classical
Lyapunov functional, the gradient-weighted growth functional with its
dissipation/rate balance, entropy bounds, and linear-in-time growth
envelopes.  A verifier certifies the underlying pointwise flux identity
on analytic profiles and estimates convergence orders of all residuals.
"""
from .errors import ConfigError, DomainError, QuadratureError, UsageError
from .functionals import (
    AuxiliaryMonitors,
    FunctionalSnapshot,
    D_dissipation,
    F_critical,
    F_general,
    R_rate,
    auxiliary_monitors,
    classical_L,
    classical_dissipation,
    cumulative_trapezoid,
    energy_bookkeeping_residual,
    entropy,
    envelope_constant,
    evaluate_snapshot,
    grad_weight,
    identity_residual_series,
    mass,
    prop41_gap,
    quarter_coefficient_gap,
    regest3_gap,
)
from .grid import Grid, InitialCondition, State, make_grid, make_initial_state
from .integrator import (
    BLOWUP_DETECTED,
    COMPLETED,
    STEP_FAILURE,
    RunOutcome,
    StepControl,
    attempt_step,
    run_trajectory,
    stable_dt,
)
from .models import (
    U_FLOOR,
    B_eval,
    DiffusionModel,
    a_eval,
    a_prime_eval,
    b_eval,
    b_prime_eval,
)
from .operators import face_gradient, system_rhs, total_flux, vt_field
from .verifier import (
    ConvergenceReport,
    TestFunction,
    key_identity_residual,
    key_identity_study,
    m_operator,
    refinement_study,
    standard_test_functions,
)

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryMonitors", "BLOWUP_DETECTED", "B_eval", "COMPLETED", "ConfigError",
    "ConvergenceReport", "D_dissipation", "DiffusionModel", "DomainError",
    "F_critical", "F_general", "FunctionalSnapshot", "Grid", "InitialCondition",
    "QuadratureError", "R_rate", "RunOutcome", "STEP_FAILURE", "State",
    "StepControl", "TestFunction", "U_FLOOR", "UsageError", "a_eval",
    "a_prime_eval", "attempt_step", "auxiliary_monitors", "b_eval",
    "b_prime_eval", "classical_L", "classical_dissipation",
    "cumulative_trapezoid", "energy_bookkeeping_residual", "entropy",
    "envelope_constant", "evaluate_snapshot", "face_gradient", "grad_weight",
    "identity_residual_series", "key_identity_residual", "key_identity_study",
    "m_operator", "make_grid", "make_initial_state", "mass", "prop41_gap",
    "quarter_coefficient_gap", "refinement_study", "regest3_gap",
    "run_trajectory", "stable_dt", "standard_test_functions", "system_rhs",
    "total_flux", "vt_field",
]
