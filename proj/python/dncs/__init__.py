"""Optimal decentralized control of networked systems with unreliable uplinks.

Thin re-export of the compiled core: coupled Riccati solvers, critical
drop-probability thresholds, auxiliary-MJLS stability tests and closed-loop
Monte Carlo simulation. Matrices are numpy arrays throughout.
"""

from ._core import (
    BarRepresentation,
    DcareSolution,
    DncsSpec,
    FeasibilityVerdict,
    FiniteCostCheck,
    FiniteSolution,
    IdentityCheck,
    MjlsModel,
    MjlsRecursions,
    NoiseKind,
    ShortcutReport,
    SimConfig,
    SimReport,
    SolveStatus,
    StabilityReport,
    SteadySolution,
    ThresholdReport,
    bar_representation,
    build_auxiliary_2c,
    build_auxiliary_nc,
    critical_probs,
    dcare_solve,
    feasibility_verdict,
    finite_horizon_cost_check,
    finite_horizon_solve,
    injection_search,
    is_detectable,
    is_stabilizable,
    kron,
    min_achievable_radius,
    mjls_finite_recursions,
    omega,
    phi,
    psi,
    run_monte_carlo,
    sd_test,
    second_moment_matrix,
    spectral_radius,
    sqrt_psd,
    ss_test,
    steady_solve,
    triangular_shortcut,
    two_controller_solve,
    two_controller_spec,
    uncontrollable_modes,
    verify_step_identity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
