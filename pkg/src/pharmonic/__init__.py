"""Rotationally symmetric p-harmonic maps between warped-product manifolds."""

from .asymptotics import (
    AsymptoticsReport,
    analyze_asymptotics,
    check_energy_ratio,
    estimate_limits,
    fit_decay_exponent,
    theoretical_D,
)
from .certify import Certificate, analyze_terms, scan_sign
from .geometry import (
    ModelParameters,
    ValidationReport,
    WarpingFunction,
    a2_sign_condition,
    decay_exponent,
    epsilon_bound,
    make_domain_warp,
    make_euclidean_warp,
    make_target_warp,
    validate_parameters,
)
from .operators import (
    ConvexProfile,
    Decomposition,
    PointState,
    decomposition,
    energy_density_sq,
    hessian_convexity_check,
    linear_profile,
    linquad_profile,
    p_laplacian_composition,
    p_tension_residual,
    polynomial_profile,
    quadratic_profile,
    solve_second_derivative,
    tension,
)
from .profile_ode import (
    ProfileSolution,
    SolverConfig,
    evaluate,
    integrate,
    load_solution,
    monotone_quantity,
    save_solution,
    series_start,
)

__version__ = "0.1.0"
