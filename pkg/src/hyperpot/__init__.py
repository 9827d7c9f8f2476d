"""Potential operators, maximal functions and Orlicz norms on finite
commutative hypergroups, with empirical verification of the boundedness
results they satisfy."""

from .errors import (
    ConfigError,
    DivergentIntegralError,
    IncompleteTableError,
    InvalidRadiusError,
    InvariantViolationError,
    KernelHypothesisError,
    NoHaarError,
    NormComputationError,
    SpaceMismatchError,
)
from .metric_space import (
    DiscreteSpace,
    ball,
    ball_measure,
    canonical_radii,
    doubling_constant,
    quasi_triangle_constant,
    rescale,
)
from .hypergroup import (
    AxiomReport,
    ConvolutionTable,
    GridFunction,
    builtin_group_table,
    check_axioms,
    convolve_functions,
    convolve_point_measures,
    make_bessel,
    make_chebyshev,
    make_conjugacy,
    make_cyclic,
    solve_haar,
    translate,
    translate_at,
    translation_tensor,
)
from .orlicz import (
    KERNEL_FAMILIES,
    KernelSpec,
    NFunction,
    a_integral,
    build_nfunction,
    kernel_certificates,
    kernel_eval,
    lp_norm,
    luxemburg_norm,
)
from .operators import (
    PotentialConfig,
    hedberg_integrand,
    hedberg_pointwise_ratio,
    hedberg_split,
    kernel_profile,
    maximal_function,
    potential,
    potential_integrand,
    rho_maximal_function,
    riesz_potential,
)
from .verify import (
    DEFAULT_CONFIG,
    DRIFT_THRESHOLD,
    SUITE_NAMES,
    BoundednessReport,
    ConditionCertificate,
    build_instance,
    check_conditions,
    check_domination,
    default_suite,
    drift_percent,
    kernel_from_dict,
    normalized_suite,
    run_experiment,
    verify_corollary,
    verify_hedberg_estimates,
    verify_strong_pp,
    verify_theorem,
    verify_weak_1_1,
    with_drift,
)

__all__ = [
    "ConfigError",
    "DivergentIntegralError",
    "IncompleteTableError",
    "InvalidRadiusError",
    "InvariantViolationError",
    "KernelHypothesisError",
    "NoHaarError",
    "NormComputationError",
    "SpaceMismatchError",
    "DiscreteSpace",
    "ball",
    "ball_measure",
    "canonical_radii",
    "doubling_constant",
    "quasi_triangle_constant",
    "rescale",
    "AxiomReport",
    "ConvolutionTable",
    "GridFunction",
    "builtin_group_table",
    "check_axioms",
    "convolve_functions",
    "convolve_point_measures",
    "make_bessel",
    "make_chebyshev",
    "make_conjugacy",
    "make_cyclic",
    "solve_haar",
    "translate",
    "translate_at",
    "translation_tensor",
    "KERNEL_FAMILIES",
    "KernelSpec",
    "NFunction",
    "a_integral",
    "build_nfunction",
    "kernel_certificates",
    "kernel_eval",
    "lp_norm",
    "luxemburg_norm",
    "PotentialConfig",
    "hedberg_integrand",
    "hedberg_pointwise_ratio",
    "hedberg_split",
    "kernel_profile",
    "maximal_function",
    "potential",
    "potential_integrand",
    "rho_maximal_function",
    "riesz_potential",
    "DEFAULT_CONFIG",
    "DRIFT_THRESHOLD",
    "SUITE_NAMES",
    "BoundednessReport",
    "ConditionCertificate",
    "build_instance",
    "check_conditions",
    "check_domination",
    "default_suite",
    "drift_percent",
    "kernel_from_dict",
    "normalized_suite",
    "run_experiment",
    "verify_corollary",
    "verify_hedberg_estimates",
    "verify_strong_pp",
    "verify_theorem",
    "verify_weak_1_1",
    "with_drift",
]

__version__ = "0.1.0"
