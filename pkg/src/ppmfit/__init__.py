"""Poisson point-process models for presence-only point data.

Fits log-linear intensity models by numerical quadrature and weighted
Poisson regression, fits the matching presence/background logistic
regression, and provides the simulation and K-function machinery to check
goodness of fit and the equivalence between the two estimators.
"""

from .design import ModelSpec, build_design, destandardize_coefficients, fit_standardization
from .diagnostics import KFunctionResult, default_r_grid, envelope_ranks, k_envelope, k_inhom
from .logistic import (
    ExperimentTrace,
    LogisticFit,
    WeightInvarianceReport,
    binary_loglik,
    binary_poisson_gap,
    convergence_experiment,
    equal_weight_invariance,
    fit_logistic,
    intercept_offset,
)
from .ppm import (
    FitResult,
    PredictorOverflowError,
    RankDeficientError,
    fit_ppm,
    ppm_fisher,
    ppm_loglik,
    ppm_score,
    predict_intensity,
)
from .quadrature import (
    QuadratureScheme,
    build_equal_weight_scheme,
    build_grid_scheme,
    build_random_scheme,
    sample_uniform_in_region,
    unit_weight_scheme,
)
from .rasters import (
    CovariateStack,
    RasterGrid,
    load_stack,
    read_ascii_grid,
    sample_covariates,
    write_ascii_grid,
)
from .region import (
    PointSet,
    Region,
    compute_tile_weights,
    filter_to_region,
    generate_quadrature_grid,
    load_points_csv,
    region_area,
    save_points_csv,
)
from .selection import (
    RefinementError,
    RefinementTrace,
    SchemeBuilder,
    SelectionTable,
    all_subsets_aic,
    refine_until_converged,
)
from .simulate import IntensitySurface, simulate_poisson

__version__ = "0.1.0"

__all__ = [
    "CovariateStack",
    "ExperimentTrace",
    "FitResult",
    "IntensitySurface",
    "KFunctionResult",
    "LogisticFit",
    "ModelSpec",
    "PointSet",
    "PredictorOverflowError",
    "QuadratureScheme",
    "RankDeficientError",
    "RasterGrid",
    "RefinementError",
    "RefinementTrace",
    "Region",
    "SchemeBuilder",
    "SelectionTable",
    "WeightInvarianceReport",
    "all_subsets_aic",
    "binary_loglik",
    "binary_poisson_gap",
    "build_design",
    "build_equal_weight_scheme",
    "build_grid_scheme",
    "build_random_scheme",
    "compute_tile_weights",
    "convergence_experiment",
    "default_r_grid",
    "destandardize_coefficients",
    "envelope_ranks",
    "equal_weight_invariance",
    "filter_to_region",
    "fit_logistic",
    "fit_ppm",
    "fit_standardization",
    "generate_quadrature_grid",
    "intercept_offset",
    "k_envelope",
    "k_inhom",
    "load_points_csv",
    "load_stack",
    "ppm_fisher",
    "ppm_loglik",
    "ppm_score",
    "predict_intensity",
    "read_ascii_grid",
    "refine_until_converged",
    "region_area",
    "sample_covariates",
    "sample_uniform_in_region",
    "save_points_csv",
    "simulate_poisson",
    "unit_weight_scheme",
    "write_ascii_grid",
]
