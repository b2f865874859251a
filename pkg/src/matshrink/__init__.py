"""Minimax shrinkage estimation of normal mean matrices under matrix quadratic loss.

The package provides closed-form and generalized Bayes shrinkage estimators,
the unbiased matrix-quadratic risk estimate, numerical certification of
matrix superharmonicity for shrinkage prior families, and seeded Monte Carlo
risk experiments with eigenvalue extraction.
"""

from ._backend import BACKEND, HAVE_COMPILED
from .errors import (
    DimensionMismatch,
    LowESSWarning,
    MatShrinkError,
    NonConvergence,
    NonFiniteEvaluation,
    RegimeViolation,
    SingularGram,
    SingularPoint,
    Unsupported,
    ZeroColumn,
)
from .estimators import (
    ColumnwiseJS,
    EfronMorris,
    EstimatorSpec,
    GeneralizedBayes,
    GeneralizedShrinkage,
    ISConfig,
    JamesStein,
    MLE,
    columnwise_js,
    efron_morris,
    estimate,
    gb_posterior_mean,
    generalized_shrinkage,
    james_stein,
    spec_from_json,
    spec_to_json,
)
from .matcore import (
    ProblemDims,
    RngState,
    embed_spectrum,
    gram_inverse,
    loewner_leq,
    sample_matrix_normal,
    singular_values,
    sym_eig,
    symmetrize,
)
from .priors import (
    ColumnwiseStein,
    Flat,
    MatrixT,
    PriorSpec,
    SVS,
    SteinFrobenius,
    claimed_matrix_superharmonic,
    density,
    grad_log_density,
    laplacian_density_ratio,
    log_density,
    matrix_laplacian_closed,
    prior_from_json,
    prior_to_json,
    pseudo_marginal_log,
)
from .risk import (
    RiskReport,
    SureCheckReport,
    SureReport,
    em_exact_risk_at_zero,
    frobenius_reduction_bound,
    matrix_divergence_fd,
    mc_risk,
    minimaxity_sweep,
    sure,
    sure_unbiasedness_check,
    sweep_to_csv,
)
from .superharmonic import (
    CERTIFIED_NSD,
    INCONCLUSIVE,
    VIOLATION_FOUND,
    SpherePerturbation,
    SuperharmonicReport,
    certify,
    default_perturbations,
    default_test_points,
    matrix_laplacian_fd,
    sphere_average,
    vectorized_laplacian_fd,
)

__version__ = "0.1.0"
