"""Bayes factor sensitivity curves from a single extended-model MCMC fit."""

from .density import (
    DensityEstimate,
    KdeSpec,
    cmde_ttest,
    exact_density,
    iwmde_fit,
    kde_fit,
    plug_in_bandwidth,
    trunc_normal_fit,
    write_density_csv,
)
from .errors import (
    AnchorError,
    ConvergenceError,
    EstimationError,
    InvalidDataError,
    MixingError,
    QuadratureError,
    SupportError,
)
from .mcmc import (
    ChainConfig,
    PosteriorDraws,
    ProductSpaceSpec,
    diagnostics,
    sample_extended,
    sample_product_space,
)
from .models import (
    ConditionalPrior,
    HeterogeneityPrior,
    HyperPrior,
    MetaData,
    SensitivityModel,
    TTestData,
    TTestSufficient,
    conditional_prior_logpdf,
    conjugate_normal_model,
    default_ttest_model,
    informed_ttest_model,
    meta_loglik,
    meta_model,
    nct_logpdf,
    ttest_loglik,
    ttest_sufficient,
)
from .oracle import (
    AnchorResult,
    QuadratureSpec,
    anchor_bf,
    exact_bf_curve,
    inclusion_log_bf,
    marginal_likelihood_meta,
    marginal_likelihood_ttest,
)
from .sensitivity import (
    EnsembleSpec,
    SensitivityCurve,
    bf_curve,
    bf_surface,
    curve_error_report,
    dual_estimator_diagnostic,
    inclusion_bf_curve_bridge,
    inclusion_bf_curve_product_space,
    read_curve_csv,
    write_curve_csv,
)

__version__ = "0.1.0"
