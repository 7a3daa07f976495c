"""Markov chains driven by orthonormal-series perturbations of the independence copula."""
from .basis import BasisFamily, BasisFunctionId, cross_moment, eval_antiderivative, eval_phi, fourth_moment
from .chain import ChainSample, RngStream, inverse_conditional, read_chain_csv, simulate, simulate_batch, write_chain_csv
from .copulas import (
    PRESETS,
    CopulaSpec,
    Family,
    GeneralSpec,
    cdf,
    conditional_cdf,
    density,
    preset,
    validate,
)
from .errors import CopulaError
from .experiment import CoverageReport, ExperimentConfig, run_coverage
from .mle import MleResult, fit_mle, log_likelihood, mle_confidence_intervals, observed_information, score
from .moment import (
    EstimateReport,
    TestResult,
    asymptotic_sigma,
    confidence_intervals,
    estimate_lambda,
    fit_moment,
    general_sigma,
    independence_test,
    region_statistic,
)
from .robust import KernelEstimate, empirical_bandwidth, fit_robust, model_bandwidth, robust_estimate, transform_series

__version__ = "0.1.0"

__all__ = [
    "BasisFamily",
    "BasisFunctionId",
    "cross_moment",
    "eval_antiderivative",
    "eval_phi",
    "fourth_moment",
    "ChainSample",
    "RngStream",
    "inverse_conditional",
    "read_chain_csv",
    "simulate",
    "simulate_batch",
    "write_chain_csv",
    "PRESETS",
    "CopulaSpec",
    "Family",
    "GeneralSpec",
    "cdf",
    "conditional_cdf",
    "density",
    "preset",
    "validate",
    "CopulaError",
    "CoverageReport",
    "ExperimentConfig",
    "run_coverage",
    "MleResult",
    "fit_mle",
    "log_likelihood",
    "mle_confidence_intervals",
    "observed_information",
    "score",
    "EstimateReport",
    "TestResult",
    "asymptotic_sigma",
    "confidence_intervals",
    "estimate_lambda",
    "fit_moment",
    "general_sigma",
    "independence_test",
    "region_statistic",
    "KernelEstimate",
    "empirical_bandwidth",
    "fit_robust",
    "model_bandwidth",
    "robust_estimate",
    "transform_series",
]
