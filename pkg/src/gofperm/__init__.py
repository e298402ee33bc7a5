"""Permutation-calibrated goodness-of-fit tests for linear regression."""

from .engine import (
    GofTestResult,
    TestSpec,
    envelope,
    exhaustive_test,
    permutation_pvalue,
    run_test,
    run_tests,
)
from .exceptions import (
    DegenerateSample,
    DegenerateVariance,
    GofError,
    IndexOutOfRange,
    InvalidDesign,
    InvalidParams,
    MissingValue,
    NonFinite,
    NoTraces,
    ParseError,
    RankDeficient,
    TooLarge,
    UnknownColumn,
)
from .linreg import Dataset, FitResult, OLSDesign, fit_ols, refit_on_outcome
from .nullgen import (
    PermuteRawData,
    PermuteResiduals,
    ReplicateStream,
    ResidualBootstrap,
    SWSimulation,
    WildBootstrap,
)
from .process import (
    Covariate,
    FullModel,
    ResidualProcess,
    Subset,
    build_process,
    cvm_statistic,
    ks_statistic,
    ordering_values,
    plugin_covariance,
)

__version__ = "0.1.0"

__all__ = [
    "Covariate",
    "Dataset",
    "DegenerateSample",
    "DegenerateVariance",
    "FitResult",
    "FullModel",
    "GofError",
    "GofTestResult",
    "IndexOutOfRange",
    "InvalidDesign",
    "InvalidParams",
    "MissingValue",
    "NoTraces",
    "NonFinite",
    "OLSDesign",
    "ParseError",
    "PermuteRawData",
    "PermuteResiduals",
    "RankDeficient",
    "ReplicateStream",
    "ResidualBootstrap",
    "ResidualProcess",
    "SWSimulation",
    "Subset",
    "TestSpec",
    "TooLarge",
    "UnknownColumn",
    "WildBootstrap",
    "build_process",
    "cvm_statistic",
    "envelope",
    "exhaustive_test",
    "fit_ols",
    "ks_statistic",
    "ordering_values",
    "permutation_pvalue",
    "plugin_covariance",
    "refit_on_outcome",
    "run_test",
    "run_tests",
]
