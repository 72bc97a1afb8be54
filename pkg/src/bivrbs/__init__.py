"""Bivariate Birnbaum-Saunders distribution parameterized by mean and precision.

Submodules
----------
numerics   normal/bivariate-normal functions and quadrature
rbs        univariate RBS(mu, delta) distribution
brbs       bivariate distribution, reliability, moments, mode, conditionals
sampling   reproducible random variates
estimate   ML and MM fitting with Wald, MM, Fisher and KX intervals
gof        Mahalanobis/Wilson-Hilferty KS test, PP/QQ and TTT data
simlab     Monte Carlo bias/MSE and coverage harness
cli        command-line entry point
"""

from .brbs import (
    BrbsParams,
    brbs_cdf,
    brbs_hr,
    brbs_pdf,
    brbs_sf,
    correlation,
    covariance,
    mode_find,
    product_moment,
    reliability,
)
from .datasets import load_stiffness
from .estimate import BivariateSample, FitReport, fit_ml, fit_mm
from .exceptions import (
    BrbsError,
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    InconsistencyError,
    IntervalError,
    NumericalError,
    ParseError,
    SampleTooSmallError,
)
from .rbs import RbsParams, rbs_cdf, rbs_pdf, rbs_quantile
from .sampling import SeededStream, sample_brbs, sample_rbs

__version__ = "0.1.0"

__all__ = [
    "BrbsParams",
    "RbsParams",
    "BivariateSample",
    "FitReport",
    "SeededStream",
    "brbs_pdf",
    "brbs_cdf",
    "brbs_sf",
    "brbs_hr",
    "reliability",
    "product_moment",
    "covariance",
    "correlation",
    "mode_find",
    "rbs_pdf",
    "rbs_cdf",
    "rbs_quantile",
    "sample_rbs",
    "sample_brbs",
    "fit_ml",
    "fit_mm",
    "load_stiffness",
    "BrbsError",
    "DomainError",
    "NumericalError",
    "InconsistencyError",
    "ConvergenceError",
    "DegenerateSampleError",
    "SampleTooSmallError",
    "IntervalError",
    "ParseError",
]
