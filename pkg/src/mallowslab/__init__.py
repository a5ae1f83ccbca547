"""Mallows (Wasserstein) distances between empirical and model laws.

Exact distances, limit laws of the normalised distance, hazard-based tail
diagnostics and a bootstrap toolkit for the sample-mean root.
"""
__version__ = "0.1.0"

from .dist import (  # noqa: E402
    DivergentMomentError,
    DomainError,
    EmpiricalDistribution,
    PreconditionError,
    StepDistribution,
    abs_moment,
    parse_model,
    quantile,
    sample,
)
from .kernels import BACKEND  # noqa: E402
from .mallows import distance, distance_emp_cont, distance_step_step  # noqa: E402

__all__ = [
    "BACKEND",
    "DivergentMomentError",
    "DomainError",
    "EmpiricalDistribution",
    "PreconditionError",
    "StepDistribution",
    "abs_moment",
    "distance",
    "distance_emp_cont",
    "distance_step_step",
    "parse_model",
    "quantile",
    "sample",
]
