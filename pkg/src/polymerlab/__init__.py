"""Correlated-disorder pinning and copolymer models: engines and estimators."""

from . import constants, correlation, disorder, estimators, partition, renewal, verify
from .correlation import (CorrelationModel, exponential_model, finite_range_model,
                          iid_model, parse_model, polynomial_model)
from .renewal import RenewalLaw, build_renewal_law, custom_law, parse_law

__all__ = [
    "constants", "correlation", "disorder", "estimators", "partition",
    "renewal", "verify",
    "CorrelationModel", "RenewalLaw",
    "iid_model", "finite_range_model", "polynomial_model", "exponential_model",
    "build_renewal_law", "custom_law", "parse_model", "parse_law",
]

__version__ = "0.1.0"
