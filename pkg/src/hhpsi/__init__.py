"""Psi-series machinery for the cubic Henon-Heiles system.

Regime classification, coefficient recursions, resummation into
exponential-polynomial coefficient functions, convergence certificates
and numerical cross-validation.
"""

from .errors import (CertificateError, CompatibilityError, ConvergenceWarning,
                     DegenerateLeadingCoefficientError, DivergentIntegralError,
                     InternalConsistencyError, InvalidParameterError,
                     InvalidResummationError, OutOfRangeError, ParseError,
                     PsiSeriesError, RegimeError)
from .exact import Surd
from .model import ModelParams, PhaseState, energy, rescale_parameters, vector_field
from .singularity import Regime, RegimeReport, classify, substitution_index
from .series import (CoefficientTable, expand, expand_case_i, expand_case_ii,
                     reindex_to_cgtw, reindex_to_double_series)
from .resummation import ExpoSum, ResummedSeries, resum, solve_by_integral
from .bounds import BoundCertificate, certify
from .validation import cross_validate, empirical_radius, evaluate_series, integrate_ode

__version__ = "0.1.0"

__all__ = [
    "BoundCertificate", "CertificateError", "CoefficientTable", "CompatibilityError",
    "ConvergenceWarning", "DegenerateLeadingCoefficientError", "DivergentIntegralError",
    "ExpoSum", "InternalConsistencyError", "InvalidParameterError", "InvalidResummationError",
    "ModelParams", "OutOfRangeError", "ParseError", "PhaseState", "PsiSeriesError", "Regime",
    "RegimeError", "RegimeReport", "ResummedSeries", "Surd", "certify", "classify",
    "cross_validate", "empirical_radius", "energy", "evaluate_series", "expand",
    "expand_case_i", "expand_case_ii", "integrate_ode", "reindex_to_cgtw",
    "reindex_to_double_series", "rescale_parameters", "resum", "solve_by_integral",
    "substitution_index", "vector_field",
]
