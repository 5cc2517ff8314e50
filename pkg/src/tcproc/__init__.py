"""Convolution-type derivatives with respect to Bernstein functions and
Poisson/Skellam processes time-changed by inverse subordinators."""
__version__ = "0.1.0"

from .bernstein import BernsteinFunction, make_custom, make_stable, make_tempered_stable
from .convderiv import (DifferentiableCurve, QuadratureSpec, caputo_derivative, cd_derivative,
                        laplace_identity_residual, rl_derivative)
from .exceptions import (BestEffortWarning, ConditionError, DomainError, IntegrabilityError,
                         InversionDisagreement, InversionError, SamplerError, TruncationError,
                         TruncationWarning)
from .laplace import TransformFunction, invert
from .montecarlo import (EmpiricalLaw, GofReport, SimulationPlan, goodness_of_fit,
                         simulate_poisson_tc, simulate_skellam_tc)
from .poisson import IntensityFunction, TimeChangedPoissonLaw, base_pmf, mgf_general
from .report import ResidualReport
from .skellam import SkellamParams, TimeChangedSkellamLaw, skellam_pmf
from .special import bessel_i, mittag_leffler, stirling2
from .subordinator import InverseSubordinatorLaw, simulate_inverse

__all__ = [
    "__version__",
    "BernsteinFunction",
    "make_custom",
    "make_stable",
    "make_tempered_stable",
    "DifferentiableCurve",
    "QuadratureSpec",
    "caputo_derivative",
    "cd_derivative",
    "laplace_identity_residual",
    "rl_derivative",
    "BestEffortWarning",
    "ConditionError",
    "DomainError",
    "IntegrabilityError",
    "InversionDisagreement",
    "InversionError",
    "SamplerError",
    "TruncationError",
    "TruncationWarning",
    "TransformFunction",
    "invert",
    "EmpiricalLaw",
    "GofReport",
    "SimulationPlan",
    "goodness_of_fit",
    "simulate_poisson_tc",
    "simulate_skellam_tc",
    "IntensityFunction",
    "TimeChangedPoissonLaw",
    "base_pmf",
    "mgf_general",
    "ResidualReport",
    "SkellamParams",
    "TimeChangedSkellamLaw",
    "skellam_pmf",
    "bessel_i",
    "mittag_leffler",
    "stirling2",
    "InverseSubordinatorLaw",
    "simulate_inverse",
]
