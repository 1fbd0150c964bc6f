"""Channel metrics for UAV air-to-ground links with platform wobbling and hardware impairments."""

__version__ = "0.1.0"

from .errors import (A2GError, BudgetExceededError, InvalidParameterError, NumericFailure,
                     UndefinedEstimateError, WrongModelError)
from .impairments import Ideal, ImpairmentSet, SinusoidalNonstationary, WssGaussian
from .scenario import Scenario, ThresholdSpec, draw_rho
from .wobbling import NoWobble, PointMass, Sinusoidal, Uniform, Wiener

__all__ = [
    "__version__",
    "A2GError", "BudgetExceededError", "InvalidParameterError", "NumericFailure",
    "UndefinedEstimateError", "WrongModelError",
    "Ideal", "ImpairmentSet", "SinusoidalNonstationary", "WssGaussian",
    "Scenario", "ThresholdSpec", "draw_rho",
    "NoWobble", "PointMass", "Sinusoidal", "Uniform", "Wiener",
]
