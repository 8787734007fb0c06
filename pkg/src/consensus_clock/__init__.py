"""Analytic and Monte Carlo time-to-consensus toolkit.

The package computes closed-form consensus statistics for a stylized
two-race chain model (Laplace transforms, means, tail exponents) and for a
general delayed-growth model (security threshold, tilt, cycle-count decay
rate), and validates each against reproducible ensemble simulation.
"""

from .delays import DelaySpec, parse_delay_spec
from .errors import (BracketError, ConsensusClockError, DomainError,
                     InsufficientDataError, PreconditionError, SchemaError,
                     SecurityThresholdError)
from .mm1 import (BitcoinParams, busy_lt, cycle_lt, dominant_pole, kappa_lt,
                  residual_lt, tail_exponent, ttc_excursion_lt, ttc_lt,
                  ttc_mean, unstable_cycle_lt)
from .renewal import RenewalLaw
from .thresholds import (ThresholdReport, gamma_rate, j_transform, p_critical,
                         solve_thresholds, z_star)

__version__ = "0.1.0"

__all__ = [
    "BitcoinParams", "BracketError", "ConsensusClockError", "DelaySpec",
    "DomainError", "InsufficientDataError", "PreconditionError",
    "RenewalLaw", "SchemaError", "SecurityThresholdError", "ThresholdReport",
    "busy_lt", "cycle_lt", "dominant_pole", "gamma_rate", "j_transform",
    "kappa_lt", "p_critical", "parse_delay_spec", "residual_lt",
    "solve_thresholds", "tail_exponent", "ttc_excursion_lt", "ttc_lt",
    "ttc_mean", "unstable_cycle_lt", "z_star",
]
