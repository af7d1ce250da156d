"""Detection performance of balanced binary relay trees whose nodes and links fail."""

__version__ = "0.1.0"

from .core import (DomainError, ErrorTriplet, FailureSchedule, Trajectory, evolve, fuse_step,
                   local_failure_prob, silence_step, total_error, weighted_error)
from .geometry import RegionLabel, b_upper_boundary, check_flip, classify, ru_upper_boundary
from .bounds import (BoundsReport, classify_decay, estimate_c, required_sensors,
                     theorem1_upper, theorem23_bounds, theorem4_bounds)
from .sim import PairDistribution, SimEstimate, exact_pair_distribution, monte_carlo

__all__ = [
    "DomainError", "ErrorTriplet", "FailureSchedule", "Trajectory", "evolve", "fuse_step",
    "local_failure_prob", "silence_step", "total_error", "weighted_error",
    "RegionLabel", "b_upper_boundary", "check_flip", "classify", "ru_upper_boundary",
    "BoundsReport", "classify_decay", "estimate_c", "required_sensors",
    "theorem1_upper", "theorem23_bounds", "theorem4_bounds",
    "PairDistribution", "SimEstimate", "exact_pair_distribution", "monte_carlo",
]
