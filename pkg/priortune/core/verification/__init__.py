"""Finite-difference gradient verification"""

from .gradient_suite import (
    CHECKS,
    DEFAULT_TOLERANCE,
    TINY_CONFIG,
    GradCheckResult,
    GradientSuiteReport,
    run_gradient_suite,
)

__all__ = [
    "CHECKS",
    "DEFAULT_TOLERANCE",
    "TINY_CONFIG",
    "GradCheckResult",
    "GradientSuiteReport",
    "run_gradient_suite",
]
