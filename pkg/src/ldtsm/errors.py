"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LdtsmError(Exception):
    """Base class for all errors raised by this package."""


class NoClosedFormError(LdtsmError):
    """The requested density has no closed form; use the inversion engine."""


class DensityDomainError(LdtsmError):
    """The density is undefined (divergent) at the requested point."""


class AtomicDistributionError(LdtsmError):
    """The law is atomic (bounded characteristic exponent); no density exists."""


class CutoffError(LdtsmError):
    """The frequency cutoff of an inversion grid is too small for the
    requested time; carries an estimate of the cutoff that would suffice."""

    def __init__(self, message: str, required_cutoff: float):
        super().__init__(message)
        self.required_cutoff = required_cutoff


class GridError(LdtsmError):
    """Invalid inversion or path grid."""


class QuadratureError(LdtsmError):
    """Adaptive quadrature did not converge within the evaluation budget;
    carries the last estimate and its error bound."""

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class StateSupportError(LdtsmError):
    """A pricing state fell outside the support where the state price
    density is strictly positive."""


class CalibrationError(LdtsmError):
    """Base class for curve calibration failures."""


class UnattainableCurveError(CalibrationError):
    """No time shift reproduces the quoted price; carries the attainable
    price range for diagnostics."""

    def __init__(self, message: str, attainable: tuple[float, float]):
        super().__init__(message)
        self.attainable = attainable


class AmbiguousRootError(CalibrationError):
    """The objective changes sign more than once on the search bracket;
    carries the candidate root intervals."""

    def __init__(self, message: str, intervals: list[tuple[float, float]]):
        super().__init__(message)
        self.intervals = intervals


class ScenarioError(LdtsmError):
    """A scenario configuration failed validation; carries one message per
    offending field, qualified by its JSON path."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid scenario: " + "; ".join(problems))
        self.problems = problems
