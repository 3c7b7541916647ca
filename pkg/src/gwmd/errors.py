"""Exception types raised across the package.

Validation problems (bad parameters, bad input files) derive from
:class:`ValidationError`; everything else is a runtime failure of the
computation itself. The CLI maps the two groups to distinct exit codes.
"""


class GWMDError(Exception):
    """Base class for all package errors."""


class ValidationError(GWMDError, ValueError):
    """Invalid user-supplied parameter or input."""

    def __init__(self, message, flag=None):
        super().__init__(message)
        self.flag = flag


class InvalidLaw(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class ZeroPopulation(GWMDError):
    pass


class DegenerateDenominator(GWMDError):
    """Self-normalizing denominator is exactly zero (0/0 statistic)."""


class NoRealInterval(GWMDError):
    pass


class NonfiniteMoment(GWMDError):
    pass


class PopulationCapExceeded(GWMDError):
    pass


class PopulationOverflow(GWMDError):
    """Generation size would not fit in a signed 64-bit integer."""


class SurvivalRejectionLimit(GWMDError):
    pass
