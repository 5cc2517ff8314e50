"""Exception and warning types raised across the package."""


class DomainError(ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class IntegrabilityError(ValueError):
    """A Levy density fails the integrability requirement of a Bernstein function."""


class ConditionError(ValueError):
    """The Bernstein function does not satisfy the infinite-activity condition."""


class InversionError(ArithmeticError):
    """The transform could not be evaluated where a Laplace inversion needs it."""


class InversionDisagreement(InversionError):
    """The two independent Laplace inversion routes disagree beyond tolerance."""

    def __init__(self, message, contour=None, real_axis=None):
        super().__init__(message)
        self.contour = contour
        self.real_axis = real_axis


class TruncationError(ArithmeticError):
    """A truncation certificate could not be established."""


class SamplerError(RuntimeError):
    """A random-variate generator exceeded its iteration guard."""


class TruncationWarning(UserWarning):
    pass


class BestEffortWarning(UserWarning):
    """Result computed outside the range where accuracy is guaranteed."""
