"""Exception hierarchy.

Two families: :class:`ValidationError` for violated preconditions (bad
shapes, bad parameters, out-of-range inputs) and :class:`NumericalError`
for computations that ran but could not produce a trustworthy number.
The CLI maps them to distinct exit codes.
"""


class LabError(Exception):
    """Base class for every error raised by cwlab."""


class ValidationError(LabError, ValueError):
    pass


class NumericalError(LabError, ArithmeticError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class StepMismatch(ValidationError):
    pass


class DegenerateWindow(ValidationError):
    pass


class BelowInghamTime(ValidationError):
    pass


class FrequencyMismatch(ValidationError):
    pass


class SqrtFailure(NumericalError):
    pass


class SingularPencil(NumericalError):
    pass


class NearSingularResolvent(NumericalError):
    pass


class SingularMatching(NumericalError):
    pass


class CoincidentRoots(NumericalError):
    pass


class OverflowGuard(NumericalError):
    pass


class BlowUp(NumericalError):
    pass
