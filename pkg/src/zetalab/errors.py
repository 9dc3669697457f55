"""Exception hierarchy shared by all zetalab modules.

Every domain failure derives from :class:`ZetaLabError`; the CLI maps these to
exit status 2.
"""


class ZetaLabError(Exception):
    """Base class for domain errors."""


class LengthError(ZetaLabError, ValueError):
    pass


class IncompleteSpecError(ZetaLabError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class DegenerateFitError(ZetaLabError, ValueError):
    pass


class ParameterError(ZetaLabError, ValueError):
    pass


class PoleError(ZetaLabError, ZeroDivisionError):
    pass


class BranchError(ZetaLabError, ValueError):
    """A logarithm or square root was requested on a slit or across a zero."""


class RangeError(ZetaLabError, ValueError):
    pass


class FunctionalEquationViolation(ZetaLabError, ArithmeticError):
    pass


class SingularPointError(ZetaLabError, ArithmeticError):
    pass


class RadiusError(ZetaLabError, ValueError):
    pass


class BoundaryError(ZetaLabError, ArithmeticError):
    """An a-point sits on (or persistently too close to) a contour."""


class AccuracyError(ZetaLabError, ArithmeticError):
    pass


class RefinementError(ZetaLabError, ArithmeticError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class OrderError(ZetaLabError, ValueError):
    pass


class UndefinedFractionError(ZetaLabError, ValueError):
    pass


class ProfileError(ZetaLabError, ValueError):
    pass


class DegeneratePhaseError(ZetaLabError, ValueError):
    pass


class TruncationError(ZetaLabError, ValueError):
    pass


class SampleSizeError(ZetaLabError, ValueError):
    pass


class QuadratureError(ZetaLabError, ArithmeticError):
    pass


class ScaleError(ZetaLabError, ValueError):
    pass


class AdmissibilityError(ZetaLabError, ValueError):
    pass


class SingularFactorError(ZetaLabError, ZeroDivisionError):
    pass


class SamplingError(ZetaLabError, ArithmeticError):
    pass


class UnvalidatedAccuracyWarning(UserWarning):
    """Evaluation requested beyond the validated height ``t_cap``."""
