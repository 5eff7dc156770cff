"""Exception hierarchy. The CLI maps each family to an exit code."""


class IncInterpError(Exception):
    exit_code = 3


class ValidationError(IncInterpError, ValueError):
    exit_code = 2


class NumericalError(IncInterpError):
    exit_code = 3


class PoleError(NumericalError):
    """A density was evaluated at a non-removable pole."""


class MinimalityError(NumericalError):
    """The minimality integral diverges (or could not be shown finite)."""


class QuadratureError(NumericalError):
    def __init__(self, msg, residual=float("nan")):
        super().__init__(f"{msg} (residual {residual:.3g})")
        self.residual = residual


class IndefiniteMatrixError(NumericalError):
    pass


class OrthogonalityError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class MissingObservationError(ValidationError):
    pass


class InfeasibleClassError(ValidationError):
    pass
