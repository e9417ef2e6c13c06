"""Exception hierarchy.

Two families matter to callers: `ValidationError` for bad inputs (malformed
data, schema violations, unsupported options) and `NumericalError` for
inputs that are well-formed but numerically unusable (non-PD covariance,
singular design, divergent integrals). The CLI maps them to exit codes 2 and 3.
"""


class GMDError(Exception):
    pass


class ValidationError(GMDError, ValueError):
    pass


class UnsupportedMeasureError(ValidationError):
    pass


class NumericalError(GMDError, ArithmeticError):
    pass


class NotPositiveDefiniteError(NumericalError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SingularDesignError(NumericalError):
    pass


class IntegrationError(NumericalError):
    pass


class SimulationAborted(NumericalError):
    pass
