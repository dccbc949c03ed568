"""Exception types raised by mnnlab."""


class MnnLabError(Exception):
    """Base class for all package errors."""


class ValidationError(MnnLabError):
    """Invalid input, such as a malformed config or mismatched dimensions.

    ``path`` carries the config field path when the error comes from a
    scenario document.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class InvalidCharacteristicError(ValidationError):
    pass


class InvalidTopologyError(ValidationError):
    pass


class HypothesisError(ValidationError):
    """A hypothesis of a boundedness/convergence result does not hold."""


class NumericalError(MnnLabError):
    """Base class for failures of a numerical procedure."""


class ConvergenceFailure(NumericalError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class TruncatedTrajectoryError(NumericalError):
    """The integrator hit ``max_steps``; ``trajectory`` holds the partial data."""

    def __init__(self, message, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class NumericalBlowupError(NumericalError):
    def __init__(self, message, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class AtlasTooLargeError(NumericalError):
    pass


class UnsupportedCharacteristicError(ValidationError):
    pass


class ClassificationError(NumericalError):
    def __init__(self, message, matrix=None):
        self.matrix = matrix
        super().__init__(message)


class TaskFailure(NumericalError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
