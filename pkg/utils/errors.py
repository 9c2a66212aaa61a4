"""Exception hierarchy shared by the services and the CLI.

Every error carries an ``exit_code`` so ``app.py`` can turn it into a process status.
"""


class HolomotionError(Exception):
    exit_code = 1


# ---------------- Configuration (exit 2) ----------------
class ConfigurationError(HolomotionError):
    exit_code = 2


class ExponentError(ConfigurationError):
    pass


class ShapeError(ConfigurationError):
    pass


class NotParabolicError(ConfigurationError):
    pass


# ---------------- Numerical (exit 3) ----------------
class NumericError(HolomotionError):
    exit_code = 3


class DomainError(NumericError):
    pass


class OutsideBallError(DomainError):
    pass


class DegenerateConfigurationError(NumericError):
    pass


class PreconditionError(NumericError):
    pass


class EmptySampleError(NumericError):
    pass


class InsufficientDataError(NumericError):
    pass


class InjectivityError(NumericError):
    pass


class PetalError(NumericError):
    pass


class OverflowGuardError(NumericError):
    pass


class QuadratureError(NumericError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TruncationError(NumericError):
    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class TrajectoryCollisionError(NumericError):
    def __init__(self, message, pair=None, parameter=None):
        super().__init__(message)
        self.pair = pair
        self.parameter = parameter


class InversionError(NumericError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


# ---------------- Non-convergence (exit 4) ----------------
class NonConvergenceError(HolomotionError):
    exit_code = 4

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
