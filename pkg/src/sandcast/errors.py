"""Exception hierarchy.

Every error carries the process exit code the command line maps it to:
2 for data / validation problems, 3 for numeric failures during training.
"""


class SandcastError(Exception):
    exit_code = 2


class DataError(SandcastError, ValueError):
    """Input data violates a documented format or precondition."""


class ParseError(DataError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class OrderingError(ParseError):
    pass


class InsufficientDataError(DataError):
    pass


class ExtrapolationError(DataError):
    pass


class MissingTraceError(DataError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NoOverlapError(DataError):
    pass


class TopsError(DataError):
    pass


class EmptyZoneError(DataError):
    pass


class DegenerateError(DataError):
    """Zero-variance predictor, constant target or constant series."""


class UnknownWellError(DataError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class GeometryError(DataError):
    pass


class ModelFormatError(DataError):
    pass


class ConfigError(DataError):
    """Invalid configuration value (hidden size, window, epochs...)."""


class CapacityError(ConfigError):
    """Too many trainable parameters for the available training patterns."""


class InconsistentComparisonError(DataError):
    pass


class NumericFailure(SandcastError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, epoch=None):
        self.epoch = epoch
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
