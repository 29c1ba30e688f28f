"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit 1, data
problems exit 2 and training divergence exits 3.
"""


class ThermoforgeError(Exception):
    """Base class for all package errors."""


class ConfigError(ThermoforgeError):
    """Malformed, unknown or mistyped configuration."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class DataError(ThermoforgeError):
    """Problems with input data: schema, parsing, empty input, bad labels."""


class SchemaError(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"missing required column {column!r}")


class ParseError(DataError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r} as a number")


class EmptyInputError(DataError):
    pass


class InvalidParameterError(ThermoforgeError, ValueError):
    """A hyperparameter or argument outside its valid domain."""


class UnsupportedOperationError(ThermoforgeError, TypeError):
    """Operation requested on a model type that does not support it."""


class TrainingDivergenceError(ThermoforgeError, FloatingPointError):
    """A loss became non-finite during training."""

    def __init__(self, message, epoch=None, index=None):
        self.epoch = epoch
        self.index = index
        super().__init__(message)
