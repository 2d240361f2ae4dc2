"""Exception types raised across the package."""


class ParamRCError(Exception):
    """Base class for package errors."""


class InvalidStateError(ParamRCError, ValueError):
    pass


class DivergenceError(ParamRCError, ArithmeticError):
    """A trajectory left the configured amplitude bound or went non-finite."""

    symbol_index: int | None = None


class StepUnderflowError(ParamRCError, ArithmeticError):
    symbol_index: int | None = None


class InsufficientDataError(ParamRCError, ValueError):
    pass


class DegenerateError(ParamRCError, ValueError):
    """Zero-range series, constant truth, or no usable feature columns."""


class ConfigError(ParamRCError, ValueError):
    pass
