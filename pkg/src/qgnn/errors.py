"""Exception hierarchy shared by all modules."""


class QGNNError(Exception):
    """Base class for package errors."""


class ConfigurationError(QGNNError, ValueError):
    """Invalid setup: bad sizes, ranges or config keys."""


class DimensionError(QGNNError, ValueError):
    """Array lengths or shapes do not line up."""


class DomainError(QGNNError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericError(QGNNError, ArithmeticError):
    """A non-finite value appeared during computation."""


class ParseError(QGNNError, ValueError):
    """Malformed input file; message names the file and line."""


class CheckpointError(QGNNError, ValueError):
    """Checkpoint file is malformed or does not fit the model."""
