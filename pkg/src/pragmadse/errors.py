"""Exception types shared across the package."""


class PragmaDseError(Exception):
    """Base class for all package errors."""


class DslSyntaxError(PragmaDseError):
    """Malformed design-space text. Carries the 1-based source position."""

    def __init__(self, message, line, col):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class CyclicDependencyError(PragmaDseError):
    """Parameter conditions form a reference cycle."""

    def __init__(self, cycle):
        super().__init__("cyclic parameter dependency: " + " -> ".join(cycle))
        self.cycle = list(cycle)


class UnknownIdentifierError(PragmaDseError):
    """A condition references a name that is neither a parameter nor the
    bound comprehension variable."""


class EvalError(PragmaDseError):
    """Expression evaluation failed (sort mismatch, division by zero, ...)."""


class InvalidConfigError(PragmaDseError):
    """A configuration value is not a member of its own option list."""


class SpaceTooLargeError(PragmaDseError):
    """Enumeration was requested beyond the configured cap."""


class ModelError(PragmaDseError):
    """Ill-formed kernel model (zero trip count, duplicate loop ids, ...)."""


class StorageError(PragmaDseError):
    """Cache or log store is unreadable."""


class DomainError(PragmaDseError):
    """Utilization penalty requested at u >= 1 where it is undefined."""


class ZeroDenominatorError(PragmaDseError):
    """Finite difference between results with identical penalty."""


class TargetMismatchError(PragmaDseError):
    """Quality values with different targets cannot be compared."""


class TooManyPartitionsError(PragmaDseError):
    """2^m partitions would exceed the configured cap."""


class NoFeasiblePointError(PragmaDseError):
    """Every evaluated configuration was infeasible."""


class ConfigError(PragmaDseError):
    """Bad run configuration (CLI or RunConfig level)."""


class NotFoundError(PragmaDseError):
    """Requested run directory or artifact does not exist."""
