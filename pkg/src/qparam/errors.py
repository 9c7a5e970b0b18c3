"""Exception hierarchy shared across the package."""


class QParamError(Exception):
    """Base class for all package errors."""


class DomainError(QParamError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(QParamError, TypeError):
    """An operation was applied to an object of the wrong kind (e.g. regime mismatch)."""


class ConfigError(QParamError):
    """Invalid scenario configuration. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ConvergenceError(QParamError, RuntimeError):
    """A truncated sum or iterative procedure failed to converge."""


class OracleError(ConvergenceError):
    """Reference quadrature did not reach its tolerance."""
