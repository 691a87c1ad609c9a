"""Exception hierarchy shared by utils, engines and the CLI."""


class QGDualError(Exception):
    """Base class for all package errors."""


class ConfigError(QGDualError, ValueError):
    """Invalid run parameters or configuration file."""


class DomainError(QGDualError, ValueError):
    """A configuration lies outside the domain of an algebra or duality variant."""


class InexactDivisionError(QGDualError, ArithmeticError):
    """An exact division in Q[q, q^-1] left a remainder."""


class NilpotencyError(QGDualError):
    """A q-exponential series did not terminate within the dimension bound."""


class ConvergenceError(QGDualError):
    """Uniformization truncation bound not reached."""
