"""Exception types shared across the library."""


class FormatError(ValueError):
    """Malformed or truncated on-disk payload."""


class DataError(ValueError):
    """Payload values violate a data invariant (non-finite, negative depth)."""


class DimensionError(ValueError):
    """Array shapes or lengths do not line up."""


class ConnectivityError(ValueError):
    """An edge set does not span all nodes."""


class ContractError(RuntimeError):
    """An operation was invoked outside its stated contract."""


class SolverError(RuntimeError):
    """A dense linear solve reported a singular system."""


class UndefinedStatisticError(ValueError):
    """A required statistic (variance, correlation, range) is degenerate."""
