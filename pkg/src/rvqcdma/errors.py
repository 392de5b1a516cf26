"""Exception types shared across the package."""


class RvqError(Exception):
    """Base class for all package errors."""

    code = "error"


class NoConvergence(RvqError):
    code = "no_convergence"


class OutOfDomain(RvqError, ValueError):
    code = "out_of_domain"


class Singular(RvqError):
    code = "singular"


class BudgetExceeded(RvqError):
    code = "budget_exceeded"


class Unreachable(RvqError):
    """Target SINR lies above the infinite-feedback limit."""

    code = "unreachable"

    def __init__(self, message, gap_db=None):
        super().__init__(message)
        self.gap_db = gap_db


class ConfigError(RvqError, ValueError):
    code = "config_error"

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
