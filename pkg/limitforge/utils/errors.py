"""
Error taxonomy for LimitForge.

Library code raises these; boundaries (CLI handlers, workflow nodes) catch them
and turn them into result envelopes and exit codes.
"""

from typing import Any, Dict, Optional


class LimitForgeError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1

    def to_result(self) -> Dict[str, Any]:
        return {"success": False, "error": str(self), "error_type": type(self).__name__}


class SizeBoundExceeded(LimitForgeError):
    """An exact computation would exceed a configured bound.

    Args:
        bound: name of the configured bound (matches the Settings field)
        limit: the configured value
        requested: what the call would have needed
    """

    exit_code = 3

    def __init__(self, bound: str, limit: Any, requested: Any, detail: Optional[str] = None):
        self.bound = bound
        self.limit = limit
        self.requested = requested
        message = f"size bound '{bound}' exceeded: requested {requested}, limit {limit}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)

    def to_result(self) -> Dict[str, Any]:
        result = super().to_result()
        result.update({"bound": self.bound, "limit": self.limit, "requested": self.requested})
        return result


class InvalidGraphError(LimitForgeError, ValueError):
    """Malformed graph input: bad endpoints, loops where forbidden, bad parameters."""


class LabelMismatchError(LimitForgeError, ValueError):
    """Label counts of two labeled graphs (or quantum graph terms) differ."""


class DomainError(LimitForgeError, ValueError):
    """A quantity is undefined for the given arguments."""


class InfeasibleBalanceError(LimitForgeError, ValueError):
    """No integer class sizes satisfy a proportion constraint."""


class BracketInconsistencyError(LimitForgeError):
    """A lower bound came out above its upper bound."""


class RepresentativeCapExceeded(LimitForgeError):
    """The representative set outgrew the practical cap."""


class UnknownNameError(LimitForgeError, KeyError):
    """Unknown builtin graphon, graph family, named graph or check id."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown name"
