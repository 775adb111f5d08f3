"""Exception hierarchy.

Errors that stem from a mathematical hypothesis carry its name in
``hypothesis`` so the CLI can report it verbatim.
"""

from __future__ import annotations


class BltailsError(Exception):
    """Base class for all package errors."""

    hypothesis: str | None = None

    def __init__(self, message: str, hypothesis: str | None = None, **details):
        super().__init__(message)
        if hypothesis is not None:
            self.hypothesis = hypothesis
        self.details = details

    def to_json(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        if self.hypothesis:
            out["hypothesis"] = self.hypothesis
        for k, v in self.details.items():
            if isinstance(v, (int, float, str, bool, list)) or v is None:
                out[k] = v
        return out


class ConfigError(BltailsError):
    """Invalid configuration or input shape."""

    def __init__(self, message: str, field: str | None = None, **details):
        super().__init__(message, **details)
        self.field = field

    def to_json(self) -> dict:
        out = super().to_json()
        if self.field:
            out["field"] = self.field
        return out


class SolverError(BltailsError):
    """Krylov iteration failed to reach tolerance."""

    def __init__(self, message: str, residuals=None, **details):
        super().__init__(message, **details)
        self.residuals = list(residuals or [])


class PreconditionError(BltailsError):
    """A mathematical hypothesis required by an operation does not hold."""


class PoleError(PreconditionError):
    """Normal too close to the singular point of the requested frame branch."""


class ConsistencyError(BltailsError):
    """Internal identity violated (signals an upstream numerical defect)."""


class UsageError(BltailsError):
    """Objects combined that were not computed for each other."""


class RangeError(BltailsError):
    """Evaluation point outside the computed domain."""
