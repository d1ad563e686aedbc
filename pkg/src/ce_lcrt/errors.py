"""Error taxonomy shared by the engine, CLI, and HTTP service.

Every error carries a stable machine-readable code so front ends can
map failures to fields without parsing messages.
"""

from __future__ import annotations


class EngineError(Exception):
    code = "ENGINE_ERROR"

    def __init__(self, message: str, field: str | None = None) -> None:
        super().__init__(message)
        self.field = field

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": str(self)}
        if self.field:
            out["field"] = self.field
        return out


class InvalidInputError(EngineError):
    code = "INVALID_INPUT"


class IccConstraintError(EngineError):
    code = "ICC_CONSTRAINT"

    def __init__(self, violations: list[str], field: str | None = "icc") -> None:
        super().__init__("; ".join(violations), field=field)
        self.violations = violations


class NotPositiveDefiniteError(EngineError):
    code = "NOT_POSITIVE_DEFINITE"


class UnidentifiableDesignError(EngineError):
    code = "UNIDENTIFIABLE_DESIGN"


class EmptyFeasibleSetError(EngineError):
    code = "EMPTY_FEASIBLE_SET"


class NoInteriorOptimumError(EngineError):
    code = "NO_INTERIOR_OPTIMUM"


class DeadlineExceededError(EngineError):
    code = "DEADLINE"
