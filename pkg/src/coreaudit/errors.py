"""Exception types. Each carries a machine-readable ``code``."""


class AuditError(Exception):
    code = "AUDIT_ERROR"

    def __init__(self, message: str = "", code: str | None = None):
        super().__init__(message or self.code)
        if code is not None:
            self.code = code


class InstanceError(AuditError):
    """Invalid or malformed instance; ``violations`` holds the validation findings."""

    code = "INVALID_INSTANCE"

    def __init__(self, message: str = "", violations=(), code: str | None = None):
        super().__init__(message, code)
        self.violations = tuple(violations)


class ModeMismatch(AuditError):
    code = "MODE_MISMATCH"


class SolverStall(AuditError):
    code = "SOLVER_STALL"


class CutLoopStall(AuditError):
    code = "CUT_LOOP_STALL"


class DemandTooLarge(AuditError):
    code = "DEMAND_TOO_LARGE"


class OracleBudgetExceeded(AuditError):
    code = "ORACLE_BUDGET"


class GeneratorError(AuditError):
    code = "GENERATOR_ERROR"
