"""
Exception family for the kinetic solver and verification suite.

Every failure raised by a numerical service carries a stable machine-readable
error code so the cli can map it onto an exit status and the reports can
record it without parsing messages.
"""

from typing import Any, Dict, List, Optional


class KineticException(Exception):
    """
    Base exception for all solver, geometry and verification errors.

    Attributes:
        message: Human-readable description of the failure
        error_code: Machine-readable code (e.g. 'invalid_input', 'grazing_rejected')
        context: Optional structured details for logs and diagnostic dumps
    """

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.error_code = error_code
        self.context = context or {}
        super().__init__(self.message)


class StepRejected(KineticException):
    """Picard iteration did not converge; the caller halves dt and retries."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="step_rejected", context=context)


class PositivityViolation(KineticException):
    """A distribution value dropped below the hard negativity floor."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="positivity_violation", context=context)


class ScenarioValidationError(KineticException):
    """
    Scenario text failed validation.

    Carries every violation found, not just the first, as
    'section.field: message' strings.
    """

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        summary = "; ".join(self.violations)
        super().__init__(
            f"Invalid scenario: {summary}",
            error_code="config_error",
            context={"violations": self.violations},
        )
