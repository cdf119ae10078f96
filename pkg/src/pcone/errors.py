"""Exception hierarchy.

Input problems derive from :class:`ValidationError` (a ``ValueError``) and are
reported with the dotted field that caused them. Numerical failures derive from
:class:`NumericalError` (an ``ArithmeticError``). The command line maps the two
families to exit codes 1 and 2.
"""
from typing import Optional


class PconeError(Exception):
    pass


class ValidationError(PconeError, ValueError):
    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class ScenarioError(ValidationError):
    pass


class CFLError(ValidationError):
    pass


class NumericalError(PconeError, ArithmeticError):
    pass


class MembershipError(NumericalError):
    def __init__(self, message: str, max_violation: float):
        self.max_violation = max_violation
        super().__init__(f"{message} (violation {max_violation:.3e})")


class NonDifferentiableError(NumericalError):
    pass


class DegenerateGradientError(NumericalError):
    pass


class CollinearityError(NumericalError):
    pass


class ExcludedCaseError(NumericalError):
    pass


class OracleFailureError(NumericalError):
    def __init__(self, message: str, iterations: int):
        self.iterations = iterations
        super().__init__(f"{message} after {iterations} iterations")


class IntegrationError(NumericalError):
    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"step {step}: {message}")
