"""Exception hierarchy for the coupler simulator."""

from typing import Optional


class CouplerError(Exception):
    """Base class for every error raised by the simulator."""


class DomainError(CouplerError, ValueError):
    """An argument lies outside the domain of an operation."""


class LinearizationError(DomainError):
    """Effective coupling kappa <= 1, where the linearized fluctuations blow up."""


class UnsupportedRegimeError(DomainError):
    """Closed-form undepleted results requested outside the oscillatory regime C > 2*eta."""


class IntegrationError(CouplerError, RuntimeError):
    """A numerical invariant drifted beyond tolerance during integration."""

    def __init__(self, message: str, zeta: float, defect: Optional[float] = None):
        super().__init__(f"{message} at zeta={zeta:.6g}" + (f" (defect {defect:.3e})" if defect is not None else ""))
        self.zeta = zeta
        self.defect = defect


class NumericalDegeneracyError(CouplerError, ArithmeticError):
    """Eigenvalues of Omega*V could not be paired into a symplectic spectrum."""


class ScenarioError(CouplerError):
    """A scenario run failed; wraps the underlying error with scenario context."""

    def __init__(self, scenario: str, point: str, cause: Exception):
        super().__init__(f"Scenario '{scenario}' failed at {point}: {cause}")
        self.scenario = scenario
        self.point = point
        self.cause = cause


class PhysicalityError(CouplerError, ArithmeticError):
    """A propagated covariance violates the Heisenberg condition V + i Omega/2 >= 0."""
