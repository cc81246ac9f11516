"""Joint propagation of the classical fields and the quadrature propagator S(zeta)."""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from coupler.config import settings
from coupler.exceptions import DomainError, IntegrationError, LinearizationError
from coupler.models.modes import symplectic_form
from coupler.models.schemas import PhysicalityReport, SystemParams
from coupler.services.classical_service import ClassicalService, ClassicalTrajectory
from coupler.services.model_service import classical_rhs, drift_from_amplitudes, initial_amplitudes
from coupler.utils.integrator import rk4_step, uniform_grid

logger = logging.getLogger(__name__)

VACUUM_VARIANCE = 0.5


class PropagatedState(BaseModel):
    """Propagator and covariance series on the recorded zeta grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    zeta: np.ndarray = Field(..., description="Recorded grid, shape (n,)")
    S: np.ndarray = Field(..., description="Propagators, shape (n, 8, 8)")
    V: np.ndarray = Field(..., description="Covariances S V0 S^T, shape (n, 8, 8)")
    V0: np.ndarray = Field(..., description="Input covariance, identity/2")
    trajectory: ClassicalTrajectory = Field(..., description="Classical fields at the recorded points")

    @field_validator("zeta", "S", "V", "V0", mode="before")
    @classmethod
    def read_only(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float, copy=True)
        arr.setflags(write=False)
        return arr

    def __len__(self) -> int:
        return len(self.zeta)

    def symplectic_defects(self) -> np.ndarray:
        omega = symplectic_form(4)
        return np.max(np.abs(self.S @ omega @ np.swapaxes(self.S, 1, 2) - omega), axis=(1, 2))


def default_stride(zeta_max: float, steps: int) -> int:
    """Record every ~1/rows_per_unit in zeta."""
    h = zeta_max / steps
    return max(1, int(round(1.0 / (settings.rows_per_unit * h))))


class PropagationService:
    """Integrates dS/dzeta = Delta(zeta) S together with the classical equations."""

    def __init__(
        self,
        symplectic_tolerance: Optional[float] = None,
        conservation_tolerance: Optional[float] = None,
    ):
        self.symplectic_tolerance = (
            settings.symplectic_tolerance if symplectic_tolerance is None else symplectic_tolerance
        )
        self.classical = ClassicalService(conservation_tolerance=conservation_tolerance)

    def integrate_propagator(
        self,
        params: SystemParams,
        zeta_max: float = 6.0,
        steps: int = 6 * 4096,
        stride: Optional[int] = None,
        nonlinear: bool = True,
    ) -> PropagatedState:
        """
        zeta-ordered solution of the linearized quadrature dynamics.

        Args:
            params: System parameters (kappa > 1)
            zeta_max: End of the normalized propagation range
            steps: Number of RK4 steps over [0, zeta_max]
            stride: Record every `stride` steps (default ~1/256 in zeta); the last
                step is always recorded
            nonlinear: Keep the chi(2) terms

        Returns:
            PropagatedState with S, V = S V0 S^T and the classical fields

        Raises:
            IntegrationError: On symplecticity or energy-conservation drift
        """
        if zeta_max <= 0.0 or steps < 2:
            raise DomainError(f"Need zeta_max > 0 and steps >= 2 (got {zeta_max}, {steps})")
        if params.kappa <= 1.0:
            raise LinearizationError(f"kappa={params.kappa} <= 1")
        stride = stride or default_stride(zeta_max, steps)

        grid, h = uniform_grid(zeta_max, steps)
        record = list(range(0, steps + 1, stride))
        if record[-1] != steps:
            record.append(steps)
        kappa = params.kappa

        def rhs(state):
            amplitudes, S = state
            return (
                classical_rhs(amplitudes, kappa, nonlinear),
                drift_from_amplitudes(amplitudes, kappa, nonlinear) @ S,
            )

        logger.info(f"Propagating: kappa={kappa}, ratio={params.power_ratio:g}, "
                    f"zeta_max={zeta_max}, steps={steps}, stride={stride}")

        state = (initial_amplitudes(params.power_ratio, params.input_phases), np.eye(8))
        amplitudes = [state[0]]
        propagators = [state[1]]
        next_record = 1
        for n in range(1, steps + 1):
            state = rk4_step(rhs, state, h)
            if next_record < len(record) and n == record[next_record]:
                amplitudes.append(state[0])
                propagators.append(state[1])
                next_record += 1

        zeta = grid[record]
        S = np.array(propagators)
        V0 = VACUUM_VARIANCE * np.eye(8)
        V = S @ V0 @ np.swapaxes(S, 1, 2)
        # symmetrize away roundoff from the congruence
        V = 0.5 * (V + np.swapaxes(V, 1, 2))

        trajectory = ClassicalTrajectory(
            zeta=zeta, amplitudes=np.array(amplitudes), step=h * stride,
            phase_floor=self.classical.phase_floor,
        )
        self.classical.check_conservation(trajectory)

        result = PropagatedState(zeta=zeta, S=S, V=V, V0=V0, trajectory=trajectory)
        defects = result.symplectic_defects()
        bad = np.flatnonzero(defects > self.symplectic_tolerance)
        if bad.size:
            i = int(bad[0])
            logger.error(f"Symplecticity lost at zeta={zeta[i]:.6g}")
            raise IntegrationError("Propagator is no longer symplectic", float(zeta[i]), float(defects[i]))
        logger.info(f"Propagation done: max symplectic defect {defects.max():.2e}")
        return result


def covariance_at(state: PropagatedState, zeta: float) -> np.ndarray:
    """
    Covariance at the recorded grid point nearest to `zeta` (no interpolation).

    Raises:
        DomainError: If zeta lies outside the recorded range
    """
    lo, hi = state.zeta[0], state.zeta[-1]
    slack = 1e-12 * max(1.0, hi)
    if not lo - slack <= zeta <= hi + slack:
        raise DomainError(f"zeta={zeta} outside the propagated range [{lo}, {hi}]")
    return state.V[int(np.argmin(np.abs(state.zeta - zeta)))]


def physicality_report(V: np.ndarray) -> PhysicalityReport:
    """
    Heisenberg, purity and symmetry diagnostics of a covariance matrix.

    The minimum eigenvalue of V + i Omega/2 is non-negative for a bona fide state;
    purity is 1/sqrt(det(2V)), 1 for pure Gaussian states.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise DomainError(f"Covariance must be square of even size, got {V.shape}")
    omega = symplectic_form(V.shape[0] // 2)
    sym = 0.5 * (V + V.T)
    heisenberg = np.linalg.eigvalsh(sym + 0.5j * omega)
    det = np.linalg.det(2.0 * V)
    return PhysicalityReport(
        min_heisenberg_eigenvalue=float(heisenberg.min()),
        purity=float(1.0 / np.sqrt(det)) if det > 0 else 0.0,
        symmetry_defect=float(np.max(np.abs(V - V.T))),
    )
