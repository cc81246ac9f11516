"""Classical mean-field propagation and phase-mismatch diagnostics."""

import logging
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from coupler.config import settings
from coupler.exceptions import DomainError, IntegrationError, LinearizationError
from coupler.models.schemas import ClassicalState, SystemParams
from coupler.services.model_service import classical_rhs, initial_amplitudes
from coupler.utils.integrator import rk4_step, uniform_grid

logger = logging.getLogger(__name__)


class ClassicalTrajectory(BaseModel):
    """Classical amplitudes sampled on a uniform zeta grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    zeta: np.ndarray = Field(..., description="Grid points, shape (n,)")
    amplitudes: np.ndarray = Field(..., description="[a_s, a_p, b_s, b_p] per point, shape (n, 4)")
    step: float = Field(..., gt=0.0, description="Integration step size")
    phase_floor: float = Field(1e-150, ge=0.0, description="Amplitudes at or below this have no phase")

    @field_validator("zeta", "amplitudes", mode="before")
    @classmethod
    def read_only(cls, v) -> np.ndarray:
        arr = np.array(v, copy=True)
        arr.setflags(write=False)
        return arr

    def __len__(self) -> int:
        return len(self.zeta)

    def state(self, i: int) -> ClassicalState:
        return ClassicalState(amplitudes=self.amplitudes[i])

    def powers(self) -> pd.DataFrame:
        """u_s^2, u_p^2, v_s^2, v_p^2 along the grid."""
        p = np.abs(self.amplitudes) ** 2
        return pd.DataFrame(
            {"zeta": self.zeta, "us2": p[:, 0], "up2": p[:, 1], "vs2": p[:, 2], "vp2": p[:, 3]}
        )

    def conserved_sum(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def conservation_defect(self) -> float:
        return float(np.max(np.abs(self.conserved_sum() - 1.0)))

    def phases(self) -> np.ndarray:
        """Unwrapped phases (theta_s, theta_p, phi_s, phi_p); NaN where the amplitude vanishes."""
        out = np.full(self.amplitudes.shape, np.nan)
        for k in range(4):
            column = self.amplitudes[:, k]
            valid = np.abs(column) > self.phase_floor
            if np.any(valid):
                out[valid, k] = np.unwrap(np.angle(column[valid]))
        return out


class ClassicalService:
    """Integrates the classical coupled-mode equations over zeta."""

    def __init__(self, conservation_tolerance: Optional[float] = None, phase_floor: Optional[float] = None):
        self.conservation_tolerance = (
            settings.conservation_tolerance if conservation_tolerance is None else conservation_tolerance
        )
        self.phase_floor = settings.phase_floor if phase_floor is None else phase_floor

    def integrate_classical(
        self,
        params: SystemParams,
        zeta_max: float = 6.0,
        steps: int = 6 * 4096,
        nonlinear: bool = True,
    ) -> ClassicalTrajectory:
        """
        Integrate the mean fields with fixed-step RK4, storing every step.

        Args:
            params: System parameters (kappa > 1)
            zeta_max: End of the normalized propagation range
            steps: Number of RK4 steps over [0, zeta_max]
            nonlinear: Keep the chi(2) terms; False leaves the linear coupler

        Returns:
            ClassicalTrajectory on the uniform grid

        Raises:
            IntegrationError: If the conserved sum drifts beyond tolerance
        """
        if zeta_max <= 0.0 or steps < 2:
            raise DomainError(f"Need zeta_max > 0 and steps >= 2 (got {zeta_max}, {steps})")
        if params.kappa <= 1.0:
            raise LinearizationError(f"kappa={params.kappa} <= 1")

        grid, h = uniform_grid(zeta_max, steps)
        kappa = params.kappa
        amplitudes = np.empty((steps + 1, 4), dtype=np.complex128)
        amplitudes[0] = initial_amplitudes(params.power_ratio, params.input_phases)

        def rhs(state):
            return (classical_rhs(state[0], kappa, nonlinear),)

        logger.info(f"Integrating classical fields: kappa={kappa}, ratio={params.power_ratio:g}, "
                    f"zeta_max={zeta_max}, steps={steps}")
        state = (amplitudes[0],)
        for n in range(steps):
            state = rk4_step(rhs, state, h)
            amplitudes[n + 1] = state[0]

        trajectory = ClassicalTrajectory(zeta=grid, amplitudes=amplitudes, step=h, phase_floor=self.phase_floor)
        self.check_conservation(trajectory)
        return trajectory

    def check_conservation(self, trajectory: ClassicalTrajectory):
        drift = np.abs(trajectory.conserved_sum() - 1.0)
        bad = np.flatnonzero(drift > self.conservation_tolerance)
        if bad.size:
            i = int(bad[0])
            logger.error(f"Energy conservation violated at zeta={trajectory.zeta[i]:.6g}")
            raise IntegrationError("Conserved sum drifted", float(trajectory.zeta[i]), float(drift[i]))

    def phase_mismatch_series(self, trajectory: ClassicalTrajectory) -> pd.DataFrame:
        """
        Phase mismatches dtheta = theta_p - 2 theta_s and dphi = phi_p - 2 phi_s.

        Phases are unwrapped, so the series are continuous; rows where a phase is
        undefined (zero amplitude) hold NaN.
        """
        ph = trajectory.phases()
        return pd.DataFrame(
            {
                "zeta": trajectory.zeta,
                "dtheta": ph[:, 1] - 2.0 * ph[:, 0],
                "dphi": ph[:, 3] - 2.0 * ph[:, 2],
            }
        )


def pi_crossings(zeta: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """
    Planes where a phase crosses a multiple of pi, from sign changes of sin(phase).

    Crossing positions are linearly interpolated between grid points; NaN samples
    never produce a crossing.
    """
    s = np.sin(np.asarray(phase, dtype=float))
    left, right = s[:-1], s[1:]
    idx = np.flatnonzero(left * right < 0.0)
    frac = left[idx] / (left[idx] - right[idx])
    return zeta[idx] + frac * (zeta[idx + 1] - zeta[idx])


def local_extrema(zeta: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Interior grid points where `values` has a strict local maximum or minimum."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    idx = np.flatnonzero(d[:-1] * d[1:] < 0.0) + 1
    return zeta[idx]
