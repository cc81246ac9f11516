"""Model core: parameter derivation, initial conditions, classical rhs and drift matrix."""

import logging
import math
from typing import Sequence, Tuple

import numpy as np

from coupler.exceptions import DomainError, LinearizationError
from coupler.models.modes import FULL_ORDERING
from coupler.models.schemas import ClassicalState, Phases, SystemParams

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# (signal, pump, other-waveguide signal) for the two waveguides
_WAVEGUIDES = (("sA", "pA", "sB"), ("sB", "pB", "sA"))


def build_params(
    C: float,
    g: float,
    kappa: float,
    power_ratio: float,
    phases: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
) -> SystemParams:
    """
    Derive the system parameters from the waveguide constants and kappa.

    Args:
        C: Linear coupling constant, mm^-1
        g: Nonlinear constant, mm^-1 mW^-1/2
        kappa: Effective coupling C/(sqrt(2P) g)
        power_ratio: P_s/P_p per waveguide
        phases: (theta_s, theta_p, phi_s, phi_p) at the input, rad

    Returns:
        SystemParams with P, delta0 and the z-per-zeta factor derived

    Raises:
        LinearizationError: If kappa <= 1
        DomainError: If a constant is non-positive or not finite
    """
    for name, value in (("C", C), ("g", g), ("kappa", kappa), ("power_ratio", power_ratio)):
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")
    if C <= 0.0 or g <= 0.0:
        raise DomainError(f"Coupling and nonlinearity must be positive (C={C}, g={g})")
    if power_ratio < 0.0:
        raise DomainError(f"Power ratio must be non-negative, got {power_ratio}")
    if kappa <= 1.0:
        raise LinearizationError(
            f"kappa={kappa} <= 1: fluctuations grow exponentially and the linearization is invalid"
        )
    phases = tuple(float(p) for p in phases)
    if len(phases) != 4 or not all(math.isfinite(p) for p in phases):
        raise DomainError(f"Expected four finite input phases, got {phases}")

    params = SystemParams(
        coupling_C=C, nonlinearity_g=g, kappa=kappa, power_ratio=power_ratio, input_phases=phases
    )
    logger.debug(
        f"Built params: kappa={kappa}, P={params.total_power_P:.6g} mW, "
        f"z/zeta={params.z_per_zeta:.6g} mm"
    )
    return params


def initial_amplitudes(power_ratio: float, phases: Phases) -> np.ndarray:
    """Equal-power inputs; sech(delta0)^2 = ratio/(1+ratio), tanh(delta0)^2 = 1/(1+ratio)."""
    u_s = math.sqrt(power_ratio / (2.0 * (1.0 + power_ratio)))
    u_p = math.sqrt(1.0 / (2.0 * (1.0 + power_ratio)))
    theta_s, theta_p, phi_s, phi_p = phases
    return np.array(
        [
            u_s * np.exp(1j * theta_s),
            u_p * np.exp(1j * theta_p),
            u_s * np.exp(1j * phi_s),
            u_p * np.exp(1j * phi_p),
        ],
        dtype=np.complex128,
    )


def initial_state(params: SystemParams) -> ClassicalState:
    """Classical input state for equal per-waveguide powers."""
    return ClassicalState(amplitudes=initial_amplitudes(params.power_ratio, params.input_phases))


def classical_rhs(amplitudes: np.ndarray, kappa: float, nonlinear: bool = True) -> np.ndarray:
    """
    Normalized classical equations in Cartesian form.

    da_s/dzeta = i kappa b_s + i a_p a_s*,  da_p/dzeta = i a_s^2, and the mirror for b.
    """
    a_s, a_p, b_s, b_p = amplitudes
    d = np.empty(4, dtype=np.complex128)
    d[0] = 1j * kappa * b_s
    d[2] = 1j * kappa * a_s
    if nonlinear:
        d[0] += 1j * a_p * np.conj(a_s)
        d[1] = 1j * a_s * a_s
        d[2] += 1j * b_p * np.conj(b_s)
        d[3] = 1j * b_s * b_s
    else:
        d[1] = 0.0
        d[3] = 0.0
    return d


def _index_table():
    o = FULL_ORDERING
    rows, cols = [], []
    coupling_rows, coupling_cols, coupling_signs = [], [], []
    for s, p, other in _WAVEGUIDES:
        xs, ys, xp, yp = o.x(s), o.y(s), o.x(p), o.y(p)
        rows += [xs, xs, xs, xs, ys, ys, ys, ys, xp, xp, yp, yp]
        cols += [xs, ys, xp, yp, xs, ys, xp, yp, xs, ys, xs, ys]
        coupling_rows += [xs, ys]
        coupling_cols += [o.y(other), o.x(other)]
        coupling_signs += [-1.0, 1.0]
    return (
        np.array(rows),
        np.array(cols),
        np.array(coupling_rows),
        np.array(coupling_cols),
        np.array(coupling_signs),
    )


_ROWS, _COLS, _K_ROWS, _K_COLS, _K_SIGNS = _index_table()


def _nonlinear_entries(signal: complex, pump: complex) -> Tuple[float, ...]:
    p_r, p_i = pump.real, pump.imag
    s_r, s_i = SQRT2 * signal.real, SQRT2 * signal.imag
    return (
        -p_i, p_r, s_i, -s_r,   # dX_s
        p_r, p_i, s_r, s_i,     # dY_s
        -s_i, -s_r,             # dX_p
        s_r, -s_i,              # dY_p
    )


def drift_from_amplitudes(amplitudes: np.ndarray, kappa: float, nonlinear: bool = True) -> np.ndarray:
    """8x8 drift matrix Delta for amplitudes [a_s, a_p, b_s, b_p]."""
    drift = np.zeros((8, 8))
    drift[_K_ROWS, _K_COLS] = kappa * _K_SIGNS
    if nonlinear:
        a_s, a_p, b_s, b_p = amplitudes
        drift[_ROWS, _COLS] = _nonlinear_entries(a_s, a_p) + _nonlinear_entries(b_s, b_p)
    return drift


def drift_matrix(state: ClassicalState, kappa: float, nonlinear: bool = True) -> np.ndarray:
    """
    Assemble the linearized quadrature dynamics d(xi)/d(zeta) = Delta xi.

    Entries are read directly from the real and imaginary parts of the complex
    amplitudes (u cos(theta), u sin(theta)), so zero amplitudes are regular.

    Args:
        state: Classical mean fields at this plane
        kappa: Effective coupling
        nonlinear: Keep the chi(2) entries; False leaves the evanescent coupling only

    Returns:
        Read-only 8x8 real matrix in the FULL_ORDERING layout
    """
    drift = drift_from_amplitudes(state.amplitudes, kappa, nonlinear)
    drift.setflags(write=False)
    return drift
