"""Closed-form results of the undepleted-pump approximation.

All functions accept either physical units (z in mm, C and eta in mm^-1, see
UndepletedParams.from_system) or normalized units (z -> zeta, C -> kappa,
eta -> u_p/2, see UndepletedParams.normalized). They also serve as oracles for the
numerical pipeline.
"""

import math

import numpy as np

from coupler.exceptions import DomainError
from coupler.models.schemas import UndepletedParams, normalized_beat_length


def _phase(z, p: UndepletedParams):
    """pi z / (2 L_ab)."""
    return np.pi * np.asarray(z, dtype=float) / (2.0 * p.beat_length)


def signal_transform(z: float, p: UndepletedParams) -> np.ndarray:
    """
    Quadrature form of the undepleted Bogoliubov solution.

    Acts on (X_s^A, Y_s^A, X_s^B, Y_s^B):
        X_A -> c X_A + t (2 eta Y_A - C Y_B),   Y_A -> c Y_A + t (2 eta X_A + C X_B)
    with c = cos(pi z/2L_ab), t = (2 L_ab/pi) sin(pi z/2L_ab), and the mirror for B.

    Raises:
        UnsupportedRegimeError: If C <= 2 eta
        DomainError: If z < 0
    """
    if z < 0:
        raise DomainError(f"Propagation distance must be non-negative, got {z}")
    x = float(_phase(z, p))
    c = math.cos(x)
    t = (2.0 * p.beat_length / math.pi) * math.sin(x)
    e = 2.0 * p.eta * t
    k = p.coupling * t
    return np.array(
        [
            [c, e, 0.0, -k],
            [e, c, k, 0.0],
            [0.0, -k, c, e],
            [k, 0.0, e, c],
        ]
    )


def photon_number(z, p: UndepletedParams):
    """N_s(z) = (4 eta L_ab/pi)^2 sin^2(pi z/2L_ab), per waveguide."""
    amplitude = 4.0 * p.eta * p.beat_length / np.pi
    return amplitude ** 2 * np.sin(_phase(z, p)) ** 2


def uncoupled_photon_number(z, eta: float):
    """N_s(z) = sinh^2(2 eta z) of an isolated waveguide (C = 0)."""
    return np.sinh(2.0 * eta * np.asarray(z, dtype=float)) ** 2


def logneg_sigma(z, p: UndepletedParams):
    """sigma(z) = sqrt(1 + ((C/eta) N_s)^2)/2."""
    n = photon_number(z, p)
    if p.eta == 0.0:
        return np.full_like(np.asarray(n, dtype=float), 0.5)
    return np.sqrt(1.0 + (p.coupling / p.eta * n) ** 2) / 2.0


def analytic_logneg(z, p: UndepletedParams):
    """
    Logarithmic negativity of the signal pair.

    E_N = -2 log2(sqrt(sigma + 1/2) - sqrt(sigma - 1/2)); zero at sigma = 1/2.
    """
    sigma = logneg_sigma(z, p)
    return -2.0 * np.log2(np.sqrt(sigma + 0.5) - np.sqrt(np.maximum(sigma - 0.5, 0.0)))


def cascaded_phase_principal(z, p: UndepletedParams):
    """-2 arctan(sqrt((C+2eta)/(C-2eta)) tan(pi z/2L_ab)), principal branch."""
    k = math.sqrt((p.coupling + 2.0 * p.eta) / (p.coupling - 2.0 * p.eta))
    return -2.0 * np.arctan(k * np.tan(_phase(z, p)))


def cascaded_phase(z, p: UndepletedParams):
    """
    Continuous branch of the cascaded phase mismatch.

    Equals -pi at odd multiples of L_ab and -2 pi n at 2 n L_ab, i.e. pi and 2 pi
    modulo 2 pi. Monotone decreasing in z.
    """
    k = math.sqrt((p.coupling + 2.0 * p.eta) / (p.coupling - 2.0 * p.eta))
    x = _phase(z, p)
    psi = np.arctan2(k * np.sin(x), np.cos(x))
    # psi and x share a quadrant, so |psi_unwrapped - x| < pi/2
    psi = psi + 2.0 * np.pi * np.round((x - psi) / (2.0 * np.pi))
    return -2.0 * psi


def undepleted_covariance_elements(zeta, kappa: float):
    """
    (V(X_s^A, X_s^B), V(Y_s^A, Y_s^B)) of the signal pair for pure down-conversion.

    V(X,X) = -V(Y,Y) = -(2^(3/2) kappa L^2/pi^2) sin^2(pi zeta/2L), L the normalized
    beat length.
    """
    L = normalized_beat_length(kappa)
    v = -(2.0 ** 1.5) * kappa * L ** 2 / np.pi ** 2 * np.sin(np.pi * np.asarray(zeta, dtype=float) / (2.0 * L)) ** 2
    return v, -v
