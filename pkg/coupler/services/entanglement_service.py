"""Gaussian entanglement measures on quadrature covariance matrices."""

import logging
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from coupler.config import settings
from coupler.exceptions import DomainError, NumericalDegeneracyError
from coupler.models.modes import FULL_ORDERING, PUMP_MODES, SIGNAL_MODES, ModeOrdering, symplectic_form
from coupler.models.schemas import Bipartition, VlfResult

logger = logging.getLogger(__name__)

VLF_BOUND = 2.0

# (X-part terms, fixed Y-part terms, free Y-part gains as (gain index, quadrature))
_VLF_COMBINATIONS = (
    ((("XsA", 1.0), ("XpA", -1.0)), (("YsA", 1.0), ("YpA", 1.0)), ((2, "YsB"), (3, "YpB"))),
    ((("XpA", 1.0), ("XsB", -1.0)), (("YpA", 1.0), ("YsB", 1.0)), ((0, "YsA"), (3, "YpB"))),
    ((("XsB", 1.0), ("XpB", -1.0)), (("YsB", 1.0), ("YpB", 1.0)), ((0, "YsA"), (1, "YpA"))),
)

SINGULAR_CONDITION = 1e10
DESCENT_THRESHOLD = 1e-10
DESCENT_MAX_SWEEPS = 100000


def _check_square(V: np.ndarray, ordering: Optional[ModeOrdering] = None) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise DomainError(f"Covariance must be square of even size, got {V.shape}")
    if ordering is not None and V.shape[0] != ordering.dimension:
        raise DomainError(f"Covariance of size {V.shape[0]} does not match ordering {ordering.modes}")
    return V


def _ordering_for(V: np.ndarray, ordering: Optional[ModeOrdering]) -> ModeOrdering:
    if ordering is not None:
        return ordering
    if V.shape[0] != FULL_ORDERING.dimension:
        raise DomainError(f"A {V.shape[0]}x{V.shape[0]} covariance needs an explicit mode ordering")
    return FULL_ORDERING


def reduce(V: np.ndarray, modes: Iterable[str], ordering: ModeOrdering = FULL_ORDERING) -> np.ndarray:
    """
    Covariance of the reduced state on `modes`.

    Args:
        V: Covariance laid out in `ordering`
        modes: Modes to keep, in any order
        ordering: Layout of V

    Returns:
        2k x 2k block, rows and columns in canonical mode order

    Raises:
        DomainError: If `modes` is empty or names a mode absent from `ordering`
    """
    modes = list(modes)
    if not modes:
        raise DomainError("Cannot reduce to an empty set of modes")
    V = _check_square(V, ordering)
    idx = ordering.indices(modes)
    return V[np.ix_(idx, idx)]


def partial_transpose(V: np.ndarray, part: Bipartition, ordering: Optional[ModeOrdering] = None) -> np.ndarray:
    """Flip the sign of every Y quadrature of the modes in `part`: P V P with P = diag(+-1)."""
    V = _check_square(V, ordering)
    ordering = _ordering_for(V, ordering)
    foreign = part.modes - set(ordering.modes)
    if foreign:
        raise DomainError(f"Bipartition modes {sorted(foreign)} are not part of ordering {ordering.modes}")
    signs = np.ones(ordering.dimension)
    for mode in part.modes:
        signs[ordering.y(mode)] = -1.0
    return signs[:, None] * V * signs[None, :]


def symplectic_spectrum(V: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """
    Symplectic eigenvalues of a 2k x 2k covariance.

    The real matrix Omega V has eigenvalues +-i nu_k; the nu_k are returned in
    ascending order.

    Raises:
        NumericalDegeneracyError: If the eigenvalues do not pair up as +-i nu
            within `tol` (relative to the spectral scale)
    """
    tol = settings.pairing_tolerance if tol is None else tol
    V = _check_square(V)
    k = V.shape[0] // 2
    eig = np.linalg.eigvals(symplectic_form(k) @ V)
    scale = max(1.0, float(np.max(np.abs(eig))))

    real_defect = float(np.max(np.abs(eig.real)))
    im = np.sort(eig.imag)
    pairing_defect = float(np.max(np.abs(im + im[::-1])))
    if real_defect > tol * scale or pairing_defect > tol * scale or im[k] <= 0.0:
        logger.error(f"Symplectic spectrum pairing failed: real part {real_defect:.3e}, "
                     f"pairing {pairing_defect:.3e}")
        raise NumericalDegeneracyError(
            f"Eigenvalues of Omega V do not pair as +-i nu (real {real_defect:.3e}, pairing {pairing_defect:.3e})"
        )
    return im[k:]


def negativity_terms(nu) -> np.ndarray:
    """F(nu) = -log2(2 nu) below the shot-noise value 1/2, zero above."""
    nu = np.asarray(nu, dtype=float)
    return np.where(nu < 0.5, -np.log2(2.0 * np.minimum(nu, 0.5)), 0.0)


def log_negativity(V: np.ndarray, part: Bipartition, ordering: Optional[ModeOrdering] = None) -> float:
    """
    Logarithmic negativity of V across `part` and its complement.

    Args:
        V: Covariance, full 8x8 unless `ordering` says otherwise
        part: Modes whose subsystem is transposed
        ordering: Layout of V (defaults to the four-mode layout)

    Returns:
        E_N >= 0; any positive value certifies entanglement
    """
    nu = symplectic_spectrum(partial_transpose(V, part, ordering))
    return float(np.sum(negativity_terms(nu)))


def _pair_logneg(V: np.ndarray, modes: Sequence[str]) -> float:
    sub = FULL_ORDERING.subset(modes)
    reduced = reduce(V, modes)
    return log_negativity(reduced, Bipartition(modes=frozenset({modes[1]})), sub)


def signal_logneg(V: np.ndarray) -> float:
    """E_N of the reduced (sA, sB) state, transposing sB."""
    return _pair_logneg(V, SIGNAL_MODES)


def pump_logneg(V: np.ndarray) -> float:
    """E_N of the reduced (pA, pB) state, transposing pB."""
    return _pair_logneg(V, PUMP_MODES)


def _combination_vectors(k: int, gains: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x_terms, y_terms, free = _VLF_COMBINATIONS[k]
    c = np.zeros(FULL_ORDERING.dimension)
    d = np.zeros(FULL_ORDERING.dimension)
    for label, weight in x_terms:
        c[FULL_ORDERING.index(label)] = weight
    for label, weight in y_terms:
        d[FULL_ORDERING.index(label)] = weight
    for gain_index, label in free:
        d[FULL_ORDERING.index(label)] = gains[gain_index]
    return c, d


def _full_covariance(V: np.ndarray) -> np.ndarray:
    V = _check_square(V)
    if V.shape[0] != FULL_ORDERING.dimension:
        raise DomainError(f"VLF combinations need the full 8x8 covariance, got {V.shape}")
    return V


def _combination_value(V: np.ndarray, k: int, gains: Sequence[float]) -> float:
    c, d = _combination_vectors(k, gains)
    return float(c @ V @ c + d @ V @ d)


def vlf_evaluate(V: np.ndarray, r: Sequence[float]) -> Tuple[float, float, float]:
    """
    The three van Loock-Furusawa combinations at gains r = (r1, r2, r3, r4).

    I1 = <D(XsA - XpA)^2> + <D(YsA + YpA + r3 YsB + r4 YpB)^2>
    I2 = <D(XpA - XsB)^2> + <D(r1 YsA + YpA + YsB + r4 YpB)^2>
    I3 = <D(XsB - XpB)^2> + <D(r1 YsA + r2 YpA + YsB + YpB)^2>

    All three below 2 at once witnesses full quadripartite inseparability.
    """
    V = _full_covariance(V)
    if len(r) != 4:
        raise DomainError(f"Expected four gains, got {len(r)}")
    return tuple(_combination_value(V, k, r) for k in range(3))


def _coordinate_descent(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    r = np.zeros(len(b))
    for _ in range(DESCENT_MAX_SWEEPS):
        change = 0.0
        for j in range(len(b)):
            if M[j, j] <= 0.0:
                continue
            new = -(b[j] + M[j] @ r - M[j, j] * r[j]) / M[j, j]
            change = max(change, abs(new - r[j]))
            r[j] = new
        if change < DESCENT_THRESHOLD:
            return r
    logger.warning(f"Coordinate descent stopped after {DESCENT_MAX_SWEEPS} sweeps")
    return r


def _minimize_combination(V: np.ndarray, k: int) -> Tuple[float, Tuple[float, float, float, float]]:
    _, _, free = _VLF_COMBINATIONS[k]
    _, d0 = _combination_vectors(k, (0.0, 0.0, 0.0, 0.0))
    E = np.zeros((FULL_ORDERING.dimension, len(free)))
    for column, (_, label) in enumerate(free):
        E[FULL_ORDERING.index(label), column] = 1.0

    # Y variance (d0 + E r)^T V (d0 + E r) is minimized where M r = -b
    M = E.T @ V @ E
    b = E.T @ V @ d0
    if np.linalg.cond(M) < SINGULAR_CONDITION:
        r_free = np.linalg.solve(M, -b)
    else:
        logger.debug(f"VLF combination {k + 1}: singular quadratic form, using coordinate descent")
        r_free = _coordinate_descent(M, b)

    gains = [0.0, 0.0, 0.0, 0.0]
    for (gain_index, _), value in zip(free, r_free):
        gains[gain_index] = float(value)
    gains = tuple(gains)
    return _combination_value(V, k, gains), gains


def vlf_optimize(V: np.ndarray) -> VlfResult:
    """
    Minimize each combination independently over the gains it contains.

    Each inequality gets its own gain vector; gains that do not appear in an
    inequality are reported as 0.
    """
    V = _full_covariance(V)
    optimized = [_minimize_combination(V, k) for k in range(3)]
    return VlfResult(
        values=tuple(value for value, _ in optimized),
        gains=tuple(gains for _, gains in optimized),
    )
