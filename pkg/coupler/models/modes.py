"""Mode/quadrature ordering and the symplectic form.

Every 8x8 matrix in the package uses the quadrature vector

    xi = (X_s^A, Y_s^A, X_p^A, Y_p^A, X_s^B, Y_s^B, X_p^B, Y_p^B)

Code outside this module refers to quadratures through `ModeOrdering` by mode name
(sA, pA, sB, pB), never by raw index.
"""

from typing import Iterable, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from coupler.exceptions import DomainError

MODES: Tuple[str, ...] = ("sA", "pA", "sB", "pB")
SIGNAL_MODES: Tuple[str, str] = ("sA", "sB")
PUMP_MODES: Tuple[str, str] = ("pA", "pB")


class ModeOrdering(BaseModel):
    """Ordered list of modes; mode k owns quadratures (X, Y) at indices (2k, 2k+1)."""

    model_config = ConfigDict(frozen=True)

    modes: Tuple[str, ...] = Field(MODES, description="Mode names in matrix order")

    @field_validator("modes")
    @classmethod
    def modes_known_and_unique(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        if not v:
            raise ValueError("Mode ordering cannot be empty")
        unknown = [m for m in v if m not in MODES]
        if unknown:
            raise ValueError(f"Unknown modes: {unknown}")
        if len(set(v)) != len(v):
            raise ValueError(f"Duplicate modes in ordering: {v}")
        # canonical order keeps every reduced block consistent with the full one
        return tuple(m for m in MODES if m in v)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dimension(self) -> int:
        return 2 * len(self.modes)

    def position(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise DomainError(f"Mode '{mode}' is not part of ordering {self.modes}")

    def x(self, mode: str) -> int:
        """Index of the X quadrature of `mode`."""
        return 2 * self.position(mode)

    def y(self, mode: str) -> int:
        """Index of the Y quadrature of `mode`."""
        return 2 * self.position(mode) + 1

    def index(self, label: str) -> int:
        """Index of a quadrature label such as 'XsA' or 'YpB'."""
        if len(label) != 3 or label[0] not in "XY":
            raise DomainError(f"Malformed quadrature label: {label}")
        mode = label[1:]
        return self.x(mode) if label[0] == "X" else self.y(mode)

    def labels(self) -> List[str]:
        return [f"{q}{m}" for m in self.modes for q in ("X", "Y")]

    def indices(self, modes: Iterable[str]) -> List[int]:
        """Quadrature indices of `modes`, in canonical order."""
        wanted = set(modes)
        missing = wanted - set(self.modes)
        if missing:
            raise DomainError(f"Modes {sorted(missing)} are not part of ordering {self.modes}")
        return [i for m in self.modes if m in wanted for i in (self.x(m), self.y(m))]

    def subset(self, modes: Iterable[str]) -> "ModeOrdering":
        return ModeOrdering(modes=tuple(modes))


FULL_ORDERING = ModeOrdering()


def symplectic_form(n_modes: int) -> np.ndarray:
    """Omega = direct sum of n_modes blocks [[0, 1], [-1, 0]]."""
    omega = np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    omega.setflags(write=False)
    return omega


OMEGA = symplectic_form(len(MODES))


def symplectic_defect(S: np.ndarray) -> float:
    """max |S Omega S^T - Omega| for a square matrix of even size."""
    omega = symplectic_form(S.shape[0] // 2)
    return float(np.max(np.abs(S @ omega @ S.T - omega)))


def hamiltonian_defect(D: np.ndarray) -> float:
    """max |D Omega + Omega D^T|; zero for members of the symplectic algebra."""
    omega = symplectic_form(D.shape[0] // 2)
    return float(np.max(np.abs(D @ omega + omega @ D.T)))
