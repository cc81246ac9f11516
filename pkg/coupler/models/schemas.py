"""Pydantic models for parameters, states and results."""

import math
from pathlib import Path
from typing import FrozenSet, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from coupler.exceptions import UnsupportedRegimeError
from coupler.models.modes import MODES, ModeOrdering

Phases = Tuple[float, float, float, float]
ScenarioName = Literal["fig2", "fig3", "fig4a", "fig4b", "fig5", "custom"]


def _read_only(values: np.ndarray, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class SystemParams(BaseModel):
    """Physical constants, normalization and input phases; owns all unit bookkeeping."""

    model_config = ConfigDict(frozen=True)

    coupling_C: float = Field(..., gt=0.0, description="Linear coupling constant, mm^-1")
    nonlinearity_g: float = Field(..., gt=0.0, description="Nonlinear constant, mm^-1 mW^-1/2")
    kappa: float = Field(..., gt=1.0, description="Effective coupling C/(sqrt(2P) g)")
    power_ratio: float = Field(..., ge=0.0, description="Signal-to-pump input power ratio per waveguide")
    input_phases: Phases = Field((0.0, 0.0, 0.0, 0.0), description="(theta_s, theta_p, phi_s, phi_p) at zeta=0, rad")

    @computed_field
    @property
    def total_power_P(self) -> float:
        """Conserved power constant P = C^2/(2 g^2 kappa^2), mW."""
        return self.coupling_C ** 2 / (2.0 * self.nonlinearity_g ** 2 * self.kappa ** 2)

    @computed_field
    @property
    def delta0(self) -> float:
        """arcsinh(sqrt(P_p/P_s)); infinite for pure down-conversion."""
        if self.power_ratio == 0.0:
            return math.inf
        return math.asinh(math.sqrt(1.0 / self.power_ratio))

    @computed_field
    @property
    def z_per_zeta(self) -> float:
        """Physical length per unit of zeta, kappa/C = 1/(sqrt(2P) g), mm."""
        return self.kappa / self.coupling_C

    def z_of_zeta(self, zeta):
        return zeta * self.z_per_zeta

    def zeta_of_z(self, z_mm):
        return z_mm / self.z_per_zeta

    @property
    def signal_power_mw(self) -> float:
        """Input signal power per waveguide, |alpha_s(0)|^2 = P u_s(0)^2."""
        return self.total_power_P * self.power_ratio / (2.0 * (1.0 + self.power_ratio))

    @property
    def pump_power_mw(self) -> float:
        """Input pump power per waveguide, 2|alpha_p(0)|^2 = P u_p(0)^2."""
        return self.total_power_P / (2.0 * (1.0 + self.power_ratio))


class ClassicalState(BaseModel):
    """Normalized complex mean fields (a_s, a_p, b_s, b_p) at one plane."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    amplitudes: np.ndarray = Field(..., description="Complex array [a_s, a_p, b_s, b_p]")

    @field_validator("amplitudes", mode="before")
    @classmethod
    def four_complex(cls, v) -> np.ndarray:
        arr = _read_only(v, np.complex128)
        if arr.shape != (4,):
            raise ValueError(f"Expected 4 amplitudes, got shape {arr.shape}")
        return arr

    @property
    def a_s(self) -> complex:
        return complex(self.amplitudes[0])

    @property
    def a_p(self) -> complex:
        return complex(self.amplitudes[1])

    @property
    def b_s(self) -> complex:
        return complex(self.amplitudes[2])

    @property
    def b_p(self) -> complex:
        return complex(self.amplitudes[3])

    # Polar views
    @property
    def u_s(self) -> float:
        return abs(self.a_s)

    @property
    def u_p(self) -> float:
        return abs(self.a_p)

    @property
    def v_s(self) -> float:
        return abs(self.b_s)

    @property
    def v_p(self) -> float:
        return abs(self.b_p)

    @property
    def theta_s(self) -> float:
        return math.atan2(self.a_s.imag, self.a_s.real)

    @property
    def theta_p(self) -> float:
        return math.atan2(self.a_p.imag, self.a_p.real)

    @property
    def phi_s(self) -> float:
        return math.atan2(self.b_s.imag, self.b_s.real)

    @property
    def phi_p(self) -> float:
        return math.atan2(self.b_p.imag, self.b_p.real)

    @property
    def conserved_sum(self) -> float:
        """u_s^2 + v_s^2 + u_p^2 + v_p^2, equal to 1 along any trajectory."""
        return float(np.sum(np.abs(self.amplitudes) ** 2))


class UndepletedParams(BaseModel):
    """Constants of the undepleted-pump closed forms, in physical or normalized units."""

    model_config = ConfigDict(frozen=True)

    coupling: float = Field(..., ge=0.0, description="C (mm^-1), or kappa in zeta units")
    eta: float = Field(..., ge=0.0, description="g|alpha_p| (mm^-1), or u_p/2 in zeta units")
    kappa: Optional[float] = Field(None, description="Effective coupling, for the normalized beat length")

    @property
    def oscillatory(self) -> bool:
        return self.coupling > 2.0 * self.eta

    @property
    def beat_length(self) -> float:
        """L_ab = pi / (2 sqrt(C^2 - 4 eta^2))."""
        if not self.oscillatory:
            raise UnsupportedRegimeError(
                f"Closed forms need C > 2*eta (C={self.coupling:.6g}, eta={self.eta:.6g})"
            )
        return math.pi / (2.0 * math.sqrt(self.coupling ** 2 - 4.0 * self.eta ** 2))

    @property
    def normalized_beat_length(self) -> float:
        """pi / (2 sqrt(kappa^2 - 1/2)), dimensionless."""
        if self.kappa is None:
            raise UnsupportedRegimeError("Normalized beat length needs kappa")
        return normalized_beat_length(self.kappa)

    @classmethod
    def from_system(cls, params: SystemParams) -> "UndepletedParams":
        """Physical-unit constants: eta = g |alpha_p(0)| with |alpha_p(0)| = u_p(0) sqrt(P/2)."""
        u_p0 = math.sqrt(1.0 / (2.0 * (1.0 + params.power_ratio)))
        alpha_p = u_p0 * math.sqrt(params.total_power_P / 2.0)
        return cls(coupling=params.coupling_C, eta=params.nonlinearity_g * alpha_p, kappa=params.kappa)

    @classmethod
    def normalized(cls, kappa: float, u_p: float = 1.0 / math.sqrt(2.0)) -> "UndepletedParams":
        """Zeta-unit constants: C -> kappa, eta -> u_p/2.

        Worked example: kappa=1.13, u_p=1/sqrt(2) gives eta=0.35355 and
        beat_length = pi/(2 sqrt(1.13^2 - 1/2)) = 1.7821, the normalized beat length.
        """
        return cls(coupling=kappa, eta=u_p / 2.0, kappa=kappa)


def normalized_beat_length(kappa: float) -> float:
    if kappa ** 2 <= 0.5:
        raise UnsupportedRegimeError(f"Normalized beat length needs kappa > 1/sqrt(2), got {kappa}")
    return math.pi / (2.0 * math.sqrt(kappa ** 2 - 0.5))


class Bipartition(BaseModel):
    """Modes whose Y quadratures are sign-flipped by the partial transpose."""

    model_config = ConfigDict(frozen=True)

    modes: FrozenSet[str] = Field(..., description="Transposed subsystem")

    @field_validator("modes")
    @classmethod
    def proper_subset(cls, v: FrozenSet[str]) -> FrozenSet[str]:
        if not v:
            raise ValueError("Bipartition needs at least one mode")
        unknown = v - set(MODES)
        if unknown:
            raise ValueError(f"Unknown modes: {sorted(unknown)}")
        if v == set(MODES):
            raise ValueError("Bipartition must be a proper subset of the four modes")
        return v

    def complement(self, ordering: ModeOrdering) -> "Bipartition":
        return Bipartition(modes=frozenset(m for m in ordering.modes if m not in self.modes))


class VlfResult(BaseModel):
    """Optimized van Loock-Furusawa combinations."""

    model_config = ConfigDict(frozen=True)

    values: Tuple[float, float, float] = Field(..., description="(I1, I2, I3)")
    gains: Tuple[Tuple[float, float, float, float], ...] = Field(
        ..., description="Optimal (r1, r2, r3, r4) per inequality; absent gains are 0"
    )

    @field_validator("values")
    @classmethod
    def non_negative(cls, v):
        # a physical covariance gives positive variances; allow roundoff
        if any(x < -1e-12 for x in v):
            raise ValueError(f"VLF combinations must be non-negative: {v}")
        return v

    @field_validator("gains")
    @classmethod
    def finite_gains(cls, v):
        if len(v) != 3 or not all(math.isfinite(r) for g in v for r in g):
            raise ValueError(f"Expected three finite gain vectors: {v}")
        return v

    @computed_field
    @property
    def violated(self) -> bool:
        """True when all three combinations fall below the bound 2."""
        return all(x < 2.0 for x in self.values)


class PhysicalityReport(BaseModel):
    """Bona-fide checks of a covariance matrix; the caller applies tolerances."""

    model_config = ConfigDict(frozen=True)

    min_heisenberg_eigenvalue: float = Field(..., description="min eig of V + i Omega/2")
    purity: float = Field(..., description="1/sqrt(det(2V))")
    symmetry_defect: float = Field(..., description="max |V - V^T|")


class Scenario(BaseModel):
    """A named or custom run, with the effective parameter set."""

    model_config = ConfigDict(frozen=True)

    name: ScenarioName = "custom"
    kappa: float = Field(1.13, gt=1.0)
    ratio: float = Field(1.0, ge=0.0)
    coupling: float = Field(0.08, gt=0.0)
    nonlinearity: float = Field(0.0025, gt=0.0)
    zeta_max: float = Field(6.0, gt=0.0)
    window_mm: Optional[float] = Field(None, gt=0.0, description="Per-point physical length; overrides zeta_max")
    reference_kappa: Optional[float] = Field(
        None, gt=1.0, description="Hold P at the value giving this kappa with `coupling`; C then scales with kappa"
    )
    extend_to_peak: bool = Field(False, description="Widen the range while the pump E_N maximum sits at its end")
    steps_per_unit: int = Field(4096, ge=2)
    phases: Phases = (0.0, 0.0, 0.0, 0.0)
    sweep_axis: Optional[Literal["kappa", "ratio"]] = None
    sweep_values: List[float] = Field(default_factory=list)
    out: Path = Path("output")
    jobs: int = Field(1, ge=1)

    @model_validator(mode="after")
    def sweep_consistent(self) -> "Scenario":
        if self.sweep_axis is not None and not self.sweep_values:
            raise ValueError("A sweep needs at least one value")
        if self.sweep_axis == "kappa" and any(k <= 1.0 for k in self.sweep_values):
            raise ValueError("All swept kappa values must exceed 1")
        if self.sweep_axis == "ratio" and any(r < 0.0 for r in self.sweep_values):
            raise ValueError("Swept power ratios must be non-negative")
        return self

    def coupling_for(self, kappa: float) -> float:
        """
        Linear coupling of the point at `kappa`.

        With `reference_kappa` set the total power P = C^2/(2 g^2 kappa_ref^2) is
        shared by every point, so C = coupling * kappa / kappa_ref and one unit of
        zeta is the same physical length for all of them.
        """
        if self.reference_kappa is None:
            return self.coupling
        return self.coupling * kappa / self.reference_kappa

    def zeta_max_for(self, kappa: float) -> float:
        if self.window_mm is not None:
            return self.window_mm * self.coupling_for(kappa) / kappa
        return self.zeta_max


class PeakRow(BaseModel):
    """One sweep point in the peak table."""

    parameter: float
    max_en_pumps: Optional[float] = None
    argmax_zeta: Optional[float] = None
    argmax_z_mm: Optional[float] = None
    at_edge: bool = Field(False, description="Maximum sits on the first or last sample, not an interior peak")
    status: Literal["ok", "failed"] = "ok"
    error: str = ""


class RunSummary(BaseModel):
    """Machine-readable summary of one parameter set."""

    label: str
    kappa: float
    ratio: float
    zeta_max: float
    peak_en_signals: float
    peak_en_signals_zeta: float
    peak_en_signals_z_mm: float
    peak_en_pumps: float
    peak_en_pumps_zeta: float
    peak_en_pumps_z_mm: float
    peak_en_pumps_at_edge: bool = False
    vlf_violation_intervals: List[Tuple[float, float]] = Field(default_factory=list)
    worst_min_heisenberg_eigenvalue: float
    worst_purity_defect: float
    worst_symmetry_defect: float
    worst_symplectic_defect: float
    worst_conservation_defect: float

    def to_lines(self) -> List[str]:
        """key = value lines, same format as the config files."""
        lines = []
        for key, value in self.model_dump().items():
            if key == "vlf_violation_intervals":
                value = ";".join(f"{a:.12g}-{b:.12g}" for a, b in value) or "none"
            elif isinstance(value, float):
                value = f"{value:.12g}"
            lines.append(f"{self.label}.{key} = {value}")
        return lines
