"""Configuration settings for the nonlinear coupler simulator."""

from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix COUPLER_)."""

    model_config = SettingsConfigDict(
        env_prefix="COUPLER_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Waveguide constants (PPLN values)
    coupling: float = 0.08  # mm^-1
    nonlinearity: float = 0.0025  # mm^-1 mW^-1/2

    # Resolution per unit of normalized length zeta
    steps_per_unit: int = 4096
    rows_per_unit: int = 256

    # Numerical gates
    conservation_tolerance: float = 1e-9
    symplectic_tolerance: float = 1e-8
    heisenberg_tolerance: float = 1e-10
    pairing_tolerance: float = 1e-9
    phase_floor: float = 1e-150

    # Scenario defaults
    default_kappa: float = 1.13
    default_ratio: float = 1.0
    default_zeta_max: float = 6.0
    fig4b_window_mm: float = 60.0
    fig4b_reference_kappa: float = 1.13  # total power held at the value giving this kappa with `coupling`
    peak_extension_factor: float = 1.5
    max_peak_extensions: int = 3

    # Runtime
    output_dir: Path = Path("output")
    jobs: int = 1
    log_level: str = "INFO"


# Global settings instance
settings = Settings()
