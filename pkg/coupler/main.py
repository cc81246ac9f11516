"""Command-line entry point for the nonlinear coupler scenario runner."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from coupler.config import settings
from coupler.exceptions import CouplerError, DomainError, LinearizationError, ScenarioError
from coupler.models.schemas import Scenario
from coupler.services.scenario_service import SCENARIO_DEFAULTS, ScenarioRunner, scenario_defaults

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

CONFIG_KEYS = (
    "scenario", "kappa", "ratio", "coupling", "nonlinearity",
    "zeta_max", "steps_per_unit", "phases", "out", "jobs",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupler",
        description="Entanglement in a nonlinear directional coupler: reproduce figures and sweeps as CSV",
    )
    parser.add_argument("--scenario", choices=sorted(SCENARIO_DEFAULTS), help="Named parameter set")
    parser.add_argument("--kappa", type=float, help="Effective coupling, must exceed 1")
    parser.add_argument("--ratio", type=float, help="Signal-to-pump input power ratio")
    parser.add_argument("--coupling", type=float, help="Linear coupling C, mm^-1")
    parser.add_argument("--nonlinearity", type=float, help="Nonlinear constant g, mm^-1 mW^-0.5")
    parser.add_argument("--zeta-max", dest="zeta_max", type=float, help="End of the normalized range")
    parser.add_argument("--steps-per-unit", dest="steps_per_unit", type=int, help="RK4 steps per unit zeta")
    parser.add_argument("--phases", help="Input phases theta_s,theta_p,phi_s,phi_p in rad")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--jobs", type=int, help="Parallel sweep points")
    parser.add_argument("--config", help="key = value file with any of the options above")
    parser.add_argument("--log-level", dest="log_level", default=None, help="Logging level (default from settings)")
    return parser


def parse_phases(text: str) -> tuple:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 4:
        raise DomainError(f"Expected four comma-separated phases, got '{text}'")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise DomainError(f"Malformed phases '{text}'")


def _convert(key: str, raw) -> object:
    """Convert a config-file or flag value to the Scenario field type."""
    if raw is None:
        raise DomainError(f"Option '{key}' has no value")
    try:
        if key in ("kappa", "ratio", "coupling", "nonlinearity", "zeta_max"):
            return float(raw)
        if key in ("steps_per_unit", "jobs"):
            return int(raw)
    except (TypeError, ValueError):
        raise DomainError(f"Malformed value for '{key}': {raw!r}")
    if key == "phases":
        return parse_phases(raw)
    if key == "out":
        return Path(raw)
    if key == "scenario":
        if raw not in SCENARIO_DEFAULTS:
            raise DomainError(f"Unknown scenario '{raw}'")
        return raw
    raise DomainError(f"Unknown option '{key}'")


def read_config(path: str) -> Dict[str, object]:
    """Parse a flat key = value config file (# comments allowed)."""
    config_path = Path(path)
    if not config_path.is_file():
        raise DomainError(f"Config file not found: {path}")
    raw = dotenv_values(config_path)
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise DomainError(f"Unknown config keys in {path}: {unknown}")
    return {key: _convert(key, value) for key, value in raw.items()}


def scenario_from_args(args: argparse.Namespace) -> Scenario:
    """
    Effective scenario with precedence flags > config file > scenario defaults > settings.

    Raises:
        LinearizationError: If the effective kappa is <= 1
        DomainError: On malformed or unknown options
    """
    overrides = read_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key)
        if value is not None:
            overrides[key] = _convert(key, value)

    name = overrides.pop("scenario", "custom")
    values: Dict[str, object] = {
        "name": name,
        "kappa": settings.default_kappa,
        "ratio": settings.default_ratio,
        "coupling": settings.coupling,
        "nonlinearity": settings.nonlinearity,
        "zeta_max": settings.default_zeta_max,
        "steps_per_unit": settings.steps_per_unit,
        "out": settings.output_dir,
        "jobs": settings.jobs,
    }
    values.update(scenario_defaults(name))
    values.update(overrides)

    if "zeta_max" in overrides:
        values["window_mm"] = None
    # an explicit value on the swept axis turns the sweep into a single run
    axis = values.get("sweep_axis")
    if axis is not None and axis in overrides:
        values["sweep_axis"] = None
        values["sweep_values"] = []

    kappas = values.get("sweep_values") if values.get("sweep_axis") == "kappa" else [values["kappa"]]
    for kappa in kappas:
        if kappa <= 1.0:
            raise LinearizationError(
                f"kappa={kappa} <= 1: fluctuations grow exponentially and the linearization is invalid"
            )
    return Scenario(**values)


def parse_invocation(argv: Optional[List[str]] = None) -> Scenario:
    """Build the effective Scenario from command-line arguments and an optional config file."""
    return scenario_from_args(build_parser().parse_args(argv))


def main(argv: Optional[List[str]] = None) -> int:
    """Run one invocation; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    try:
        scenario = scenario_from_args(args)
    except (DomainError, ValidationError) as e:
        logger.error(f"Invalid invocation: {e}")
        return EXIT_USAGE

    try:
        result = ScenarioRunner().run_scenario(scenario)
    except ScenarioError as e:
        return EXIT_USAGE if isinstance(e.cause, DomainError) else EXIT_NUMERICAL
    except CouplerError as e:
        logger.error(f"Run failed: {e}")
        return EXIT_NUMERICAL

    if result.failed_points:
        logger.error(f"{len(result.failed_points)} sweep point(s) failed, see {result.peaks_path}")
        return EXIT_NUMERICAL
    logger.info(f"Summary written to {result.summary_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
