"""Standalone script to regenerate the data behind every named scenario."""

import sys
from pathlib import Path

# Add parent directory to path to import coupler modules
sys.path.insert(0, str(Path(__file__).parent.parent))

import argparse
import logging

from coupler.config import settings
from coupler.exceptions import CouplerError
from coupler.main import build_parser, scenario_from_args
from coupler.services.scenario_service import ScenarioRunner

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

FIGURES = ("fig2", "fig3", "fig4a", "fig4b", "fig5")


def main(argv=None):
    """Run fig2..fig5 into one output directory."""
    cli = argparse.ArgumentParser(description="Regenerate CSV data for all named scenarios")
    cli.add_argument("--out", default=str(settings.output_dir), help="Output directory")
    cli.add_argument("--jobs", type=int, default=settings.jobs, help="Parallel sweep points")
    cli.add_argument("--only", nargs="*", choices=FIGURES, help="Subset of scenarios")
    args = cli.parse_args(argv)

    runner = ScenarioRunner()
    failures = 0
    for name in args.only or FIGURES:
        logger.info(f"Reproducing {name}...")
        try:
            scenario = scenario_from_args(
                build_parser().parse_args(["--scenario", name, "--out", args.out, "--jobs", str(args.jobs)])
            )
            result = runner.run_scenario(scenario)
        except CouplerError as e:
            logger.error(f"{name} failed: {e}")
            failures += 1
            continue
        failures += len(result.failed_points)
        logger.info(f"{name} written to {result.summary_path}")

    if failures:
        logger.error(f"{failures} failure(s) while reproducing figures")
        return 1
    logger.info("All scenarios reproduced successfully!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
