"""Scenario orchestration: per-figure parameter sets, CSV tables, summaries and sweeps."""

import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from coupler.config import settings
from coupler.exceptions import CouplerError, PhysicalityError, ScenarioError
from coupler.models.modes import FULL_ORDERING
from coupler.models.schemas import PeakRow, RunSummary, Scenario, SystemParams
from coupler.services.classical_service import ClassicalService
from coupler.services.entanglement_service import VLF_BOUND, pump_logneg, signal_logneg, vlf_optimize
from coupler.services.model_service import build_params
from coupler.services.propagation_service import PropagatedState, PropagationService, physicality_report

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.12g"

SCENARIO_DEFAULTS: Dict[str, dict] = {
    "fig2": {"kappa": 1.13, "ratio": 1e-20, "zeta_max": 6.0},
    "fig3": {"kappa": 1.13, "ratio": 1.0, "zeta_max": 6.0},
    "fig4a": {
        "kappa": 1.13,
        "zeta_max": 6.0,
        "sweep_axis": "ratio",
        "sweep_values": [1.0 / 10.0, 1.0 / 9.0, 1.0 / 4.0, 2.0 / 3.0, 1.0],
    },
    "fig4b": {
        "ratio": 0.25,
        "sweep_axis": "kappa",
        "sweep_values": [1.01, 1.13, 1.6, 2.26, 3.2],
        "window_mm": None,  # filled from settings.fig4b_window_mm
        "reference_kappa": None,  # filled from settings.fig4b_reference_kappa
        "extend_to_peak": True,
    },
    "fig5": {"kappa": 2.26, "ratio": 1.0, "zeta_max": 4.0},
    "custom": {},
}

# (CSV column, first quadrature, second quadrature)
COVARIANCE_COLUMNS: Tuple[Tuple[str, str, str], ...] = (
    ("V_XsA_XsB", "XsA", "XsB"),
    ("V_YsA_YsB", "YsA", "YsB"),
    ("V_XpA_XpB", "XpA", "XpB"),
    ("V_YpA_YpB", "YpA", "YpB"),
    ("V_XpA_YpB", "XpA", "YpB"),
    ("V_YpA_XpB", "YpA", "XpB"),
)

# free gains per inequality: (CSV column, inequality, gain index)
GAIN_COLUMNS: Tuple[Tuple[str, int, int], ...] = (
    ("r3_i1", 0, 2),
    ("r4_i1", 0, 3),
    ("r1_i2", 1, 0),
    ("r4_i2", 1, 3),
    ("r1_i3", 2, 0),
    ("r2_i3", 2, 1),
)

CSV_COLUMNS: List[str] = (
    ["zeta", "z_mm", "us2", "vs2", "up2", "vp2", "dtheta", "dphi"]
    + [name for name, _, _ in COVARIANCE_COLUMNS]
    + ["en_signals", "en_pumps", "I1", "I2", "I3"]
    + [name for name, _, _ in GAIN_COLUMNS]
)


def scenario_defaults(name: str) -> dict:
    """Parameter overrides pinned by a named scenario."""
    if name not in SCENARIO_DEFAULTS:
        raise KeyError(f"Unknown scenario '{name}'")
    defaults = dict(SCENARIO_DEFAULTS[name])
    if name == "fig4b":
        defaults["window_mm"] = settings.fig4b_window_mm
        defaults["reference_kappa"] = settings.fig4b_reference_kappa
    return defaults


def violation_intervals(zeta: np.ndarray, violated: np.ndarray) -> List[Tuple[float, float]]:
    """Contiguous zeta ranges (first, last grid point) where `violated` holds."""
    intervals = []
    start = None
    for i, flag in enumerate(violated):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            intervals.append((float(zeta[start]), float(zeta[i - 1])))
            start = None
    if start is not None:
        intervals.append((float(zeta[start]), float(zeta[-1])))
    return intervals


class PointResult(BaseModel):
    """Table and summary of one parameter set."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    table: pd.DataFrame = Field(..., description="One row per recorded zeta, CSV_COLUMNS")
    summary: RunSummary
    zeta_max: float = Field(..., description="Range actually integrated, after any extension")


class ScenarioResult(BaseModel):
    """Files written by a scenario run."""

    csv_paths: List[Path] = Field(default_factory=list)
    summary_path: Optional[Path] = None
    peaks_path: Optional[Path] = None
    summaries: List[RunSummary] = Field(default_factory=list)
    peaks: List[PeakRow] = Field(default_factory=list)

    @property
    def failed_points(self) -> List[PeakRow]:
        return [row for row in self.peaks if row.status == "failed"]


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", delete=False, dir=path.parent, encoding="utf-8", suffix=".tmp") as f:
        f.write(text)
        tmp_path = f.name
    os.replace(tmp_path, path)


def steps_for(zeta_max: float, steps_per_unit: int) -> int:
    return max(2, int(round(zeta_max * steps_per_unit)))


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, (tuple, list)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


class ScenarioRunner:
    """Runs named or custom scenarios and writes their CSV and summary files."""

    def __init__(self, heisenberg_tolerance: Optional[float] = None):
        self.heisenberg_tolerance = (
            settings.heisenberg_tolerance if heisenberg_tolerance is None else heisenberg_tolerance
        )
        self.propagation = PropagationService()
        self.classical = ClassicalService()

    # Single parameter set

    def compute_point(self, scenario: Scenario, kappa: float, ratio: float, label: str) -> PointResult:
        """
        Propagate one parameter set and tabulate every recorded plane.

        With `scenario.extend_to_peak` the range grows by `settings.peak_extension_factor`
        (at most `settings.max_peak_extensions` times) while the pump E_N maximum is
        the last recorded plane.

        Raises:
            IntegrationError: On conservation or symplecticity drift
            PhysicalityError: If a covariance fails the Heisenberg check
        """
        params = build_params(scenario.coupling_for(kappa), scenario.nonlinearity, kappa, ratio, scenario.phases)
        zeta_max = scenario.zeta_max_for(kappa)
        extensions = settings.max_peak_extensions if scenario.extend_to_peak else 0
        while True:
            steps = steps_for(zeta_max, scenario.steps_per_unit)
            state = self.propagation.integrate_propagator(params, zeta_max=zeta_max, steps=steps)
            table = self._tabulate(state, params)
            summary = self._summarize(state, params, table, label, zeta_max)
            rising = summary.peak_en_pumps_zeta >= float(state.zeta[-1])
            if not rising or extensions == 0:
                break
            extensions -= 1
            zeta_max *= settings.peak_extension_factor
            logger.info(f"{label}: pump E_N still rising at the end of the range, extending to zeta={zeta_max:.6g}")
        if summary.peak_en_pumps_at_edge:
            logger.warning(f"{label}: pump E_N maximum lies on the range boundary (zeta={summary.peak_en_pumps_zeta:.6g})")
        return PointResult(table=table, summary=summary, zeta_max=zeta_max)

    def _tabulate(self, state: PropagatedState, params: SystemParams) -> pd.DataFrame:
        powers = state.trajectory.powers()
        mismatch = self.classical.phase_mismatch_series(state.trajectory)
        columns = {
            "zeta": state.zeta,
            "z_mm": params.z_of_zeta(state.zeta),
            "us2": powers["us2"].to_numpy(),
            "vs2": powers["vs2"].to_numpy(),
            "up2": powers["up2"].to_numpy(),
            "vp2": powers["vp2"].to_numpy(),
            "dtheta": mismatch["dtheta"].to_numpy(),
            "dphi": mismatch["dphi"].to_numpy(),
        }
        for name, first, second in COVARIANCE_COLUMNS:
            columns[name] = state.V[:, FULL_ORDERING.index(first), FULL_ORDERING.index(second)]

        en_signals, en_pumps, values, gains = [], [], [], []
        for V in state.V:
            en_signals.append(signal_logneg(V))
            en_pumps.append(pump_logneg(V))
            vlf = vlf_optimize(V)
            values.append(vlf.values)
            gains.append([vlf.gains[k][j] for _, k, j in GAIN_COLUMNS])
        values = np.array(values)
        gains = np.array(gains)

        columns["en_signals"] = np.array(en_signals)
        columns["en_pumps"] = np.array(en_pumps)
        for k in range(3):
            columns[f"I{k + 1}"] = values[:, k]
        for j, (name, _, _) in enumerate(GAIN_COLUMNS):
            columns[name] = gains[:, j]
        return pd.DataFrame(columns, columns=CSV_COLUMNS)

    def _summarize(
        self, state: PropagatedState, params: SystemParams, table: pd.DataFrame, label: str, zeta_max: float
    ) -> RunSummary:
        reports = [physicality_report(V) for V in state.V]
        min_heisenberg = min(r.min_heisenberg_eigenvalue for r in reports)
        if min_heisenberg < -self.heisenberg_tolerance:
            i = int(np.argmin([r.min_heisenberg_eigenvalue for r in reports]))
            logger.error(f"{label}: Heisenberg check failed at zeta={state.zeta[i]:.6g} ({min_heisenberg:.3e})")
            raise PhysicalityError(
                f"min eigenvalue of V + i Omega/2 is {min_heisenberg:.3e} at zeta={state.zeta[i]:.6g}"
            )

        i_s = int(np.argmax(table["en_signals"].to_numpy()))
        i_p = int(np.argmax(table["en_pumps"].to_numpy()))
        violated = np.all(table[["I1", "I2", "I3"]].to_numpy() < VLF_BOUND, axis=1)
        return RunSummary(
            label=label,
            kappa=params.kappa,
            ratio=params.power_ratio,
            zeta_max=float(zeta_max),
            peak_en_signals=float(table["en_signals"].iloc[i_s]),
            peak_en_signals_zeta=float(state.zeta[i_s]),
            peak_en_signals_z_mm=float(params.z_of_zeta(state.zeta[i_s])),
            peak_en_pumps=float(table["en_pumps"].iloc[i_p]),
            peak_en_pumps_zeta=float(state.zeta[i_p]),
            peak_en_pumps_z_mm=float(params.z_of_zeta(state.zeta[i_p])),
            peak_en_pumps_at_edge=i_p in (0, len(state.zeta) - 1),
            vlf_violation_intervals=violation_intervals(state.zeta, violated),
            worst_min_heisenberg_eigenvalue=float(min_heisenberg),
            worst_purity_defect=float(max(abs(r.purity - 1.0) for r in reports)),
            worst_symmetry_defect=float(max(r.symmetry_defect for r in reports)),
            worst_symplectic_defect=float(np.max(state.symplectic_defects())),
            worst_conservation_defect=state.trajectory.conservation_defect(),
        )

    def header_lines(
        self, scenario: Scenario, kappa: float, ratio: float, zeta_max: Optional[float] = None
    ) -> List[str]:
        zeta_max = scenario.zeta_max_for(kappa) if zeta_max is None else zeta_max
        effective = {
            "scenario": scenario.name,
            "kappa": float(kappa),
            "ratio": float(ratio),
            "coupling": float(scenario.coupling_for(kappa)),
            "nonlinearity": scenario.nonlinearity,
            "zeta_max": float(zeta_max),
            "steps_per_unit": scenario.steps_per_unit,
            "steps": steps_for(zeta_max, scenario.steps_per_unit),
            "phases": tuple(scenario.phases),
        }
        if scenario.reference_kappa is not None:
            effective["reference_kappa"] = scenario.reference_kappa
        lines = [f"# coupler csv schema {SCHEMA_VERSION}"]
        lines += [f"# {key} = {_format_value(value)}" for key, value in effective.items()]
        return lines

    def write_point(self, scenario: Scenario, kappa: float, ratio: float, label: str, path: Path) -> RunSummary:
        """Compute one parameter set and write its CSV (header comments + table)."""
        result = self.compute_point(scenario, kappa, ratio, label)
        body = result.table.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
        header = self.header_lines(scenario, kappa, ratio, result.zeta_max)
        _write_atomic(path, "\n".join(header) + "\n" + body)
        logger.info(f"Wrote {len(result.table)} rows to {path}")
        return result.summary

    def write_summary(self, scenario: Scenario, summaries: Sequence[RunSummary], path: Path):
        lines = [f"# coupler summary schema {SCHEMA_VERSION}", f"# scenario = {scenario.name}"]
        for summary in summaries:
            lines += summary.to_lines()
        _write_atomic(path, "\n".join(lines) + "\n")

    # Scenarios

    def run_scenario(self, scenario: Scenario) -> ScenarioResult:
        """
        Run a scenario: one CSV per parameter set plus a summary block.

        Args:
            scenario: Effective scenario (named defaults already applied)

        Returns:
            ScenarioResult listing the written files

        Raises:
            ScenarioError: Wrapping any module error; partial outputs are removed
        """
        if scenario.sweep_axis is not None:
            return self.sweep(scenario.sweep_axis, scenario.sweep_values, scenario)

        out = Path(scenario.out)
        csv_path = out / f"{scenario.name}.csv"
        summary_path = out / f"{scenario.name}.summary"
        logger.info(f"Running scenario {scenario.name}: kappa={scenario.kappa}, ratio={scenario.ratio:g}")
        try:
            summary = self.write_point(scenario, scenario.kappa, scenario.ratio, scenario.name, csv_path)
            self.write_summary(scenario, [summary], summary_path)
        except CouplerError as e:
            for path in (csv_path, summary_path):
                path.unlink(missing_ok=True)
            point = f"kappa={scenario.kappa}, ratio={scenario.ratio:g}"
            logger.error(f"Scenario {scenario.name} failed at {point}: {e}")
            raise ScenarioError(scenario.name, point, e) from e

        logger.info(f"Scenario {scenario.name} done: peak E_N(signals)={summary.peak_en_signals:.4f}, "
                    f"peak E_N(pumps)={summary.peak_en_pumps:.4f}")
        return ScenarioResult(csv_paths=[csv_path], summary_path=summary_path, summaries=[summary])

    def sweep(self, axis: str, values: Sequence[float], base: Scenario) -> ScenarioResult:
        """
        Run `base` once per value of `axis` ("kappa" or "ratio").

        Points run independently, in parallel when base.jobs > 1. A failing point
        is recorded in the peak table and the sweep continues.
        """
        if axis not in ("kappa", "ratio"):
            raise ValueError(f"Unknown sweep axis '{axis}'")
        if not values:
            raise ValueError("A sweep needs at least one value")

        out = Path(base.out)
        tasks = [(base, axis, float(v)) for v in values]
        outcomes: List[Tuple[Optional[RunSummary], str]] = [(None, "not run")] * len(tasks)
        logger.info(f"Sweeping {base.name} over {axis} = {list(values)} with {base.jobs} job(s)")

        if base.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=base.jobs) as executor:
                futures = {executor.submit(_sweep_worker, *task): i for i, task in enumerate(tasks)}
                for future in as_completed(futures):
                    outcomes[futures[future]] = future.result()
        else:
            for i, task in enumerate(tasks):
                outcomes[i] = _sweep_worker(*task)

        result = ScenarioResult()
        for (_, _, value), (summary, error) in zip(tasks, outcomes):
            if summary is None:
                logger.error(f"Sweep point {axis}={value:g} failed: {error}")
                result.peaks.append(PeakRow(parameter=value, status="failed", error=error))
                continue
            result.summaries.append(summary)
            result.csv_paths.append(out / f"{point_label(base.name, axis, value)}.csv")
            result.peaks.append(
                PeakRow(
                    parameter=value,
                    max_en_pumps=summary.peak_en_pumps,
                    argmax_zeta=summary.peak_en_pumps_zeta,
                    argmax_z_mm=summary.peak_en_pumps_z_mm,
                    at_edge=summary.peak_en_pumps_at_edge,
                )
            )

        result.peaks_path = out / f"{base.name}_peaks.csv"
        peaks = pd.DataFrame([row.model_dump() for row in result.peaks])
        peaks.insert(0, "axis", axis)
        _write_atomic(
            result.peaks_path,
            f"# coupler peaks schema {SCHEMA_VERSION}\n"
            + peaks.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n"),
        )
        result.summary_path = out / f"{base.name}.summary"
        self.write_summary(base, result.summaries, result.summary_path)
        logger.info(f"Sweep {base.name} done: {len(result.failed_points)} of {len(tasks)} point(s) failed")
        return result


def point_label(name: str, axis: str, value: float) -> str:
    return f"{name}_{axis}_{value:.6g}"


def _sweep_worker(base: Scenario, axis: str, value: float) -> Tuple[Optional[RunSummary], str]:
    """Run and write one sweep point; failures come back as text so the sweep continues."""
    kappa = value if axis == "kappa" else base.kappa
    ratio = value if axis == "ratio" else base.ratio
    label = point_label(base.name, axis, value)
    path = Path(base.out) / f"{label}.csv"
    try:
        return ScenarioRunner().write_point(base, kappa, ratio, label, path), ""
    except CouplerError as e:
        path.unlink(missing_ok=True)
        return None, f"{type(e).__name__}: {e}"
