"""Figure-level reproduction checks on full scenario runs.

Peak heights and locations are pinned to the values this integrator produces;
where they differ from the reference plots the difference is recorded in DESIGN.md.
Skip with ``pytest -m "not figures"``.
"""

import numpy as np
import pandas as pd
import pytest

from coupler.models.schemas import Scenario
from coupler.services.scenario_service import ScenarioResult, ScenarioRunner, scenario_defaults

pytestmark = pytest.mark.figures

PUMP_COVARIANCES = ["V_XpA_XpB", "V_YpA_YpB", "V_XpA_YpB", "V_YpA_XpB"]


def run(name: str, out) -> ScenarioResult:
    scenario = Scenario(name=name, out=out, **scenario_defaults(name))
    return ScenarioRunner().run_scenario(scenario)


def test_fig3_signals_and_pumps_entangled(tmp_path):
    """Test both pairs exceed 0.4 and the pump maximum sits late in the range."""
    result = run("fig3", tmp_path)
    table = pd.read_csv(tmp_path / "fig3.csv", comment="#")
    assert table["en_signals"].max() > 0.4
    summary = result.summaries[0]
    assert summary.peak_en_pumps == pytest.approx(0.68, abs=0.03)
    assert summary.peak_en_pumps_zeta == pytest.approx(4.164, abs=0.1)
    assert not summary.peak_en_pumps_at_edge
    peak = table["en_pumps"].idxmax()
    assert max(abs(table[name].iloc[peak]) for name in PUMP_COVARIANCES) > 1e-3


def test_fig4a_ratio_sweep(tmp_path):
    """Test weak signal seeds peak near zeta = 3 and strong seeds later."""
    result = run("fig4a", tmp_path)
    assert not result.failed_points
    peaks = {round(row.parameter, 6): row for row in result.peaks}
    for ratio in (0.1, 1.0 / 9.0, 0.25):
        assert peaks[round(ratio, 6)].argmax_zeta == pytest.approx(3.0, abs=0.5)
    assert peaks[round(2.0 / 3.0, 6)].argmax_zeta == pytest.approx(4.375, abs=0.1)
    assert peaks[1.0].argmax_zeta == pytest.approx(4.164, abs=0.1)
    assert not any(row.at_edge for row in result.peaks)


def test_fig4b_kappa_sweep(tmp_path):
    """Test the near-threshold pump peak length at fixed total power."""
    result = run("fig4b", tmp_path)
    peaks = {row.parameter: row for row in result.peaks}
    assert peaks[1.01].status == "ok"
    assert peaks[1.01].argmax_z_mm == pytest.approx(39.0, abs=3.0)
    assert not peaks[1.01].at_edge
    assert peaks[2.26].status == "ok"
    assert not peaks[2.26].at_edge
    for row in result.peaks:
        if row.status == "ok":
            assert row.argmax_z_mm == pytest.approx(row.argmax_zeta * 1.13 / 0.08)


def test_fig5_quadripartite_violation(tmp_path):
    """Test all three combinations drop below 2 together and I1 = I3."""
    result = run("fig5", tmp_path)
    assert result.summaries[0].vlf_violation_intervals
    table = pd.read_csv(tmp_path / "fig5.csv", comment="#")
    np.testing.assert_allclose(table["I1"], table["I3"], atol=1e-9)
