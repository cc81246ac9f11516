"""Unit tests for the classical mean-field integration."""

import math

import numpy as np
import pytest

from coupler.config import settings
from coupler.exceptions import DomainError, IntegrationError
from coupler.models.schemas import UndepletedParams, normalized_beat_length
from coupler.services.classical_service import ClassicalService, local_extrema, pi_crossings
from coupler.services.model_service import build_params
from coupler.services.undepleted_service import cascaded_phase

C, G = 0.08, 0.0025


@pytest.fixture(scope="module")
def service():
    return ClassicalService()


@pytest.fixture(scope="module")
def depleted(service):
    return service.integrate_classical(build_params(C, G, 1.13, 1.0), zeta_max=6.0, steps=6 * 4096)


@pytest.fixture(scope="module")
def undepleted(service):
    return service.integrate_classical(build_params(C, G, 1.13, 1e-20), zeta_max=6.0, steps=6 * 4096)


def test_grid_stores_every_step(depleted):
    """Test the trajectory keeps steps+1 points on [0, zeta_max]."""
    assert len(depleted) == 6 * 4096 + 1
    assert depleted.zeta[0] == 0.0
    assert depleted.zeta[-1] == pytest.approx(6.0)
    assert depleted.step == pytest.approx(1.0 / 4096)


def test_energy_conservation(depleted, undepleted):
    """Test the conserved sum stays at one."""
    assert depleted.conservation_defect() <= 1e-9
    assert undepleted.conservation_defect() <= 1e-9


def test_undepleted_pump_constant(undepleted):
    """Test u_p stays at 1/sqrt(2) for a vanishing signal."""
    powers = undepleted.powers()
    assert np.max(np.abs(np.sqrt(powers["up2"]) - 1.0 / math.sqrt(2.0))) <= 1e-6


def test_depleted_oscillation_about_quarter(depleted):
    """Test u_s^2 oscillates above and u_p^2 below the initial 1/4."""
    powers = depleted.powers()
    assert powers["us2"].min() >= 0.25 - 1e-9
    assert powers["up2"].max() <= 0.25 + 1e-9
    assert powers["us2"].max() > 0.26


def test_waveguide_symmetry(depleted):
    """Test equal inputs give identical A and B observables."""
    powers = depleted.powers()
    np.testing.assert_allclose(powers["us2"], powers["vs2"], atol=1e-9)
    np.testing.assert_allclose(powers["up2"], powers["vp2"], atol=1e-9)


def test_linear_coupler_keeps_powers(service):
    """Test nonlinear=False leaves equal signal powers untouched."""
    traj = service.integrate_classical(build_params(C, G, 3.0, 1.0), zeta_max=4.0, steps=4096, nonlinear=False)
    powers = traj.powers()
    np.testing.assert_allclose(powers["us2"], 0.25, atol=1e-12)
    np.testing.assert_allclose(powers["up2"], 0.25, atol=1e-15)
    assert traj.conservation_defect() < 1e-12


def test_fourth_order_convergence():
    """Test Richardson ratio of successive step halvings is close to 2^4."""
    service = ClassicalService(conservation_tolerance=1e-5)
    params = build_params(C, G, 1.13, 1.0)
    finals = [
        service.integrate_classical(params, zeta_max=2.0, steps=2 * n).amplitudes[-1]
        for n in (64, 128, 256)
    ]
    ratio = np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2])
    assert 10.0 < ratio < 22.0


def test_step_halving_at_default_resolution(service, depleted):
    """Test halving the default step moves every stored amplitude by at most 1e-8."""
    fine = service.integrate_classical(build_params(C, G, 1.13, 1.0), zeta_max=6.0, steps=6 * 8192)
    np.testing.assert_allclose(fine.zeta[::2], depleted.zeta, rtol=0.0, atol=1e-12)
    assert np.max(np.abs(fine.amplitudes[::2] - depleted.amplitudes)) <= 1e-8


def test_explicit_zero_tolerance_is_kept():
    """Test a tolerance of 0.0 is not replaced by the configured default."""
    assert ClassicalService(conservation_tolerance=0.0).conservation_tolerance == 0.0
    assert ClassicalService().conservation_tolerance == settings.conservation_tolerance


def test_initial_phase_mismatch(service):
    """Test dtheta(0) = theta_p - 2 theta_s = -theta for equal phases."""
    params = build_params(C, G, 1.13, 1.0, phases=(0.3, 0.3, 0.3, 0.3))
    traj = service.integrate_classical(params, zeta_max=0.5, steps=512)
    series = service.phase_mismatch_series(traj)
    assert series["dtheta"].iloc[0] == pytest.approx(-0.3)
    assert series["dphi"].iloc[0] == pytest.approx(-0.3)


def test_phase_gap_for_zero_signal(service):
    """Test pure down-conversion leaves signal phases undefined instead of failing."""
    traj = service.integrate_classical(build_params(C, G, 1.13, 0.0), zeta_max=1.0, steps=1024)
    series = service.phase_mismatch_series(traj)
    assert series["dtheta"].isna().all()
    assert traj.conservation_defect() < 1e-12


def test_phase_mismatch_tracks_cascaded_phase(service, undepleted):
    """Test dtheta follows the undepleted cascaded phase over the first beat length."""
    series = service.phase_mismatch_series(undepleted)
    beat = normalized_beat_length(1.13)
    window = series["zeta"] <= beat
    expected = cascaded_phase(series["zeta"][window].to_numpy(), UndepletedParams.normalized(1.13))
    assert np.max(np.abs(series["dtheta"][window].to_numpy() - expected)) < 1e-3


def test_pi_crossings_match_power_extrema(service, depleted):
    """Test the planes where dtheta is a multiple of pi are the u_s^2 extrema."""
    series = service.phase_mismatch_series(depleted)
    crossings = pi_crossings(series["zeta"].to_numpy(), series["dtheta"].to_numpy())
    extrema = local_extrema(depleted.zeta, depleted.powers()["us2"].to_numpy())
    assert len(extrema) > 0
    for zeta in extrema:
        assert np.min(np.abs(crossings - zeta)) < 2 * depleted.step
    interior = crossings[(crossings > 2 * depleted.step) & (crossings < depleted.zeta[-1] - 2 * depleted.step)]
    for zeta in interior:
        assert np.min(np.abs(extrema - zeta)) < 2 * depleted.step


def test_pi_crossings_helper():
    """Test crossings of pi and 2 pi are interpolated."""
    zeta = np.linspace(0.0, 1.0, 1001)
    phase = 7.0 * zeta
    np.testing.assert_allclose(pi_crossings(zeta, phase), [math.pi / 7.0, 2 * math.pi / 7.0], atol=1e-6)


def test_local_extrema_helper():
    """Test extrema of a sine are found at its peaks."""
    zeta = np.linspace(0.0, 2.0 * math.pi, 2001)
    found = local_extrema(zeta, np.sin(zeta))
    np.testing.assert_allclose(found, [math.pi / 2, 3 * math.pi / 2], atol=2e-3)


def test_invalid_range(service):
    """Test a non-positive range is rejected."""
    with pytest.raises(DomainError):
        service.integrate_classical(build_params(C, G, 1.13, 1.0), zeta_max=0.0, steps=10)


def test_conservation_failure_reports_position():
    """Test a drift beyond tolerance raises with the offending zeta."""
    service = ClassicalService(conservation_tolerance=1e-30)
    with pytest.raises(IntegrationError) as exc_info:
        service.integrate_classical(build_params(C, G, 1.13, 1.0), zeta_max=1.0, steps=64)
    assert 0.0 < exc_info.value.zeta <= 1.0
