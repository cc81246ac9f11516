"""Unit tests for parameters, initial conditions and the drift matrix."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from coupler.exceptions import DomainError, LinearizationError
from coupler.models.modes import FULL_ORDERING, ModeOrdering, hamiltonian_defect, symplectic_form
from coupler.services.model_service import (
    build_params,
    classical_rhs,
    drift_from_amplitudes,
    drift_matrix,
    initial_amplitudes,
    initial_state,
)

C, G = 0.08, 0.0025


def random_amplitudes(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    return a / np.linalg.norm(a)


def test_total_power_and_length_scale():
    """Test P and the mm-per-zeta factor for the PPLN constants."""
    p = build_params(C, G, 1.13, 1.0)
    assert p.total_power_P == pytest.approx(400.97, abs=0.01)
    assert p.z_per_zeta == pytest.approx(14.125)
    assert p.z_of_zeta(1.0) == pytest.approx(14.125)
    assert p.zeta_of_z(28.25) == pytest.approx(2.0)
    assert build_params(C, G, 2.26, 1.0).z_per_zeta == pytest.approx(28.25)


def test_input_powers_follow_ratio():
    """Test per-waveguide input powers split P/2 by the ratio."""
    p = build_params(C, G, 1.13, 0.25)
    assert p.signal_power_mw / p.pump_power_mw == pytest.approx(0.25)
    assert p.signal_power_mw + p.pump_power_mw == pytest.approx(p.total_power_P / 2.0)


def test_input_powers_match_normalized_amplitudes():
    """Test |alpha_s|^2 = P u_s^2 and 2|alpha_p|^2 = P u_p^2 at the input."""
    p = build_params(C, G, 1.13, 1.0)
    a = initial_amplitudes(p.power_ratio, p.input_phases)
    assert p.signal_power_mw == pytest.approx(p.total_power_P * abs(a[0]) ** 2)
    assert p.pump_power_mw == pytest.approx(p.total_power_P * abs(a[1]) ** 2)
    assert p.signal_power_mw == pytest.approx(p.total_power_P / 4.0)


def test_delta0():
    """Test delta0 = arcsinh(sqrt(P_p/P_s))."""
    assert build_params(C, G, 1.13, 1.0).delta0 == pytest.approx(math.asinh(1.0))
    assert math.isinf(build_params(C, G, 1.13, 0.0).delta0)
    d = build_params(C, G, 1.13, 0.25).delta0
    assert 1.0 / math.cosh(d) ** 2 == pytest.approx(0.25 / 1.25)


def test_kappa_at_or_below_one_rejected():
    """Test that kappa <= 1 raises a linearization error."""
    with pytest.raises(LinearizationError):
        build_params(C, G, 0.9, 1.0)
    with pytest.raises(LinearizationError):
        build_params(C, G, 1.0, 1.0)


@pytest.mark.parametrize(
    "c, g, ratio",
    [(0.0, G, 1.0), (C, -1.0, 1.0), (C, G, -0.5), (float("nan"), G, 1.0), (C, G, float("inf"))],
)
def test_invalid_constants_rejected(c, g, ratio):
    """Test non-positive or non-finite constants."""
    with pytest.raises(DomainError):
        build_params(c, g, 1.13, ratio)


def test_phases_must_be_four():
    """Test malformed input phases."""
    with pytest.raises(DomainError):
        build_params(C, G, 1.13, 1.0, phases=(0.0, 0.0, 0.0))


def test_initial_amplitudes_equal_powers():
    """Test equal per-waveguide inputs summing to one."""
    a = initial_amplitudes(1.0, (0.0, 0.0, 0.0, 0.0))
    np.testing.assert_allclose(np.abs(a) ** 2, [0.25, 0.25, 0.25, 0.25])

    a = initial_amplitudes(0.0, (0.0, 0.0, 0.0, 0.0))
    np.testing.assert_allclose(np.abs(a) ** 2, [0.0, 0.5, 0.0, 0.5])


def test_initial_state_phases():
    """Test input phases end up on the right amplitudes."""
    state = initial_state(build_params(C, G, 1.13, 1.0, phases=(0.1, 0.2, 0.3, 0.4)))
    assert state.theta_s == pytest.approx(0.1)
    assert state.theta_p == pytest.approx(0.2)
    assert state.phi_s == pytest.approx(0.3)
    assert state.phi_p == pytest.approx(0.4)
    assert state.conserved_sum == pytest.approx(1.0)


def test_classical_rhs_conserves_power():
    """Test d/dzeta of sum |a|^2 vanishes for arbitrary fields."""
    for seed in range(5):
        a = random_amplitudes(seed)
        d = classical_rhs(a, 1.7)
        assert abs(np.sum(np.conj(a) * d).real) < 1e-15


def test_linear_coupler_rhs():
    """Test nonlinear=False keeps only the evanescent exchange."""
    a = random_amplitudes(3)
    d = classical_rhs(a, 2.0, nonlinear=False)
    np.testing.assert_allclose(d, [2j * a[2], 0.0, 2j * a[0], 0.0])


def test_drift_is_hamiltonian():
    """Test Delta Omega + Omega Delta^T = 0 for arbitrary classical fields."""
    for seed in range(10):
        drift = drift_from_amplitudes(random_amplitudes(seed), 1.13)
        assert hamiltonian_defect(drift) < 1e-14


def test_drift_coupling_entries():
    """Test the kappa entries couple each signal to the other waveguide's signal."""
    o = FULL_ORDERING
    drift = drift_from_amplitudes(np.zeros(4, dtype=complex), 1.5)
    assert drift[o.x("sA"), o.y("sB")] == -1.5
    assert drift[o.y("sA"), o.x("sB")] == 1.5
    assert drift[o.x("sB"), o.y("sA")] == -1.5
    assert drift[o.y("sB"), o.x("sA")] == 1.5
    assert np.count_nonzero(drift) == 4


def test_drift_matrix_read_only():
    """Test the drift matrix cannot be modified."""
    state = initial_state(build_params(C, G, 1.13, 1.0))
    drift = drift_matrix(state, 1.13)
    with pytest.raises(ValueError):
        drift[0, 0] = 1.0


def test_drift_regular_at_zero_signal():
    """Test pure down-conversion inputs give a finite drift."""
    state = initial_state(build_params(C, G, 1.13, 0.0))
    drift = drift_matrix(state, 1.13)
    assert np.all(np.isfinite(drift))
    o = FULL_ORDERING
    assert drift[o.x("sA"), o.y("sA")] == pytest.approx(1.0 / math.sqrt(2.0))


def test_mode_ordering_indices():
    """Test quadrature labels and reduced orderings."""
    o = FULL_ORDERING
    assert o.index("XsA") == 0
    assert o.index("YpB") == 7
    assert o.labels()[:4] == ["XsA", "YsA", "XpA", "YpA"]

    sub = ModeOrdering(modes=("sB", "sA"))
    assert sub.modes == ("sA", "sB")
    assert sub.index("YsB") == 3
    assert o.indices(["sB", "sA"]) == [0, 1, 4, 5]


def test_mode_ordering_rejects_bad_modes():
    """Test unknown or duplicate modes."""
    with pytest.raises(ValidationError):
        ModeOrdering(modes=("sA", "qA"))
    with pytest.raises(ValidationError):
        ModeOrdering(modes=("sA", "sA"))
    with pytest.raises(DomainError):
        ModeOrdering(modes=("sA",)).x("pB")


def test_symplectic_form():
    """Test Omega is antisymmetric with Omega^2 = -1."""
    omega = symplectic_form(4)
    np.testing.assert_array_equal(omega, -omega.T)
    np.testing.assert_array_equal(omega @ omega, -np.eye(8))
