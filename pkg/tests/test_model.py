import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from omk.errors import DomainError, RegimeWarning
from omk.model import (MINUS, PLUS, SystemParams, bogoliubov_coefficients, bose,
                       critical_coupling, g_res, inverse_bose, linear_dissipation, linear_state,
                       linearized_hamiltonian_matrix, near_2wm_occupancy, nonlinear_couplings,
                       polariton_energies)

WM = 50.0


def red_sideband_closed_forms(wm, G):
    """Coefficients of the transformation at Delta = -wM written out by hand."""
    e = wm * np.sqrt(1.0 + np.array([-2.0, 2.0]) * G / wm)
    pre = 1.0 / (np.sqrt(8.0 * wm) * np.sqrt(e))
    sign = np.array([-1.0, 1.0])
    return {"energies": e, "alpha_b": sign * pre * (wm + e), "alpha_b_bar": sign * pre * (wm - e),
            "alpha_d": pre * (wm + e), "alpha_d_bar": pre * (wm - e)}


def stable_params(draw_detuning, draw_fraction, wm=WM, **kw):
    G = draw_fraction * critical_coupling(draw_detuning * wm, wm)
    return SystemParams(draw_detuning * wm, wm, G, **kw)


detunings = st.floats(-2.5, -0.3)
fractions = st.floats(0.0, 0.95)


# ---- energies and resonance ---------------------------------------------------

def test_red_sideband_resonance_energies(red_sideband):
    e_minus, e_plus = polariton_energies(red_sideband)
    assert red_sideband.many_photon_coupling / WM == pytest.approx(0.3, abs=1e-14)
    assert e_minus == pytest.approx(31.62, abs=0.01)
    assert e_plus == pytest.approx(63.25, abs=0.01)


def test_decoupled_modes_are_degenerate_at_red_sideband():
    e = polariton_energies(SystemParams(-WM, WM, 0.0))
    assert e == pytest.approx((WM, WM), abs=1e-12)


def test_resonant_energy_deep_red(deep_red):
    e_minus, e_plus = polariton_energies(deep_red)
    assert e_plus == pytest.approx(92.08, abs=0.01)
    assert e_plus == pytest.approx(2 * e_minus, rel=1e-10)


@pytest.mark.parametrize("detuning, expected", [(-WM, 0.3 * WM), (-2 * WM, 0.0), (-WM / 2, 0.0)])
def test_resonant_coupling_values(detuning, expected):
    assert g_res(detuning, WM) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("detuning", [-2.01 * WM, -0.49 * WM, -3 * WM])
def test_resonant_coupling_outside_range(detuning):
    with pytest.raises(DomainError):
        g_res(detuning, WM)


@given(st.floats(-2.0, -0.5))
def test_resonance_identity(x):
    p = SystemParams.at_resonance(x * WM, WM)
    e_minus, e_plus = polariton_energies(p)
    assert abs(e_plus - 2 * e_minus) <= 1e-9 * WM


@given(detunings)
def test_lower_energy_decreases_to_zero_at_threshold(x):
    gc = critical_coupling(x * WM, WM)
    gs = gc * np.array([0.0, 0.3, 0.6, 0.9, 0.99, 0.9999])
    e = [polariton_energies(SystemParams(x * WM, WM, G))[MINUS] for G in gs]
    assert np.all(np.diff(e) < 0)
    assert e[-1] < 0.05 * e[0]


def test_instability_rejected():
    gc = critical_coupling(-WM, WM)
    with pytest.raises(DomainError):
        SystemParams(-WM, WM, gc)
    with pytest.raises(DomainError):
        SystemParams(-WM, WM, 1.01 * gc)


@pytest.mark.parametrize("kwargs", [
    dict(detuning=10.0, mech_freq=WM, many_photon_coupling=1.0),
    dict(detuning=-WM, mech_freq=-1.0, many_photon_coupling=1.0),
    dict(detuning=-WM, mech_freq=WM, many_photon_coupling=1.0, mech_damping=0.0),
    dict(detuning=-WM, mech_freq=WM, many_photon_coupling=-1.0),
    dict(detuning=-WM, mech_freq=WM, many_photon_coupling=1.0, mech_bath_occupancy=-1.0),
    dict(detuning=-WM, mech_freq=WM, many_photon_coupling=math.nan),
    dict(detuning=-WM, mech_freq=WM, many_photon_coupling=1.0, mech_bath_model="ohmic"),
])
def test_parameter_validation(kwargs):
    with pytest.raises(DomainError):
        SystemParams(**kwargs)


# ---- Bogoliubov basis ---------------------------------------------------------

def test_red_sideband_coefficients(red_sideband):
    b = bogoliubov_coefficients(red_sideband)
    assert b.alpha_d[MINUS] == pytest.approx(0.7257, abs=1e-4)
    assert b.alpha_d_bar[MINUS] == pytest.approx(0.1634, abs=1e-4)
    assert b.alpha_d[PLUS] == pytest.approx(0.7120, abs=1e-4)
    assert b.alpha_d_bar[PLUS] == pytest.approx(-0.0833, abs=1e-4)


@pytest.mark.parametrize("fraction", [0.05, 0.3, 0.6, 0.9])
def test_generic_diagonalization_matches_red_sideband_closed_forms(fraction):
    G = fraction * critical_coupling(-WM, WM)
    b = bogoliubov_coefficients(SystemParams(-WM, WM, G))
    ref = red_sideband_closed_forms(WM, G)
    assert np.allclose(b.energies, ref["energies"], rtol=1e-12)
    for name in ("alpha_b", "alpha_b_bar", "alpha_d", "alpha_d_bar"):
        assert np.allclose(getattr(b, name), ref[name], atol=1e-10), name


def test_uncoupled_basis_is_pure():
    b = bogoliubov_coefficients(SystemParams(-WM, WM, 0.0))
    for arr in (b.alpha_b, b.alpha_d):
        assert set(np.round(np.abs(arr), 12)) <= {0.0, 1.0}
    assert np.all(b.alpha_b_bar == 0) and np.all(b.alpha_d_bar == 0)
    assert np.allclose(np.abs(b.alpha_b) + np.abs(b.alpha_d), 1.0)


@given(detunings, fractions)
def test_symplectic_normalization(x, f):
    b = bogoliubov_coefficients(stable_params(x, f))
    d_norm, b_norm = b.normalization_defects()
    assert abs(d_norm) < 1e-10 and abs(b_norm) < 1e-10
    assert 0 < b.energies[MINUS] <= b.energies[PLUS]


@given(detunings, fractions)
def test_hamiltonian_round_trip(x, f):
    p = stable_params(x, f)
    b = bogoliubov_coefficients(p)
    target = linearized_hamiltonian_matrix(p.detuning, p.mech_freq, p.many_photon_coupling)
    assert np.max(np.abs(b.hamiltonian_matrix() - target)) < 1e-10 * max(1.0, np.max(np.abs(target)))


# ---- nonlinear couplings ------------------------------------------------------

def test_resonant_nonlinear_coupling_value(red_sideband):
    b = bogoliubov_coefficients(red_sideband)
    assert b.g_tilde == pytest.approx(-0.3728, abs=1e-4)


def test_simplified_red_sideband_expression_is_a_known_discrepancy(red_sideband):
    # the compact closed form disagrees with the coefficient product; the product wins
    b = bogoliubov_coefficients(red_sideband)
    e_minus, e_plus = b.energies
    y = red_sideband.many_photon_coupling / WM
    compact = -(1 / (4 * math.sqrt(2))) * (WM / e_plus) ** 0.75 * \
        ((1 + 2 * y) * e_minus + (1 - y) * e_plus) / e_minus
    assert compact == pytest.approx(-0.4446, abs=1e-4)
    assert abs(compact - b.g_tilde) > 0.05


def test_couplings_scale_with_single_photon_coupling(red_sideband):
    b = bogoliubov_coefficients(red_sideband)
    zero = nonlinear_couplings(b, 0.0)
    assert zero.g_tilde == 0.0 and zero.linear_terms == (0.0, 0.0) and zero.g_a_sum == 0.0
    two = nonlinear_couplings(b, 2.0)
    assert two.g_tilde == pytest.approx(2 * b.g_tilde, rel=1e-14)


def test_nonlinear_coupling_vanishes_at_two_phonon_point():
    b = bogoliubov_coefficients(SystemParams.at_resonance(-2 * WM, WM, single_photon_coupling=1.0))
    assert b.g_tilde == pytest.approx(0.0, abs=1e-14)


# ---- dissipation ----------------------------------------------------------------

def test_red_sideband_dissipation(red_sideband):
    _, d = linear_state(red_sideband)
    assert d.kappa == pytest.approx([0.500, 0.500], abs=1e-3)
    assert d.n0 == pytest.approx([0.0534, 0.0139], abs=1e-4)
    assert np.allclose(d.kappa, d.kappa_mech + d.kappa_cav, rtol=1e-14)


def test_red_sideband_cavity_heating_closed_form(red_sideband):
    # at Delta = -wM the cavity-bath occupancy is a ratio of the squared coefficients
    _, d = linear_state(red_sideband)
    ref = red_sideband_closed_forms(WM, red_sideband.many_photon_coupling)
    expected = ref["alpha_d_bar"] ** 2 / (ref["alpha_d"] ** 2 - ref["alpha_d_bar"] ** 2)
    assert np.allclose(d.n_cav, expected, rtol=1e-10)
    assert np.allclose(bose(d.energies, d.t_cav), d.n_cav, rtol=1e-10)


def test_no_heating_without_drive():
    _, d = linear_state(SystemParams(-WM, WM, 1e-9))
    assert np.all(d.n0 < 1e-18)


@given(detunings, fractions, st.floats(0.0, 1e3), st.sampled_from(["flat", "bose"]))
def test_occupancy_between_bath_occupancies(x, f, n_th, model):
    p = stable_params(x, f, mech_bath_occupancy=n_th, mech_bath_model=model)
    _, d = linear_state(p)
    assert np.all(d.kappa > 0)
    lo = np.minimum(d.n_mech, d.n_cav) - 1e-12
    hi = np.maximum(d.n_mech, d.n_cav) + 1e-12
    assert np.all((lo <= d.n0) & (d.n0 <= hi))


@given(detunings, fractions, st.floats(0.0, 100.0))
def test_no_anomalous_mixing_means_thermal_baths(x, f, n_th):
    # with the anomalous coefficients removed the cavity bath is at zero temperature
    p = stable_params(x, f, mech_bath_occupancy=n_th, mech_bath_model="bose")
    b = bogoliubov_coefficients(p)
    b = replace(b, alpha_d_bar=np.zeros(2), alpha_b_bar=np.zeros(2))
    d = linear_dissipation(p, b)
    assert np.all(d.n_cav == 0)
    n_mech = bose(b.energies, p.mech_temperature)
    assert np.allclose(d.n0, d.kappa_mech * n_mech / d.kappa, rtol=1e-12, atol=1e-300)


def test_pure_phonon_branch_sits_at_mechanical_temperature():
    p = SystemParams(-2 * WM, WM, 0.0, mech_bath_occupancy=5.0, mech_bath_model="bose")
    b, d = linear_state(p)
    phonon = int(np.argmax(np.abs(b.alpha_b)))
    assert d.n0[phonon] == pytest.approx(bose(b.energies[phonon], p.mech_temperature), rel=1e-12)
    assert d.n0[phonon] == pytest.approx(5.0, rel=1e-12)


def test_cavity_temperature_near_threshold():
    gc = critical_coupling(-WM, WM)
    _, d = linear_state(SystemParams(-WM, WM, 0.99999 * gc))
    assert d.t_cav[MINUS] == pytest.approx(WM / 4, rel=0.02)


# ---- near -2 wM asymptotics ---------------------------------------------------------

def test_near_2wm_formula_example():
    p = SystemParams(-2 * WM + 0.1, WM, 1e-2 * WM, mech_damping=1e-4)
    assert near_2wm_occupancy(p) == pytest.approx((1e-4 / 9) / (1e-4 + 8e-4 / 9), rel=1e-12)
    assert near_2wm_occupancy(p) == pytest.approx(0.0588, abs=1e-4)


def test_near_2wm_formula_optimum_value():
    gamma = 1e-4
    G = WM * math.sqrt(9 / 16 * gamma)
    p = SystemParams(-2 * WM + 1e-3, WM, G, mech_damping=gamma)
    # substituting the optimum gives 1/24 (the value quoted as the maximum differs)
    assert near_2wm_occupancy(p) == pytest.approx(1 / 24, rel=1e-12)


def test_near_2wm_formula_vanishes_without_drive():
    p = SystemParams(-2 * WM + 0.1, WM, 0.0)
    assert near_2wm_occupancy(p) == 0.0


@pytest.mark.parametrize("y2", [1e-3, 3e-3, 1e-2])
def test_near_2wm_formula_agrees_with_full_dissipation(y2):
    gamma = 1e-4
    G = WM * math.sqrt(y2)
    # resonant detuning for this drive on the branch next to -2 wM
    delta = brentq(lambda d: g_res(d, WM) - G, -2 * WM, -1.9 * WM)
    p = SystemParams(delta, WM, G, mech_damping=gamma)
    _, d = linear_state(p)
    assert near_2wm_occupancy(p) == pytest.approx(d.n0[MINUS], rel=0.05)


def test_near_2wm_formula_warns_outside_regime(red_sideband):
    with pytest.warns(RegimeWarning):
        near_2wm_occupancy(red_sideband)


# ---- Bose helpers --------------------------------------------------------------------

def test_inverse_bose_edges():
    assert inverse_bose(0.0, 3.0) == (0.0, False)
    t, capped = inverse_bose(1e9, 3.0)
    assert capped and t == pytest.approx(3.0 / math.log1p(1e-6))
    assert math.isnan(inverse_bose(-1.0, 3.0)[0])


@given(st.floats(1e-3, 1e5), st.floats(1e-2, 1e3))
def test_bose_round_trip(n, e):
    t, capped = inverse_bose(n, e)
    assert not capped
    assert bose(e, t) == pytest.approx(n, rel=1e-9)


def test_no_warning_inside_regime():
    p = SystemParams(-2 * WM + 0.1, WM, 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        near_2wm_occupancy(p)
