import math

import numpy as np
import pytest

from omk.errors import PoleError, WindowError
from omk.keldysh import (SelfEnergySet, bare_green, bubble_self_energy, cooperativities,
                         distribution_function, dyson_solve, hilbert_real_part,
                         instability_report, interaction_occupancies, leading_self_energy,
                         make_windows, narrowest_linewidth, paramp_occupancy, polariton_dos,
                         pumped_paramp_occupancy, resonance_profiles, retarded_time_domain,
                         self_consistent_solve, total_occupancy, two_bath_average, windows_for)
from omk.model import MINUS, PLUS, SystemParams, bose, linear_state


def sup_rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.fixture(scope="module")
def red_state(red_sideband):
    basis, diss = linear_state(red_sideband)
    wins = windows_for(basis, diss)
    return basis, diss, wins


def lattice_index(window, energy):
    return int(np.argmin(np.abs(window.omega - energy)))


# ---- windows ----------------------------------------------------------------------

def test_default_windows(red_state):
    basis, diss, wins = red_state
    c_minus, c_plus = cooperativities(diss.kappa, diss.n0, basis.g_tilde)
    for w in wins:
        assert w.n_points >= 2 ** 12 and w.n_points & (w.n_points - 1) == 0
        assert w.spacing <= narrowest_linewidth(diss.kappa, c_plus, c_minus) / 20 * (1 + 1e-12)
        assert w.half_width >= 40 * diss.kappa.sum() - w.spacing
        assert np.allclose(np.diff(w.omega), w.spacing, rtol=1e-9)
    assert wins[MINUS].contains(basis.energies[MINUS]) and wins[PLUS].contains(basis.energies[PLUS])


def test_window_point_budget():
    with pytest.raises(WindowError):
        make_windows([1.0, 2.0], np.array([1e-6, 1e-6]), half_width=10.0)


# ---- bare propagators ---------------------------------------------------------------

def test_bare_on_peak_and_peak_dos(red_state):
    basis, diss, wins = red_state
    g = bare_green(basis, diss, wins)
    for s in (MINUS, PLUS):
        on_peak = g.tail.retarded(s, np.array([basis.energies[s]]))[0]
        assert on_peak == pytest.approx(-2j / diss.kappa[s], rel=1e-12)
        w = wins[s].omega[lattice_index(wins[s], basis.energies[s])]
        r, _ = g.evaluate(s, [w])
        assert r[0] == pytest.approx(1 / (w - basis.energies[s] + 0.5j * diss.kappa[s]), rel=1e-12)
        assert polariton_dos(g)[s].max() == pytest.approx(2 / (math.pi * diss.kappa[s]), rel=5e-3)
    assert 2 / (math.pi * diss.kappa[MINUS]) == pytest.approx(1.273, abs=1e-3)


def test_bare_keldysh_with_empty_baths(red_state):
    basis, diss, wins = red_state
    g = bare_green(basis, diss.with_occupancies([0.0, 0.0]), wins)
    for s in (MINUS, PLUS):
        np.testing.assert_allclose(g.keldysh[s], 2j * g.retarded[s].imag, rtol=1e-12, atol=0)


def test_green_function_invariants(red_state):
    basis, diss, wins = red_state
    g, _, _ = self_consistent_solve(basis, diss, basis.g_tilde, wins, n_iter=5)
    for s in (MINUS, PLUS):
        assert np.array_equal(g.advanced[s], np.conj(g.retarded[s]))
        assert np.all(g.retarded[s].imag <= 0)
        assert np.all(g.keldysh[s].real == 0)
        assert np.all(g.keldysh[s].imag <= 2 * g.retarded[s].imag + 1e-12)


def test_bare_dos_sum_rule(red_state):
    basis, diss, wins = red_state
    g = bare_green(basis, diss, wins)
    for s in (MINUS, PLUS):
        total = polariton_dos(g)[s].sum() * wins[s].spacing
        w = wins[s]
        expected = (math.atan((w.omega[-1] - basis.energies[s]) * 2 / diss.kappa[s])
                    - math.atan((w.omega[0] - basis.energies[s]) * 2 / diss.kappa[s])) / math.pi
        assert total == pytest.approx(1.0, abs=0.01)
        assert total == pytest.approx(expected, abs=1e-3)


# ---- leading order --------------------------------------------------------------------

def test_cooperativity_examples(red_sideband, deep_red, hot_blue_edge):
    for p, ref in ((red_sideband, (0.18, 2.46)), (deep_red, (1.92, 5.40)),
                   (hot_blue_edge, (-0.97, 0.75))):
        basis, diss = linear_state(p)
        c = cooperativities(diss.kappa, diss.n0, basis.g_tilde)
        assert c == pytest.approx(ref, abs=0.01)


def test_interaction_bath_occupancies(red_state):
    _, diss, _ = red_state
    n_minus, n_plus = interaction_occupancies(diss.n0)
    assert n_minus == pytest.approx(0.370, abs=1e-3)
    assert n_plus == pytest.approx(0.00258, abs=1e-5)


def test_interaction_occupancy_diverges_at_equal_baths():
    n_minus, n_plus = interaction_occupancies([0.2, 0.2])
    assert math.isinf(n_minus)
    assert n_plus == pytest.approx(0.04 / 1.4)


def test_zero_coupling_gives_zero_self_energy(red_state):
    basis, diss, wins = red_state
    for sig in (leading_self_energy(basis, diss, 0.0, wins),
                bubble_self_energy(bare_green(basis, diss, wins), 0.0)):
        for s in (MINUS, PLUS):
            assert not np.any(sig.retarded[s]) and not np.any(sig.keldysh[s])
    assert cooperativities(diss.kappa, diss.n0, 0.0) == (0.0, 0.0)


def test_leading_keldysh_finite_at_equal_baths(red_state):
    basis, diss, wins = red_state
    sig = leading_self_energy(basis, diss.with_occupancies([0.1, 0.1]), basis.g_tilde, wins)
    assert np.all(np.isfinite(sig.keldysh[MINUS]))
    assert np.allclose(sig.retarded[MINUS], 0.0)
    assert np.all(sig.n_int(MINUS).mask)


def test_bubble_reduces_to_closed_forms_and_flat_bath(red_state):
    basis, diss, wins = red_state
    bub = bubble_self_energy(bare_green(basis, diss, wins), basis.g_tilde)
    lead = leading_self_energy(basis, diss, basis.g_tilde, wins)
    n_int = interaction_occupancies(diss.n0)
    for s in (MINUS, PLUS):
        assert sup_rel(bub.retarded[s], lead.retarded[s]) < 1e-3
        assert sup_rel(bub.keldysh[s], lead.keldysh[s]) < 1e-3
        # frequency-independent bath occupancy where the damping is appreciable
        strong = bub.gamma_int(s) > 1e-3 * bub.gamma_int(s).max()
        assert np.max(np.abs(bub.n_int(s)[strong] - n_int[s])) < 1e-6


def test_thermal_fixed_point(red_state):
    basis, diss, wins = red_state
    t = 8.0
    thermal = diss.with_occupancies(bose(basis.energies, t))
    n_int = interaction_occupancies(thermal.n0)
    assert n_int == pytest.approx(tuple(thermal.n0), rel=1e-12)
    bub = bubble_self_energy(bare_green(basis, thermal, wins), basis.g_tilde)
    for s in (MINUS, PLUS):
        strong = bub.gamma_int(s) > 1e-3 * bub.gamma_int(s).max()
        assert np.max(np.abs(bub.n_int(s)[strong] - thermal.n0[s])) < 1e-6


def test_kramers_kronig_on_bubble(red_state):
    basis, diss, wins = red_state
    bub = bubble_self_energy(bare_green(basis, diss, wins), basis.g_tilde)
    for s in (MINUS, PLUS):
        re = hilbert_real_part(bub.retarded[s].imag, wins[s])
        n = wins[s].n_points
        core = slice(n // 4, 3 * n // 4)
        err = np.max(np.abs(re[core] - bub.retarded[s].real[core]))
        assert err < 0.01 * np.max(np.abs(bub.retarded[s]))


def test_window_too_narrow_for_image():
    p = SystemParams(-50.0, 50.0, 12.0, single_photon_coupling=1.0)
    basis, diss = linear_state(p)
    wins = windows_for(basis, diss, spacing=0.001, half_width=2.0)
    with pytest.raises(WindowError):
        bubble_self_energy(bare_green(basis, diss, wins), basis.g_tilde)


# ---- Dyson ------------------------------------------------------------------------------

def test_dyson_identity(red_state):
    basis, diss, wins = red_state
    bare = bare_green(basis, diss, wins)
    out = dyson_solve(bare, SelfEnergySet.zeros(wins))
    for s in (MINUS, PLUS):
        assert np.allclose(out.retarded[s], bare.retarded[s], rtol=1e-13)
        assert np.allclose(out.keldysh[s], bare.keldysh[s], rtol=1e-12)


def test_dyson_pole_on_grid(red_state):
    basis, diss, wins = red_state
    bare = bare_green(basis, diss, wins)
    sig = SelfEnergySet(wins, tuple(1 / r for r in bare.retarded),
                        tuple(np.zeros(w.n_points, complex) for w in wins))
    with pytest.raises(PoleError):
        dyson_solve(bare, sig)


def test_upper_dos_splits(red_state):
    basis, diss, wins = red_state
    g = dyson_solve(bare_green(basis, diss, wins), leading_self_energy(basis, diss, basis.g_tilde, wins))
    rho = polariton_dos(g)[PLUS]
    inner = (rho[1:-1] > rho[:-2]) & (rho[1:-1] > rho[2:]) & (rho[1:-1] > 0.1 * rho.max())
    peaks = wins[PLUS].omega[1:-1][inner]
    assert len(peaks) == 2
    assert peaks[0] < basis.energies[PLUS] < peaks[1]


@pytest.mark.parametrize("which", ["red_sideband", "hot_blue_edge"])
def test_total_damping_at_resonance(which, request):
    basis, diss = linear_state(request.getfixturevalue(which))
    wins = windows_for(basis, diss)
    c_minus, _ = cooperativities(diss.kappa, diss.n0, basis.g_tilde)
    sig = leading_self_energy(basis, diss, basis.g_tilde, wins)
    g = dyson_solve(bare_green(basis, diss, wins), sig)
    i = lattice_index(wins[MINUS], basis.energies[MINUS])
    damping = 2 * (1 / g.retarded[MINUS][i]).imag
    # lattice point sits within h/2 of E-, where the bubble resonance is flat to O(h^2)
    assert damping == pytest.approx(diss.kappa[MINUS] * (1 + c_minus), rel=1e-4)
    assert instability_report(diss, basis.g_tilde).total_damping_minus == \
        pytest.approx(diss.kappa[MINUS] * (1 + c_minus), rel=1e-14)


def test_leading_distribution_is_two_bath_average(red_state):
    basis, diss, wins = red_state
    sig = leading_self_energy(basis, diss, basis.g_tilde, wins)
    g = dyson_solve(bare_green(basis, diss, wins), sig)
    for s, n_eff in zip((MINUS, PLUS), distribution_function(g)):
        ref = two_bath_average(sig.gamma_int(s), sig.n_int(s).filled(0.0), diss.kappa[s], diss.n0[s])
        assert np.max(np.abs(n_eff - ref)) < 1e-8


def test_leading_distribution_values(red_state):
    basis, diss, wins = red_state
    g = dyson_solve(bare_green(basis, diss, wins), leading_self_energy(basis, diss, basis.g_tilde, wins))
    dist = distribution_function(g)
    n_minus = dist[MINUS][lattice_index(wins[MINUS], basis.energies[MINUS])]
    n_plus = dist[PLUS][lattice_index(wins[PLUS], basis.energies[PLUS])]
    assert n_minus == pytest.approx(0.101, abs=1e-3)
    assert n_plus == pytest.approx(0.0058, abs=2e-4)
    prof = resonance_profiles(basis.energies, diss, basis.g_tilde)
    assert prof[MINUS](prof[MINUS].center) == pytest.approx(n_minus, rel=1e-3)
    assert prof[PLUS](prof[PLUS].center) == pytest.approx(n_plus, rel=1e-3)


def test_zero_coupling_distribution_is_flat(red_state):
    basis, diss, wins = red_state
    g, _, rep = self_consistent_solve(basis, diss, 0.0, wins)
    assert rep.iterations == 1 and rep.converged
    for s, n_eff in zip((MINUS, PLUS), distribution_function(g)):
        assert np.allclose(n_eff, diss.n0[s], rtol=1e-8, atol=1e-12)


# ---- self-consistency ----------------------------------------------------------------

@pytest.fixture(scope="module")
def red_solution(red_state):
    basis, diss, wins = red_state
    return self_consistent_solve(basis, diss, basis.g_tilde, wins)


def test_self_consistent_report(red_solution):
    g, sig, rep = red_solution
    assert rep.iterations == 20 and len(rep.deltas) == 20
    assert rep.deltas[-1] < 1e-6
    assert rep.deltas[-1] < rep.deltas[2]
    assert not rep.flags.get("unstable")
    assert rep.as_dict()["status"] in ("converged", "not_converged")


def test_self_consistent_positivity(red_solution):
    g, _, _ = red_solution
    for n_eff in distribution_function(g):
        assert np.ma.min(n_eff) >= -1e-9


def test_self_consistent_causality(red_solution):
    g, _, _ = red_solution
    for s in (MINUS, PLUS):
        t, gt = retarded_time_domain(g, s)
        peak = np.max(np.abs(gt))
        assert np.max(np.abs(gt[t < 0])) < 2e-5 * peak


def test_self_consistent_occupancies(red_solution):
    g, _, _ = red_solution
    assert total_occupancy(g, MINUS) == pytest.approx(0.0632, abs=1e-3)
    assert total_occupancy(g, PLUS) == pytest.approx(0.00895, abs=1e-4)


def test_mixing_validation(red_state):
    basis, diss, wins = red_state
    with pytest.raises(ValueError):
        self_consistent_solve(basis, diss, basis.g_tilde, wins, mixing=0.0)


# ---- instability -------------------------------------------------------------------

def test_paramp_occupancy_at_half_threshold():
    kappa_minus, g_tilde = 0.5, 0.3
    n_plus = kappa_minus ** 2 / 2 / (16 * g_tilde ** 2)
    assert paramp_occupancy(g_tilde, kappa_minus, n_plus) == pytest.approx(1.0, rel=1e-14)
    assert pumped_paramp_occupancy(g_tilde, kappa_minus, n_plus) == pytest.approx(1.0, rel=1e-14)


def test_no_inversion_no_instability(red_state):
    basis, diss, _ = red_state
    rep = instability_report(diss, basis.g_tilde)
    assert rep.c_minus > 0 and not rep.occupancy_inverted
    assert not rep.unstable and not rep.near_threshold
    assert rep.threshold_occupancy == pytest.approx(diss.kappa[MINUS] ** 2 / (16 * basis.g_tilde ** 2))


def test_hot_bath_near_threshold(hot_blue_edge):
    basis, diss = linear_state(hot_blue_edge)
    rep = instability_report(diss, basis.g_tilde)
    assert rep.c_minus == pytest.approx(-0.97, abs=0.01)
    assert rep.occupancy_inverted and rep.near_threshold and not rep.unstable
    assert rep.n_eff_minus_resonance == pytest.approx(49.4, abs=0.1)


def test_beyond_threshold_reported_unstable(hot_blue_edge):
    basis, diss = linear_state(hot_blue_edge.with_(mech_bath_occupancy=800.0))
    rep = instability_report(diss, basis.g_tilde)
    assert rep.unstable and math.isinf(rep.n_eff_minus_resonance)
