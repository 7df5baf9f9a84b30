"""Keldysh Green-function machinery for the two interacting polaritons."""

from .analysis import (InstabilityReport, ResonanceProfile, distribution_function,
                       hilbert_real_part, instability_report, occupancy_from_keldysh,
                       paramp_occupancy, polariton_dos, pumped_paramp_occupancy,
                       resonance_profiles, retarded_time_domain, total_occupancy,
                       two_bath_average)
from .closed_forms import cooperativities, interaction_occupancies
from .greens import GreenFunctionSet, TailModel, bare_green
from .selfenergy import SelfEnergySet, bubble_self_energy, leading_self_energy
from .solver import ConvergenceReport, dyson_solve, self_consistent_solve
from .windows import FrequencyWindow, make_windows, narrowest_linewidth

__all__ = [
    "ConvergenceReport", "FrequencyWindow", "GreenFunctionSet", "InstabilityReport",
    "ResonanceProfile", "SelfEnergySet", "TailModel", "bare_green", "bubble_self_energy",
    "cooperativities", "distribution_function", "dyson_solve", "hilbert_real_part",
    "instability_report", "interaction_occupancies", "leading_self_energy", "make_windows",
    "narrowest_linewidth", "occupancy_from_keldysh", "paramp_occupancy", "polariton_dos",
    "pumped_paramp_occupancy", "resonance_profiles", "retarded_time_domain",
    "self_consistent_solve", "total_occupancy", "two_bath_average", "windows_for",
]


def windows_for(basis, dissipation, g_tilde=None, **overrides):
    """Default windows for a parameter point (uses leading-order widths)."""
    g_tilde = basis.g_tilde if g_tilde is None else g_tilde
    c_minus, c_plus = cooperativities(dissipation.kappa, dissipation.n0, g_tilde)
    return make_windows(basis.energies, dissipation.kappa, c_plus=c_plus, c_minus=c_minus,
                        **overrides)
