"""Leading-order (bare-propagator) self-energies in closed form.

These are valid at any frequency, so they also serve as the off-window
tail model of interacting Green functions.
"""

from __future__ import annotations

import numpy as np

from ..model import MINUS, PLUS


def cooperativities(kappa, n0, g_tilde: float) -> tuple[float, float]:
    """Effective cooperativities ``(C-, C+)`` at the resonance frequencies."""
    km, kp = float(kappa[MINUS]), float(kappa[PLUS])
    nm, np_ = float(n0[MINUS]), float(n0[PLUS])
    g2 = g_tilde ** 2
    c_minus = 16.0 * g2 * (nm - np_) / (km * (km + kp))
    c_plus = 4.0 * g2 * (2.0 * nm + 1.0) / (km * kp)
    return c_minus, c_plus


def interaction_occupancies(n0) -> tuple[float, float]:
    """Occupancies ``(n_int-, n_int+)`` of the interaction-induced baths.

    ``n_int-`` is ``inf`` when ``n0- == n0+`` (its self-energy stays finite).
    """
    nm, np_ = float(n0[MINUS]), float(n0[PLUS])
    diff = nm - np_
    n_int_minus = np.inf if diff == 0.0 else np_ * (nm + 1.0) / diff
    return n_int_minus, nm ** 2 / (2.0 * nm + 1.0)


def leading_retarded(sigma: int, omega, energies, kappa, n0, g_tilde):
    omega = np.asarray(omega, dtype=float)
    km, kp = float(kappa[MINUS]), float(kappa[PLUS])
    nm, np_ = float(n0[MINUS]), float(n0[PLUS])
    g2 = g_tilde ** 2
    if sigma == MINUS:
        ks = km + kp
        return 4.0 * g2 * (nm - np_) / (omega - (energies[PLUS] - energies[MINUS]) + 0.5j * ks)
    return 2.0 * g2 * (2.0 * nm + 1.0) / (omega - 2.0 * energies[MINUS] + 1j * km)


def leading_keldysh(sigma: int, omega, energies, kappa, n0, g_tilde):
    """Keldysh self-energy from its regular product form (no ``n_int`` ratio)."""
    omega = np.asarray(omega, dtype=float)
    km, kp = float(kappa[MINUS]), float(kappa[PLUS])
    nm, np_ = float(n0[MINUS]), float(n0[PLUS])
    g2 = g_tilde ** 2
    if sigma == MINUS:
        ks = km + kp
        weight = (2.0 * np_ + 1.0) * (2.0 * nm + 1.0) - 1.0
        x = omega - (energies[PLUS] - energies[MINUS])
        return -2j * g2 * ks * weight / (x ** 2 + 0.25 * ks ** 2) + 0j
    weight = 2.0 * nm ** 2 + 2.0 * nm + 1.0
    x = omega - 2.0 * energies[MINUS]
    return -4j * g2 * km * weight / (x ** 2 + km ** 2) + 0j
