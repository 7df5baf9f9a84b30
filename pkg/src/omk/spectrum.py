"""Cavity-frame observables built from polariton Green functions.

Frequencies are measured in the frame rotating at the drive, so the
polariton resonances sit at ``omega = +E_s`` and their anomalous images at
``-E_s``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BandError, RegimeWarning
from .keldysh.closed_forms import cooperativities
from .keldysh.greens import GreenFunctionSet
from .model import (MINUS, PLUS, PolaritonBasis, SystemParams, inverse_bose, linear_state,
                    polariton_energies)

RHO_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Photon spectrum, DOS, distribution and effective temperature on ``omega``.

    ``mask`` marks frequencies where the cavity DOS is not positive enough
    to define an occupancy; ``n_eff_d`` and ``t_eff_d`` are NaN there.
    """

    omega: np.ndarray
    s_d: np.ndarray
    rho_d: np.ndarray
    n_eff_d: np.ndarray
    t_eff_d: np.ndarray
    mask: np.ndarray
    t_eff_capped: np.ndarray


def _weighted(g: GreenFunctionSet, sigma: int, omega):
    # n_eff * rho and (n_eff + 1) * rho directly from G^R, G^K (no division)
    r, k = g.evaluate(sigma, omega)
    rho = -r.imag / np.pi
    n_rho = -k.imag / (4.0 * np.pi) + r.imag / (2.0 * np.pi)
    return rho, n_rho, n_rho + rho


def default_grid(g: GreenFunctionSet) -> np.ndarray:
    idx = np.union1d(g.windows[MINUS].indices, g.windows[PLUS].indices)
    return idx * g.spacing


def cavity_spectrum(basis: PolaritonBasis, g: GreenFunctionSet, omega=None,
                    rho_floor: float = RHO_FLOOR) -> SpectrumResult:
    """Normal-ordered cavity output spectrum and derived quantities."""
    omega = default_grid(g) if omega is None else np.asarray(omega, dtype=float)
    s_d = np.zeros(omega.shape)
    rho_d = np.zeros(omega.shape)
    for s in (MINUS, PLUS):
        a2, abar2 = basis.alpha_d[s] ** 2, basis.alpha_d_bar[s] ** 2
        rho_pos, n_rho_pos, _ = _weighted(g, s, omega)
        rho_neg, _, np1_rho_neg = _weighted(g, s, -omega)
        s_d += 2.0 * np.pi * (a2 * n_rho_pos + abar2 * np1_rho_neg)
        rho_d += a2 * rho_pos - abar2 * rho_neg
    scale = max(float(np.max(np.abs(rho_d))), np.finfo(float).tiny)
    mask = rho_d <= rho_floor * scale
    n_eff = np.where(mask, np.nan, s_d / (2.0 * np.pi * np.where(mask, 1.0, rho_d)))
    t_eff, capped = inverse_bose(np.where(mask, 0.0, n_eff), omega)
    t_eff = np.where(mask, np.nan, t_eff)
    return SpectrumResult(omega, s_d, rho_d, n_eff, np.asarray(t_eff), mask,
                          np.asarray(capped) & ~mask)


def integrated_flux(result: SpectrumResult, omega0: float, half_width: float = 5.0) -> float:
    """Photon number emitted within ``[omega0 - half_width, omega0 + half_width]``.

    Trapezoid rule on the spectrum grid, with the band edges interpolated.
    """
    w, s = result.omega, result.s_d
    lo, hi = omega0 - half_width, omega0 + half_width
    if lo < w[0] or hi > w[-1]:
        raise BandError(f"band [{lo:.6g}, {hi:.6g}] not inside grid [{w[0]:.6g}, {w[-1]:.6g}]")
    inner = (w > lo) & (w < hi)
    x = np.concatenate(([lo], w[inner], [hi]))
    y = np.concatenate(([np.interp(lo, w, s)], s[inner], [np.interp(hi, w, s)]))
    return float(np.trapezoid(y, x) / (2.0 * np.pi))


def red_sideband_flux(coupling: float, mech_freq: float) -> tuple[float, float]:
    """Linearized photon flux of each branch for ``Delta = -wM`` at zero temperature."""
    r = coupling / mech_freq
    return (0.125 * r ** 2 / (1.0 - 2.0 * r), 0.125 * r ** 2 / (1.0 + 2.0 * r))


@dataclass(frozen=True)
class TwoPhononPeak:
    """Lorentzian emission line at ``E+`` produced by two-phonon absorption."""

    center: float
    width: float
    height: float
    gamma_opt: float

    @property
    def weight(self) -> float:
        """Integral over frequency of the line."""
        return math.pi * self.width * self.height

    def __call__(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        return self.height * self.width ** 2 / (x ** 2 + self.width ** 2)


def two_phonon_peak(params: SystemParams, include_optical_damping: bool = True,
                    warn: bool = True) -> TwoPhononPeak:
    """Lowest-order spectrum near ``E+`` for ``Delta`` close to ``-2 wM``.

    With ``include_optical_damping=False`` the optical damping ``Gamma_opt``
    is dropped from both the width and the height, which is the form that
    compares with the classical calculation.
    """
    k, gam = params.cavity_damping, params.mech_damping
    y = (params.many_photon_coupling / params.mech_freq) ** 2
    n = params.mech_bath_occupancy
    gamma_opt = 8.0 / 9.0 * y * k
    if warn:
        _check_two_phonon_regime(params)
    x = gamma_opt / gam if include_optical_damping else 0.0
    width = gam + (gamma_opt if include_optical_damping else 0.0)
    height = (k / gam) * y * (params.single_photon_coupling / k) ** 2 * 16.0 * n ** 2 / (1.0 + x) ** 3
    return TwoPhononPeak(polariton_energies(params)[PLUS], width, height, gamma_opt)


def _check_two_phonon_regime(params: SystemParams):
    problems = []
    if abs(params.detuning / params.mech_freq + 2.0) > 0.1:
        problems.append("detuning not close to -2 wM")
    if params.mech_bath_occupancy < 10:
        problems.append("mechanical bath not hot")
    if params.mech_damping > 0.1 * params.cavity_damping:
        problems.append("gamma not small against kappa")
    if params.many_photon_coupling > 0 and params.single_photon_coupling > 0:
        basis, diss = linear_state(params)
        _, c_plus = cooperativities(diss.kappa, diss.n0, basis.g_tilde)
        if c_plus > 0.1:
            problems.append(f"C+ = {c_plus:.3g} not small")
    if problems:
        warnings.warn("two_phonon_peak outside validity: " + "; ".join(problems),
                      RegimeWarning, stacklevel=3)
