"""Observables extracted from Green functions and the instability analysis."""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..model import MINUS, PLUS, LinearDissipation
from .closed_forms import cooperativities, interaction_occupancies
from .greens import GreenFunctionSet
from .windows import FrequencyWindow

MASK_FLOOR = 1e-10
NEAR_THRESHOLD_MARGIN = 0.1


def polariton_dos(g: GreenFunctionSet) -> tuple[np.ndarray, np.ndarray]:
    return g.spectral(MINUS), g.spectral(PLUS)


def occupancy_from_keldysh(retarded, keldysh, floor=MASK_FLOOR) -> np.ma.MaskedArray:
    """``n_eff`` from ``G^K = (2 n_eff + 1)(G^R - G^A)``, masked where ``Im G^R ~ 0``."""
    im_r = np.asarray(retarded).imag
    scale = max(np.max(np.abs(im_r)), np.finfo(float).tiny)
    mask = np.abs(im_r) <= floor * scale
    safe = np.where(mask, -1.0, im_r)
    values = 0.5 * (np.asarray(keldysh).imag / (2.0 * safe) - 1.0)
    return np.ma.masked_array(values, mask=mask)


def distribution_function(g: GreenFunctionSet) -> tuple[np.ma.MaskedArray, np.ma.MaskedArray]:
    """Energy-resolved occupancy of each polariton on its window."""
    return tuple(occupancy_from_keldysh(g.retarded[s], g.keldysh[s]) for s in (MINUS, PLUS))


def total_occupancy(g: GreenFunctionSet, sigma: int) -> float:
    """``<c^dag c>`` from the Green functions.

    The window integral of ``(n_eff - n0) rho`` is added to ``n0``; this
    uses the unit sum rule of the full-line spectral weight, so window
    truncation only enters through the small non-thermal part.
    """
    n0 = float(g.tail.n0[sigma])
    n_eff = occupancy_from_keldysh(g.retarded[sigma], g.keldysh[sigma]).filled(n0)
    return n0 + float(np.sum((n_eff - n0) * g.spectral(sigma)) * g.spacing)


def two_bath_average(gamma_int, n_int, kappa: float, n0: float):
    """Rate-weighted occupancy of the intrinsic and interaction-induced baths."""
    gamma_int = np.asarray(gamma_int, dtype=float)
    return (gamma_int * n_int + kappa * n0) / (gamma_int + kappa)


@dataclass(frozen=True)
class ResonanceProfile:
    """Leading-order occupancy bump ``n0 + I w^2 / ((omega - center)^2 + w^2)``."""

    n0: float
    amplitude: float
    center: float
    width: float

    def __call__(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        return self.n0 + self.amplitude * self.width ** 2 / (x ** 2 + self.width ** 2)


def resonance_profiles(energies, dissipation: LinearDissipation, g_tilde: float):
    """Lorentzian approximations to the leading-order ``n_eff`` of each branch."""
    kappa, n0 = dissipation.kappa, dissipation.n0
    c_minus, c_plus = cooperativities(kappa, n0, g_tilde)
    n_int = interaction_occupancies(n0)
    out = []
    for s, c in ((MINUS, c_minus), (PLUS, c_plus)):
        if c == 0.0:
            out.append(ResonanceProfile(float(n0[s]), 0.0, float(energies[s]), 1.0))
            continue
        amp = (n_int[s] - n0[s]) * c / (1.0 + c)
        if s == MINUS:
            center = energies[PLUS] - energies[MINUS]
            width = 0.5 * (kappa[MINUS] + kappa[PLUS]) * math.sqrt(1.0 + c) if c > -1 else float("nan")
        else:
            center = 2.0 * energies[MINUS]
            width = kappa[MINUS] * math.sqrt(1.0 + c)
        out.append(ResonanceProfile(float(n0[s]), float(amp), float(center), float(width)))
    return tuple(out)


@dataclass(frozen=True)
class InstabilityReport:
    c_minus: float
    c_plus: float
    occupancy_inverted: bool
    unstable: bool
    near_threshold: bool
    threshold_occupancy: float
    total_damping_minus: float
    n_eff_minus_resonance: float
    n_eff_minus_paramp: float
    n_eff_minus_pumped: float

    def as_dict(self) -> dict:
        return asdict(self)


def paramp_occupancy(g_tilde: float, kappa_minus: float, n_plus: float) -> float:
    """Signal occupancy of an incoherently pumped degenerate paramp (closed form)."""
    x = 16.0 * g_tilde ** 2 * n_plus
    k2 = kappa_minus ** 2
    return x / (k2 - x) if x < k2 else math.inf


def pumped_paramp_occupancy(g_tilde: float, kappa_minus: float, n_plus: float) -> float:
    """Same quantity from the gain parameter ``Q`` of the coherently pumped model."""
    q = 4j * g_tilde * cmath.sqrt(n_plus) / kappa_minus
    q2 = abs(q) ** 2
    return q2 / (1.0 - q2) if q2 < 1.0 else math.inf


def instability_report(dissipation: LinearDissipation, g_tilde: float,
                       margin: float = NEAR_THRESHOLD_MARGIN) -> InstabilityReport:
    """Leading-order stability of the lower polariton.

    ``near_threshold`` marks ``-1 < C- <= -1 + margin``.
    """
    kappa, n0 = dissipation.kappa, dissipation.n0
    c_minus, c_plus = cooperativities(kappa, n0, g_tilde)
    n_int_minus, _ = interaction_occupancies(n0)
    if c_minus <= -1.0:
        n_res = math.inf
    elif math.isinf(n_int_minus):
        # C- vanishes with n0- = n0+; the product C- n_int- stays finite
        n_res = float(n0[MINUS] + 16 * g_tilde ** 2 * n0[PLUS] * (n0[MINUS] + 1)
                      / (kappa[MINUS] * kappa.sum()))
    else:
        n_res = (c_minus * n_int_minus + n0[MINUS]) / (1.0 + c_minus)
    threshold = math.inf if g_tilde == 0.0 else kappa[MINUS] ** 2 / (16.0 * g_tilde ** 2)
    return InstabilityReport(
        c_minus=float(c_minus), c_plus=float(c_plus),
        occupancy_inverted=bool(n0[PLUS] > n0[MINUS]),
        unstable=bool(c_minus <= -1.0),
        near_threshold=bool(-1.0 < c_minus <= -1.0 + margin),
        threshold_occupancy=float(threshold),
        total_damping_minus=float(kappa[MINUS] * (1.0 + c_minus)),
        n_eff_minus_resonance=float(n_res),
        n_eff_minus_paramp=paramp_occupancy(g_tilde, kappa[MINUS], n0[PLUS]),
        n_eff_minus_pumped=pumped_paramp_occupancy(g_tilde, kappa[MINUS], n0[PLUS]))


def retarded_time_domain(g: GreenFunctionSet, sigma: int):
    """``G^R(t)`` on the FFT time grid of the window.

    The analytic transform of the bare Lorentzian is added to the FFT of
    the (rapidly decaying) remainder, which avoids the slow ``1/omega``
    tail leaking into negative times.
    """
    win = g.windows[sigma]
    n, h = win.n_points, win.spacing
    e, k = g.tail.energies[sigma], g.tail.kappa[sigma]
    bare = 1.0 / (win.omega - e + 0.5j * k)
    rest = g.retarded[sigma] - bare
    t = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    spectrum = np.fft.fft(rest)
    g_rest = h / (2.0 * np.pi) * np.exp(-1j * win.start * h * t) * spectrum
    g_bare = np.where(t > 0, -1j * np.exp(-1j * e * t - 0.5 * k * t), 0.0)
    g_bare = np.where(t == 0, -0.5j, g_bare)
    order = np.argsort(t)
    return t[order], (g_bare + g_rest)[order]


def hilbert_real_part(imag_part, window: FrequencyWindow) -> np.ndarray:
    """Real part of a causal response from its imaginary part on ``window``.

    Maclaurin's rule: each output point sums the odd-offset neighbours with
    weight ``2/(pi m)``, which avoids the singular point and is far more
    accurate than a plain principal-value sum on the same grid.
    """
    n = window.n_points
    m = np.arange(-(n - 1), n)
    kernel = np.zeros(m.size)
    odd = m % 2 != 0
    kernel[odd] = 2.0 / (np.pi * m[odd])
    full = fftconvolve(np.asarray(imag_part, dtype=float), kernel)
    return -full[n - 1:2 * n - 1]
