"""Second-order self-energies of the resonant three-wave interaction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..errors import WindowError
from ..model import MINUS, PLUS, LinearDissipation, PolaritonBasis
from .closed_forms import leading_keldysh, leading_retarded
from .greens import GreenFunctionSet
from .windows import FrequencyWindow

MASK_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class SelfEnergySet:
    """``Sigma^R`` and ``Sigma^K`` per polariton on the Green-function windows."""

    windows: tuple[FrequencyWindow, FrequencyWindow]
    retarded: tuple[np.ndarray, np.ndarray]
    keldysh: tuple[np.ndarray, np.ndarray]
    g_tilde: float = 0.0

    def gamma_int(self, sigma: int) -> np.ndarray:
        """Interaction-induced damping ``-2 Im Sigma^R``."""
        return -2.0 * self.retarded[sigma].imag

    def n_int(self, sigma: int) -> np.ma.MaskedArray:
        """Occupancy of the interaction-induced bath, masked where
        ``Im Sigma^R`` vanishes to working precision."""
        im_r = self.retarded[sigma].imag
        scale = max(np.max(np.abs(im_r)), np.finfo(float).tiny)
        mask = np.abs(im_r) <= MASK_FLOOR * scale
        safe = np.where(mask, 1.0, im_r)
        values = 0.5 * (self.keldysh[sigma].imag / (2.0 * safe) - 1.0)
        return np.ma.masked_array(values, mask=mask)

    @classmethod
    def zeros(cls, windows) -> "SelfEnergySet":
        z = tuple(np.zeros(w.n_points, dtype=complex) for w in windows)
        return cls(tuple(windows), z, tuple(a.copy() for a in z), 0.0)


def leading_self_energy(basis: PolaritonBasis, dissipation: LinearDissipation,
                        g_tilde: float, windows) -> SelfEnergySet:
    """Closed-form self-energies obtained with bare propagators."""
    args = (np.asarray(basis.energies), dissipation.kappa, dissipation.n0, g_tilde)
    if g_tilde == 0.0:
        return SelfEnergySet.zeros(windows)
    rs = tuple(leading_retarded(s, windows[s].omega, *args) for s in (MINUS, PLUS))
    ks = tuple(leading_keldysh(s, windows[s].omega, *args) for s in (MINUS, PLUS))
    return SelfEnergySet(tuple(windows), rs, ks, float(g_tilde))


def _extended(g: GreenFunctionSet, sigma: int):
    """Window values padded with one window length of tail on either side."""
    win = g.windows[sigma]
    idx = np.arange(win.start - win.n_points, win.stop + win.n_points)
    r, k = g.at_indices(sigma, idx)
    return idx[0], r, k


def _convolve(a, a0, b, b0, target: FrequencyWindow, scale):
    """``scale * sum_nu a[nu] b[omega - nu]`` on the target window."""
    full = fftconvolve(a, b)
    offset = target.start - (a0 + b0)
    if offset < 0 or offset + target.n_points > full.size:
        raise WindowError("convolution image does not cover the target window")
    return scale * full[offset:offset + target.n_points]


def _correlate(a, a0, b, b0, target: FrequencyWindow, scale):
    """``scale * sum_nu a[nu] b[nu - omega]`` on the target window."""
    rev = b[::-1]
    return _convolve(a, a0, rev, -(b0 + b.size - 1), target, scale)


def _check_images(g: GreenFunctionSet):
    wm, wp = g.windows
    if wm.spacing != wp.spacing:
        raise WindowError("both windows must share the same spacing")
    e = g.tail.energies
    if not wp.contains(2.0 * e[MINUS]):
        raise WindowError(f"2E- = {2 * e[MINUS]:.6g} outside the + window")
    if not wm.contains(e[PLUS] - e[MINUS]):
        raise WindowError(f"E+ - E- = {e[PLUS] - e[MINUS]:.6g} outside the - window")


def bubble_self_energy(g: GreenFunctionSet, g_tilde: float) -> SelfEnergySet:
    """One-loop self-energies built from the supplied (possibly dressed) propagators.

    Convolutions run over each window extended by the tail model on both
    sides, so the quadrature does not see a hard frequency cutoff.
    """
    if g_tilde == 0.0:
        return SelfEnergySet.zeros(g.windows)
    _check_images(g)
    wm, wp = g.windows
    scale = g_tilde ** 2 * wm.spacing / (2.0 * np.pi)
    m0, rm, km = _extended(g, MINUS)
    p0, rp, kp = _extended(g, PLUS)
    am = rm - np.conj(rm)
    ap = rp - np.conj(rp)

    sr_plus = _convolve(km, m0, rm, m0, wp, 2j * scale)
    sk_plus = (_convolve(km, m0, km, m0, wp, 1j * scale)
               + _convolve(am, m0, am, m0, wp, 1j * scale))
    sr_minus = (_correlate(rp, p0, km, m0, wm, 2j * scale)
                + _correlate(kp, p0, np.conj(rm), m0, wm, 2j * scale))
    sk_minus = (_correlate(kp, p0, km, m0, wm, 2j * scale)
                - _correlate(ap, p0, am, m0, wm, 2j * scale))
    # Keldysh self-energies are anti-Hermitian scalars: drop round-off real parts
    return SelfEnergySet(g.windows, (sr_minus, sr_plus),
                         (1j * sk_minus.imag, 1j * sk_plus.imag), float(g_tilde))
