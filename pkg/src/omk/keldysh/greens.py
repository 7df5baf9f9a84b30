"""Retarded / Keldysh Green functions of the two polaritons on windows.

Keldysh components follow ``G^K = (2n + 1)(G^R - G^A)``, so ``Im G^K <= 0``
for non-negative occupancy.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..model import MINUS, PLUS, LinearDissipation, PolaritonBasis
from .closed_forms import leading_keldysh, leading_retarded
from .windows import FrequencyWindow


@dataclass(frozen=True, eq=False)
class TailModel:
    """Analytic Green functions used outside the computed windows.

    With ``g_tilde = 0`` these are the bare Lorentzians; otherwise the
    leading-order self-energy dresses them.
    """

    energies: np.ndarray
    kappa: np.ndarray
    n0: np.ndarray
    g_tilde: float = 0.0

    def _sigma(self, sigma, omega):
        if self.g_tilde == 0.0:
            zero = np.zeros(np.shape(omega), dtype=complex)
            return zero, zero
        args = (self.energies, self.kappa, self.n0, self.g_tilde)
        return leading_retarded(sigma, omega, *args), leading_keldysh(sigma, omega, *args)

    def retarded(self, sigma: int, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        sr, _ = self._sigma(sigma, omega)
        return 1.0 / (omega - self.energies[sigma] + 0.5j * self.kappa[sigma] - sr)

    def keldysh(self, sigma: int, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        sr, sk = self._sigma(sigma, omega)
        gr = 1.0 / (omega - self.energies[sigma] + 0.5j * self.kappa[sigma] - sr)
        bath = -1j * self.kappa[sigma] * (2.0 * self.n0[sigma] + 1.0)
        return 1j * (gr * (sk + bath) * np.conj(gr)).imag

    def bare(self) -> "TailModel":
        return replace(self, g_tilde=0.0)


@dataclass(frozen=True, eq=False)
class GreenFunctionSet:
    """Per-polariton ``G^R`` and ``G^K`` sampled on their windows."""

    windows: tuple[FrequencyWindow, FrequencyWindow]
    retarded: tuple[np.ndarray, np.ndarray]
    keldysh: tuple[np.ndarray, np.ndarray]
    tail: TailModel
    flags: dict = field(default_factory=dict)

    @property
    def advanced(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.conj(r) for r in self.retarded)

    @property
    def spacing(self) -> float:
        return self.windows[MINUS].spacing

    def spectral(self, sigma: int) -> np.ndarray:
        """Density of states ``-Im G^R / pi`` on the window."""
        return -self.retarded[sigma].imag / np.pi

    def at_indices(self, sigma: int, idx) -> tuple[np.ndarray, np.ndarray]:
        """``(G^R, G^K)`` at lattice indices; tail model outside the window."""
        idx = np.asarray(idx, dtype=np.int64)
        win = self.windows[sigma]
        omega = idx * win.spacing
        r = self.tail.retarded(sigma, omega).astype(complex)
        k = self.tail.keldysh(sigma, omega).astype(complex)
        inside = (idx >= win.start) & (idx < win.stop)
        r[inside] = self.retarded[sigma][idx[inside] - win.start]
        k[inside] = self.keldysh[sigma][idx[inside] - win.start]
        return r, k

    def evaluate(self, sigma: int, omega) -> tuple[np.ndarray, np.ndarray]:
        """``(G^R, G^K)`` at arbitrary frequencies.

        Lattice-aligned points take window samples exactly; other in-window
        points are linearly interpolated; out-of-window points use the tail.
        """
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        h = self.spacing
        j = np.rint(omega / h)
        if np.all(np.abs(omega / h - j) < 1e-9):
            return self.at_indices(sigma, j.astype(np.int64))
        win = self.windows[sigma]
        r = self.tail.retarded(sigma, omega).astype(complex)
        k = self.tail.keldysh(sigma, omega).astype(complex)
        w = win.omega
        inside = (omega >= w[0]) & (omega <= w[-1])
        for out, src in ((r, self.retarded[sigma]), (k, self.keldysh[sigma])):
            out[inside] = (np.interp(omega[inside], w, src.real)
                           + 1j * np.interp(omega[inside], w, src.imag))
        return r, k


def bare_green(basis: PolaritonBasis, dissipation: LinearDissipation,
               windows: tuple[FrequencyWindow, FrequencyWindow]) -> GreenFunctionSet:
    """Lorentzian polariton propagators with thermal Keldysh parts."""
    tail = TailModel(np.array(basis.energies, dtype=float), np.array(dissipation.kappa),
                     np.array(dissipation.n0))
    rs, ks = [], []
    for s in (MINUS, PLUS):
        w = windows[s].omega
        rs.append(tail.retarded(s, w))
        ks.append(tail.keldysh(s, w))
    return GreenFunctionSet(tuple(windows), tuple(rs), tuple(ks), tail)
