"""Classical radiation-pressure picture of a cavity driven by a moving mirror.

The mirror follows ``x(t) = x0 sin(wM t)``, which modulates the detuning as
``Delta + eps wM sin(wM t)``.  In the frame of the drive the cavity amplitude
obeys ``da/dt = (-kappa/2 + i Delta + i eps wM sin wM t) a + i a_in`` and has
the exact periodic solution

    a(t) = i a_in sum_{n,m} i^(n-m) J_n(eps) J_m(eps) e^{i(n-m) wM t}
                             / (kappa/2 + i(n wM - Delta)).

A component ``e^{i k wM t}`` sits at lab frequency ``wL - k wM``, so light
emitted at ``+2 wM`` above the drive is the ``k = -2`` harmonic.

Only reduced parameters enter: ``eps = (x0/x_zpf)(g/wM)`` and the static
amplitude ``|a_bar| = G/g``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import jv, roots_laguerre

from .errors import CutoffError, DomainError, RegimeWarning
from .model import SystemParams

TAIL_TOL = 1e-12
MIN_CUTOFF = 4
EPS_WARN = 0.3


def epsilon_from_occupancy(occupancy: float, coupling: float, mech_freq: float) -> float:
    """Modulation depth of a mirror oscillating with energy ``wM * occupancy``."""
    return 2.0 * math.sqrt(occupancy) * coupling / mech_freq


def _auto_cutoff(eps: float) -> int:
    n = MIN_CUTOFF
    while abs(jv(n + 1, eps)) >= TAIL_TOL or n + 1 <= eps:
        n += 1
    return n


@dataclass(frozen=True, eq=False)
class ClassicalDriveState:
    """Bessel-series steady state of the modulated cavity.

    ``coefficients[i, j]`` multiplies ``e^{i(n_i - n_j) wM t}`` with
    ``n = orders``.
    """

    epsilon: float
    cutoff: int
    detuning: float
    mech_freq: float
    kappa: float
    a_in: complex
    orders: np.ndarray
    coefficients: np.ndarray

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-2 * self.cutoff, 2 * self.cutoff + 1)

    def lines(self) -> np.ndarray:
        """Amplitudes ``A_k`` of ``e^{i k wM t}`` for ``k`` in :attr:`harmonics`."""
        out = np.zeros(4 * self.cutoff + 1, dtype=complex)
        k = self.orders[:, None] - self.orders[None, :] + 2 * self.cutoff
        np.add.at(out, k.ravel(), self.coefficients.ravel())
        return out

    def line(self, k: int) -> complex:
        if abs(k) > 2 * self.cutoff:
            return 0j
        return complex(self.lines()[k + 2 * self.cutoff])

    def field(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        phase = np.exp(1j * self.mech_freq * np.multiply.outer(t, self.harmonics))
        return phase @ self.lines()

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        phase = np.exp(1j * self.mech_freq * np.multiply.outer(t, self.harmonics))
        return phase @ (1j * self.mech_freq * self.harmonics * self.lines())

    def ode_residual(self, t) -> np.ndarray:
        """Pointwise residual of the equation of motion."""
        t = np.asarray(t, dtype=float)
        a = self.field(t)
        rate = -0.5 * self.kappa + 1j * self.detuning \
            + 1j * self.epsilon * self.mech_freq * np.sin(self.mech_freq * t)
        return self.derivative(t) - rate * a - 1j * self.a_in

    def line_power(self) -> float:
        """``sum_k |A_k|^2``, the period average of ``|a(t)|^2``."""
        return float(np.sum(np.abs(self.lines()) ** 2))

    def time_average_power(self, n_samples: int = 512) -> float:
        t = np.arange(n_samples) * (2.0 * math.pi / (self.mech_freq * n_samples))
        return float(np.mean(np.abs(self.field(t)) ** 2))

    def intensity_harmonic(self, k: int) -> complex:
        """Fourier component of ``|a(t)|^2`` at ``e^{i k wM t}``."""
        a = self.lines()
        if k >= 0:
            return complex(np.sum(a[k:] * np.conj(a[:len(a) - k])))
        return complex(np.conj(self.intensity_harmonic(-k)))


def classical_field(params: SystemParams, epsilon: float, cutoff: int | None = None,
                    a_in: complex = 1.0) -> ClassicalDriveState:
    """Evaluate the Bessel series for modulation depth ``epsilon``."""
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise DomainError(f"epsilon must be finite and >= 0, got {epsilon}")
    if epsilon > EPS_WARN:
        warnings.warn(f"epsilon = {epsilon:.3g} is not small", RegimeWarning, stacklevel=2)
    if cutoff is None:
        cutoff = _auto_cutoff(epsilon)
    if cutoff < MIN_CUTOFF:
        raise DomainError(f"cutoff must be >= {MIN_CUTOFF}, got {cutoff}")
    if cutoff + 1 <= epsilon or abs(jv(cutoff + 1, epsilon)) >= TAIL_TOL:
        raise CutoffError(f"|J_{cutoff + 1}({epsilon:.6g})| = {abs(jv(cutoff + 1, epsilon)):.3g} "
                          f"not below {TAIL_TOL:g}")
    n = np.arange(-cutoff, cutoff + 1)
    bessel = jv(n, epsilon)
    wm, delta, kappa = params.mech_freq, params.detuning, params.cavity_damping
    phase = 1j ** ((n[:, None] - n[None, :]) % 4)
    den = 0.5 * kappa + 1j * (n * wm - delta)
    coef = 1j * a_in * phase * np.outer(bessel / den, bessel)
    return ClassicalDriveState(float(epsilon), int(cutoff), delta, wm, kappa, complex(a_in), n, coef)


def static_amplitude(params: SystemParams, a_in: complex = 1.0) -> complex:
    return 1j * a_in / (0.5 * params.cavity_damping - 1j * params.detuning)


def optical_response(state: ClassicalDriveState, coupling: float) -> tuple[float, float]:
    """Optical damping and frequency shift from the first intensity harmonic.

    The mirror force is proportional to ``|a|^2``; its component in
    quadrature with the motion damps it, the in-phase part shifts its
    frequency.  Valid to leading order in ``epsilon``.
    """
    if state.epsilon == 0:
        raise DomainError("optical response needs epsilon > 0")
    f1 = state.intensity_harmonic(1)
    scale = 4.0 * coupling ** 2 / (state.epsilon * state.mech_freq)
    return float(-scale * f1.real), float(0.5 * scale * f1.imag)


def linear_optical_response(many_photon_coupling: float, detuning: float, mech_freq: float,
                            kappa: float = 1.0) -> tuple[float, float]:
    """Textbook optical damping and spring for a linearized cavity."""
    g2, k = many_photon_coupling ** 2, kappa
    lp = k ** 2 / 4 + (detuning + mech_freq) ** 2
    lm = k ** 2 / 4 + (detuning - mech_freq) ** 2
    damping = g2 * (k / lp - k / lm)
    shift = g2 * ((detuning + mech_freq) / lp + (detuning - mech_freq) / lm)
    return damping, shift


@dataclass(frozen=True)
class ClassicalLine:
    """Delta peak ``weight * delta(omega - center)`` of the classical spectrum."""

    center: float
    weight: float
    flags: tuple[str, ...] = ()


def classical_spectrum(params: SystemParams) -> ClassicalLine:
    """Thermally averaged classical emission line at ``2 wM`` above the drive."""
    y = (params.many_photon_coupling / params.mech_freq) ** 2
    k = params.cavity_damping
    n = params.mech_bath_occupancy
    weight = 16.0 * math.pi * y * (params.single_photon_coupling / k) ** 2 * n ** 2
    flags = []
    if n < 10:
        flags.append("mechanical bath not hot")
    if params.mech_freq < 10 * k:
        flags.append("not in the resolved-sideband regime")
    if abs(params.detuning / params.mech_freq + 2.0) > 0.1:
        flags.append("detuning not close to -2 wM")
    return ClassicalLine(2.0 * params.mech_freq, weight, tuple(flags))


def series_line_weight(params: SystemParams, harmonic: int = -2, nodes: int = 48) -> float:
    """Thermal average of ``2 pi |A_k|^2`` straight from the Bessel series.

    The drive is scaled so that ``|a_bar| = G/g``; the mirror energy is
    exponentially distributed with mean ``wM * n_th`` and the average is done
    by Gauss-Laguerre quadrature.  Includes every correction the closed form
    drops, so the two agree only for ``kappa << wM`` and small ``g/wM``.
    """
    g = params.single_photon_coupling
    n = params.mech_bath_occupancy
    if g == 0 or n == 0 or params.many_photon_coupling == 0:
        return 0.0
    a_in = (params.many_photon_coupling / g) / abs(static_amplitude(params))
    mean_eps2 = epsilon_from_occupancy(n, g, params.mech_freq) ** 2
    x, w = roots_laguerre(nodes)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        for xi, wi in zip(x, w):
            state = classical_field(params, math.sqrt(mean_eps2 * xi), a_in=a_in)
            total += wi * abs(state.line(harmonic)) ** 2
    return 2.0 * math.pi * total
