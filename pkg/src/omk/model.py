"""Linearized optomechanics in the polariton basis.

Energies and rates are expressed in units of the cavity damping rate, so
``cavity_damping`` is normally left at 1.  Polariton quantities are stored
as length-2 arrays indexed by ``MINUS`` (lower branch) and ``PLUS``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, RegimeWarning

MINUS, PLUS = 0, 1
OCCUPANCY_CAP = 1e6
MECH_BATH_MODELS = ("flat", "bose")


def bose(energy, temperature):
    """Bose-Einstein occupancy ``1/(exp(E/T) - 1)``; zero at ``T = 0``."""
    e = np.asarray(energy, dtype=float)
    t = np.asarray(temperature, dtype=float)
    safe_t = np.where(t > 0, t, 1.0)
    with np.errstate(over="ignore", divide="ignore"):
        out = np.where(t > 0, 1.0 / np.expm1(e / safe_t), 0.0)
    return float(out) if out.ndim == 0 else out


def inverse_bose(occupancy, energy, cap=OCCUPANCY_CAP):
    """Temperature at which a mode of ``energy`` holds ``occupancy`` quanta.

    Returns ``(temperature, capped)``.  Zero occupancy maps to ``T = 0``,
    occupancies above ``cap`` are clipped to ``cap`` and flagged, negative
    occupancies give NaN.
    """
    n = np.asarray(occupancy, dtype=float)
    e = np.asarray(energy, dtype=float)
    capped = n > cap
    n_eff = np.where(capped, cap, n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = np.where(n_eff > 0, e / np.log1p(1.0 / np.where(n_eff > 0, n_eff, 1.0)), 0.0)
    t = np.where(n < 0, np.nan, t)
    if t.ndim == 0:
        return float(t), bool(capped)
    return t, capped


def critical_coupling(detuning: float, mech_freq: float) -> float:
    """Largest stable many-photon coupling, ``sqrt(-wM * Delta / 4)``."""
    return math.sqrt(-mech_freq * detuning / 4.0)


@dataclass(frozen=True)
class SystemParams:
    """Physical knobs of the driven cavity, in units of ``cavity_damping``.

    ``mech_bath_occupancy`` is the thermal occupancy of the mechanical bath
    at the mechanical frequency.  ``mech_bath_model`` selects how that bath
    is seen by a polariton at energy E: ``"flat"`` keeps the same occupancy
    at every energy, ``"bose"`` uses the Bose function at the mechanical
    bath temperature.
    """

    detuning: float
    mech_freq: float
    many_photon_coupling: float
    single_photon_coupling: float = 0.0
    mech_damping: float = 1e-4
    mech_bath_occupancy: float = 0.0
    cavity_damping: float = 1.0
    mech_bath_model: str = "flat"

    def __post_init__(self):
        values = (self.detuning, self.mech_freq, self.many_photon_coupling,
                  self.single_photon_coupling, self.mech_damping,
                  self.mech_bath_occupancy, self.cavity_damping)
        if not all(math.isfinite(float(v)) for v in values):
            raise DomainError("all parameters must be finite")
        if self.detuning >= 0:
            raise DomainError(f"detuning must be negative (red drive), got {self.detuning}")
        if self.mech_freq <= 0:
            raise DomainError("mech_freq must be positive")
        if self.mech_damping <= 0:
            raise DomainError("mech_damping must be positive")
        if self.cavity_damping <= 0:
            raise DomainError("cavity_damping must be positive")
        if self.many_photon_coupling < 0 or self.single_photon_coupling < 0:
            raise DomainError("couplings must be non-negative")
        if self.mech_bath_occupancy < 0:
            raise DomainError("mech_bath_occupancy must be non-negative")
        if self.mech_bath_model not in MECH_BATH_MODELS:
            raise DomainError(f"mech_bath_model must be one of {MECH_BATH_MODELS}")
        if self.many_photon_coupling ** 2 >= -self.mech_freq * self.detuning / 4.0:
            raise DomainError(
                f"G={self.many_photon_coupling} is not below the instability "
                f"threshold G_crit={self.g_crit:.6g}")

    @classmethod
    def at_resonance(cls, detuning: float, mech_freq: float, **kwargs) -> "SystemParams":
        """Parameters with ``many_photon_coupling = g_res(detuning)``."""
        return cls(detuning, mech_freq, g_res(detuning, mech_freq), **kwargs)

    @property
    def g_crit(self) -> float:
        return critical_coupling(self.detuning, self.mech_freq)

    @property
    def mech_temperature(self) -> float:
        return inverse_bose(self.mech_bath_occupancy, self.mech_freq)[0]

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def _energies(detuning, mech_freq, coupling):
    wm2, d2 = mech_freq ** 2, detuning ** 2
    root = math.sqrt((wm2 - d2) ** 2 - 16.0 * coupling ** 2 * detuning * mech_freq)
    lower = 0.5 * (wm2 + d2 - root)
    if lower <= 0:
        raise DomainError("coupling at or beyond the instability threshold (E- not real)")
    return math.sqrt(lower), math.sqrt(0.5 * (wm2 + d2 + root))


def polariton_energies(params: SystemParams) -> tuple[float, float]:
    """Normal-mode energies ``(E-, E+)`` of the linearized Hamiltonian."""
    return _energies(params.detuning, params.mech_freq, params.many_photon_coupling)


def g_res(detuning: float, mech_freq: float) -> float:
    """Coupling at which ``E+ = 2 E-`` for the given detuning.

    Defined on ``-2 wM <= Delta <= -wM/2``.
    """
    x = detuning / mech_freq
    tol = 1e-12
    if not (-2.0 - tol <= x <= -0.5 + tol):
        raise DomainError(f"resonance needs -2 <= Delta/wM <= -1/2, got {x}")
    radicand = 17 * detuning ** 2 * mech_freq ** 2 - 4 * (detuning ** 4 + mech_freq ** 4)
    radicand = max(radicand, 0.0)
    return math.sqrt(radicand) / (10.0 * math.sqrt(-detuning * mech_freq))


def linearized_hamiltonian_matrix(detuning, mech_freq, coupling) -> np.ndarray:
    """Matrix ``M`` with ``H_L = v^dag M v / 2 + const`` for ``v = (d, b, d^dag, b^dag)``."""
    a = np.array([[-detuning, coupling], [coupling, mech_freq]], dtype=float)
    b = np.array([[0.0, coupling], [coupling, 0.0]])
    return np.block([[a, b], [b, a]])


_ETA = np.diag([1.0, 1.0, -1.0, -1.0])


@dataclass(frozen=True)
class NonlinearCouplings:
    g_tilde: float
    g_a_sum: float
    linear_terms: tuple[float, float]


@dataclass(frozen=True, eq=False)
class PolaritonBasis:
    """Polariton energies and the real Bogoliubov coefficients.

    ``d = sum_s alpha_d[s] c_s + alpha_d_bar[s] c_s^dag`` and likewise for
    the phonon ``b``.  Nonlinear couplings are those for the single-photon
    coupling the basis was built with (zero when built with ``g = 0``).
    """

    energies: np.ndarray
    alpha_d: np.ndarray
    alpha_d_bar: np.ndarray
    alpha_b: np.ndarray
    alpha_b_bar: np.ndarray
    g_tilde: float = 0.0
    g_a_sum: float = 0.0
    linear_terms: tuple[float, float] = (0.0, 0.0)

    @property
    def beta(self) -> np.ndarray:
        """Phonon position weights ``alpha_b + alpha_b_bar``."""
        return self.alpha_b + self.alpha_b_bar

    def transform_matrix(self) -> np.ndarray:
        """``T`` with ``(d, b, d^dag, b^dag) = T (c-, c+, c-^dag, c+^dag)``."""
        t = np.zeros((4, 4))
        t[0, :2], t[0, 2:] = self.alpha_d, self.alpha_d_bar
        t[1, :2], t[1, 2:] = self.alpha_b, self.alpha_b_bar
        t[2, :2], t[2, 2:] = self.alpha_d_bar, self.alpha_d
        t[3, :2], t[3, 2:] = self.alpha_b_bar, self.alpha_b
        return t

    def hamiltonian_matrix(self) -> np.ndarray:
        """Rebuild the photon/phonon quadratic form from energies and coefficients."""
        t_inv = np.linalg.inv(self.transform_matrix())
        diag = np.diag(np.tile(self.energies, 2))
        return t_inv.T @ diag @ t_inv

    def normalization_defects(self) -> tuple[float, float]:
        """Deviation of ``sum_s (alpha^2 - alpha_bar^2)`` from 1 for d and b."""
        nd = np.sum(self.alpha_d ** 2 - self.alpha_d_bar ** 2) - 1.0
        nb = np.sum(self.alpha_b ** 2 - self.alpha_b_bar ** 2) - 1.0
        return float(nd), float(nb)


def _decoupled_basis(detuning, mech_freq):
    # G = 0: photon (energy -Delta) and phonon (energy wM) are the normal modes.
    # On exact degeneracy the phonon is labelled as the lower branch.
    photon_lower = -detuning < mech_freq
    e_photon, e_phonon = -detuning, mech_freq
    if photon_lower:
        energies = np.array([e_photon, e_phonon])
        alpha_d, alpha_b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    else:
        energies = np.array([e_phonon, e_photon])
        alpha_d, alpha_b = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    zeros = np.zeros(2)
    return PolaritonBasis(energies, alpha_d, zeros.copy(), alpha_b, zeros.copy())


def _symplectic_basis(detuning, mech_freq, coupling):
    m = linearized_hamiltonian_matrix(detuning, mech_freq, coupling)
    w, v = np.linalg.eig(_ETA @ m)
    if np.max(np.abs(w.imag)) > 1e-9 * np.max(np.abs(w)):
        raise DomainError("dynamical matrix has complex eigenvalues (unstable)")
    w, v = w.real, v.real
    positive = [i for i in np.argsort(w) if w[i] > 0]
    if len(positive) != 2:
        raise DomainError("dynamical matrix does not have two positive modes")
    cols = []
    for i in positive:
        vec = v[:, i]
        norm = vec @ _ETA @ vec
        if norm <= 0:
            raise DomainError("positive-energy mode has non-positive symplectic norm")
        vec = vec / math.sqrt(norm)
        pivot = vec[0] if abs(vec[0]) > 1e-13 else vec[1]
        cols.append(vec if pivot > 0 else -vec)
    energies = w[positive]
    alpha_d = np.array([c[0] for c in cols])
    alpha_b = np.array([c[1] for c in cols])
    # column k holds the c_k coefficients of (d, b, d^dag, b^dag); the c_k
    # coefficient inside d^dag is the anomalous weight of c_k^dag inside d
    alpha_d_bar = np.array([c[2] for c in cols])
    alpha_b_bar = np.array([c[3] for c in cols])
    return PolaritonBasis(energies, alpha_d, alpha_d_bar, alpha_b, alpha_b_bar)


def nonlinear_couplings(basis: PolaritonBasis, g: float) -> NonlinearCouplings:
    """Coupling constants of ``g d^dag d (b + b^dag)`` in the polariton basis.

    ``g_tilde`` multiplies ``c+^dag c- c- + h.c.``; ``g_a_sum`` is the
    symmetrized coefficient of ``c+^dag c+^dag c-^dag``; ``linear_terms``
    are the normal-ordering remainders ``A-`` and ``A+``.
    """
    ad, adb, beta = basis.alpha_d, basis.alpha_d_bar, basis.beta
    m, p = MINUS, PLUS
    g_tilde = g * (ad[m] * adb[m] * beta[p] + (adb[m] * adb[p] + ad[m] * ad[p]) * beta[m])
    g_a_sum = g * (ad[p] * adb[p] * beta[m] + (adb[m] * ad[p] + adb[p] * ad[m]) * beta[p])
    s_bar2 = np.sum(adb ** 2)
    s_bar_beta = np.sum(adb * beta)
    s_beta = np.sum(ad * beta)
    linear = g * (s_bar2 * beta + s_bar_beta * ad + s_beta * adb)
    return NonlinearCouplings(float(g_tilde), float(g_a_sum), (float(linear[m]), float(linear[p])))


def bogoliubov_coefficients(params: SystemParams) -> PolaritonBasis:
    """Diagonalize the linearized Hamiltonian into two polariton modes.

    Coefficients are real with ``alpha_d > 0`` (``alpha_b > 0`` for a mode
    with no photon content).  Couplings use ``params.single_photon_coupling``.
    """
    if params.many_photon_coupling == 0.0:
        basis = _decoupled_basis(params.detuning, params.mech_freq)
    else:
        basis = _symplectic_basis(params.detuning, params.mech_freq, params.many_photon_coupling)
    nl = nonlinear_couplings(basis, params.single_photon_coupling)
    return replace(basis, g_tilde=nl.g_tilde, g_a_sum=nl.g_a_sum, linear_terms=nl.linear_terms)


@dataclass(frozen=True, eq=False)
class LinearDissipation:
    """Polariton damping rates and effective bath occupancies.

    ``n_mech`` is the mechanical-bath occupancy seen at each polariton
    energy and ``n_cav`` the occupancy of the cavity bath as seen by the
    polariton (non-zero purely through anomalous mixing).
    """

    kappa: np.ndarray
    kappa_mech: np.ndarray
    kappa_cav: np.ndarray
    n0: np.ndarray
    n_cav: np.ndarray
    n_mech: np.ndarray
    t0: np.ndarray
    t_cav: np.ndarray
    t0_capped: np.ndarray
    t_cav_capped: np.ndarray
    energies: np.ndarray

    def with_occupancies(self, n0) -> "LinearDissipation":
        """Same rates, bath occupancies replaced (e.g. forced thermal)."""
        n0 = np.asarray(n0, dtype=float)
        t0, capped = inverse_bose(n0, self.energies)
        return replace(self, n0=n0, t0=np.asarray(t0), t0_capped=np.asarray(capped))


def mechanical_bath_occupancy(params: SystemParams, energies) -> np.ndarray:
    energies = np.asarray(energies, dtype=float)
    if params.mech_bath_model == "flat":
        return np.full(energies.shape, params.mech_bath_occupancy)
    return np.asarray(bose(energies, params.mech_temperature), dtype=float)


def linear_dissipation(params: SystemParams, basis: PolaritonBasis) -> LinearDissipation:
    """Damping rates ``kappa_s`` and bath occupancies ``n0_s`` of each polariton."""
    k_mech = params.mech_damping * basis.beta ** 2
    weight = basis.alpha_d ** 2 - basis.alpha_d_bar ** 2
    k_cav = params.cavity_damping * weight
    kappa = k_mech + k_cav
    if np.any(kappa <= 0) or np.any(weight < 0):
        raise DomainError("non-positive polariton damping; parameters outside stable domain")
    n_mech = mechanical_bath_occupancy(params, basis.energies)
    with np.errstate(invalid="ignore", divide="ignore"):
        n_cav = np.where(weight > 0, basis.alpha_d_bar ** 2 / np.where(weight > 0, weight, 1.0), 0.0)
    n0 = (k_mech * n_mech + params.cavity_damping * basis.alpha_d_bar ** 2) / kappa
    t0, t0_capped = inverse_bose(n0, basis.energies)
    t_cav, t_cav_capped = inverse_bose(n_cav, basis.energies)
    return LinearDissipation(
        kappa=kappa, kappa_mech=k_mech, kappa_cav=k_cav, n0=n0, n_cav=n_cav,
        n_mech=n_mech, t0=np.asarray(t0), t_cav=np.asarray(t_cav),
        t0_capped=np.asarray(t0_capped), t_cav_capped=np.asarray(t_cav_capped),
        energies=np.array(basis.energies, dtype=float))


def near_2wm_occupancy(params: SystemParams) -> float:
    """Lowest-order occupancy of the phonon-like branch near ``Delta = -2 wM``.

    Asymptotic in ``G/wM``; assumes a zero-temperature mechanical bath and
    ``gamma << kappa``.
    """
    if params.mech_bath_occupancy > 0 or abs(params.detuning / params.mech_freq + 2.0) > 0.1:
        warnings.warn("near_2wm_occupancy outside its asymptotic regime", RegimeWarning, stacklevel=2)
    y = (params.many_photon_coupling / params.mech_freq) ** 2
    k = params.cavity_damping
    return (y * k / 9.0) / (params.mech_damping + 8.0 * y * k / 9.0)


def linear_state(params: SystemParams) -> tuple[PolaritonBasis, LinearDissipation]:
    """Convenience: basis and dissipation in one call."""
    basis = bogoliubov_coefficients(params)
    return basis, linear_dissipation(params, basis)
