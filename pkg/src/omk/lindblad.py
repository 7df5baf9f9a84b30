"""Brute-force master-equation oracle in a truncated two-mode Fock space.

Density matrices are vectorized column-first, so ``vec(A X B) =
kron(B.T, A) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MemoryBudgetError, SolverError, TruncationError
from .keldysh.analysis import instability_report
from .model import MINUS, PLUS, LinearDissipation, PolaritonBasis, SystemParams, nonlinear_couplings

DEFAULT_DIMENSION_CAP = 250_000
DENSE_LIMIT = 4096
TAIL_TOLERANCE = 1e-6
HAMILTONIANS = ("resonant", "full")


def _lowering(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr")


def mode_operators(dims) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Annihilation operators of the lower and upper polariton."""
    n_m, n_p = dims
    c_minus = sp.kron(_lowering(n_m), sp.identity(n_p), format="csr")
    c_plus = sp.kron(sp.identity(n_m), _lowering(n_p), format="csr")
    return c_minus, c_plus


def expected_occupancies(dissipation: LinearDissipation, g_tilde: float) -> np.ndarray:
    """Leading-order occupancy estimate used to size the truncation."""
    n = np.array(dissipation.n0, dtype=float)
    if g_tilde != 0.0:
        rep = instability_report(dissipation, g_tilde)
        n[MINUS] = max(n[MINUS], rep.n_eff_minus_resonance)
    return n


def default_truncation(dissipation: LinearDissipation, g_tilde: float) -> tuple[int, int]:
    n = expected_occupancies(dissipation, g_tilde)
    if not np.all(np.isfinite(n)):
        raise TruncationError("expected occupancy is unbounded (unstable leading order)")
    return tuple(int(max(3, math.ceil(5.0 * (x + 1.0)))) for x in n)


def predicted_dimension(dims) -> int:
    return int(dims[0] * dims[1]) ** 2


def _full_interaction(basis: PolaritonBasis, g: float, dims, include_linear: bool):
    # g d^dag d (b + b^dag) built with three spare Fock layers, then cut back
    # so every retained matrix element is exact
    pad = (dims[0] + 3, dims[1] + 3)
    cm, cp = mode_operators(pad)
    ops = (cm, cp)
    d = sum(basis.alpha_d[s] * ops[s] + basis.alpha_d_bar[s] * ops[s].T for s in (MINUS, PLUS))
    x = sum(basis.beta[s] * (ops[s] + ops[s].T) for s in (MINUS, PLUS))
    h = g * (d.T @ d @ x)
    if not include_linear:
        # A_s c_s + h.c. with the A_s of the current basis, rescaled to this g
        a_terms = nonlinear_couplings(basis, g).linear_terms
        for s in (MINUS, PLUS):
            h = h - a_terms[s] * (ops[s] + ops[s].T)
    keep = np.array([i * pad[1] + j for i in range(dims[0]) for j in range(dims[1])])
    h = h.tocsr()[keep][:, keep]
    return 0.5 * (h + h.T.conj())


@dataclass(frozen=True, eq=False)
class LiouvillianModel:
    """Generator of the truncated master equation and its ingredients."""

    dims: tuple[int, int]
    hamiltonian_kind: str
    include_linear: bool
    superoperator: sp.csr_matrix
    hamiltonian: sp.csr_matrix
    lowering: tuple[sp.csr_matrix, sp.csr_matrix]
    basis: PolaritonBasis
    kappa: np.ndarray
    n0: np.ndarray
    g_tilde: float

    @property
    def hilbert_dimension(self) -> int:
        return self.dims[0] * self.dims[1]

    @property
    def charge_conserving(self) -> bool:
        return self.hamiltonian_kind == "resonant"

    def photon_operator(self) -> sp.csr_matrix:
        cm, cp = self.lowering
        return (sum(self.basis.alpha_d[s] * (cm, cp)[s] for s in (MINUS, PLUS))
                + sum(self.basis.alpha_d_bar[s] * (cm, cp)[s].T for s in (MINUS, PLUS))).tocsr()

    def charges(self) -> np.ndarray:
        """``n- + 2 n+`` of each product basis state (conserved by the resonant H)."""
        n_m, n_p = self.dims
        return (np.arange(n_m)[:, None] + 2 * np.arange(n_p)[None, :]).ravel()


def build_liouvillian(params: SystemParams, basis: PolaritonBasis,
                      dissipation: LinearDissipation, dims=None, hamiltonian: str = "resonant",
                      include_linear: bool = False,
                      dimension_cap: int = DEFAULT_DIMENSION_CAP) -> LiouvillianModel:
    """Assemble the Lindblad generator on ``dims = (N-, N+)`` Fock levels.

    ``hamiltonian="full"`` replaces the resonant three-wave term by the
    complete cubic interaction in the polariton basis; its normal-ordering
    linear terms are only kept with ``include_linear=True``.
    """
    if hamiltonian not in HAMILTONIANS:
        raise ValueError(f"hamiltonian must be one of {HAMILTONIANS}")
    g_tilde = basis.g_tilde
    expected = expected_occupancies(dissipation, g_tilde)
    if dims is None:
        dims = default_truncation(dissipation, g_tilde)
    dims = (int(dims[0]), int(dims[1]))
    if min(dims) < 2:
        raise TruncationError("need at least two Fock levels per mode")
    for s in (MINUS, PLUS):
        if not expected[s] < dims[s] / 5.0:
            raise TruncationError(
                f"expected occupancy {expected[s]:.3g} of branch {'-+'[s]} needs more than "
                f"{dims[s]} levels (rule: occupancy < N/5)")
    if predicted_dimension(dims) > dimension_cap:
        raise MemoryBudgetError(
            f"Liouvillian dimension {predicted_dimension(dims)} exceeds cap {dimension_cap}")

    cm, cp = mode_operators(dims)
    e = basis.energies
    h = e[MINUS] * (cm.T @ cm) + e[PLUS] * (cp.T @ cp)
    if hamiltonian == "resonant":
        h = h + g_tilde * (cp.T @ cm @ cm + cm.T @ cm.T @ cp)
    else:
        h = h + _full_interaction(basis, params.single_photon_coupling, dims, include_linear)
    h = sp.csr_matrix(h, dtype=complex)

    dim = h.shape[0]
    eye = sp.identity(dim, format="csr")
    liou = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for s, c in ((MINUS, cm), (PLUS, cp)):
        k, n = dissipation.kappa[s], dissipation.n0[s]
        for rate, op in ((0.5 * k * (n + 1.0), c), (0.5 * k * n, c.T.tocsr())):
            if rate == 0.0:
                continue
            nop = (op.conj().T @ op).tocsr()
            liou = liou + rate * (2.0 * sp.kron(op.conj(), op) - sp.kron(eye, nop)
                                  - sp.kron(nop.T, eye))
    return LiouvillianModel(dims, hamiltonian, include_linear, liou.tocsr(), h,
                            (cm, cp), basis, np.array(dissipation.kappa),
                            np.array(dissipation.n0), float(g_tilde))


@dataclass(frozen=True, eq=False)
class SteadyState:
    rho: np.ndarray
    residual: float
    tail_mass: float
    min_eigenvalue: float
    flags: dict = field(default_factory=dict)

    def expectation(self, op) -> complex:
        return complex(np.trace(op @ self.rho))


def _operator_norm(liou) -> float:
    return float(spla.norm(liou, 1))


def _inverse_iteration(solve, start, matvec, dim, norm, max_iter=30):
    x = start
    for _ in range(max_iter):
        x = solve(x)
        x = x / x.reshape(dim, dim, order="F").trace()
        res = np.linalg.norm(matvec(x)) / norm
        if res < 1e-10:
            return x, res
    return x, res


def _charge_sectors(model: LiouvillianModel) -> np.ndarray:
    q = model.charges()
    # vec index k = i + j * d carries charge q_i - q_j
    return (q[:, None] - q[None, :]).ravel(order="F")


def _sparse_solver(model: LiouvillianModel, liou: sp.csr_matrix, norm: float):
    eye = sp.identity(liou.shape[0], format="csr")
    if model.charge_conserving:
        return spla.splu((liou + 1e-9 * norm * eye).tocsc()).solve
    # The non-resonant terms of the full Hamiltonian fill in a direct LU
    # badly.  They are small and off-resonant, so the charge-conserving part
    # of the generator is an excellent preconditioner for GMRES.  A milder
    # shift keeps the Krylov solve well conditioned; the damping gap is still
    # orders of magnitude larger, so inverse iteration converges quickly.
    shifted = (liou + 1e-6 * norm * eye).tocsr()
    sector = _charge_sectors(model)
    coo = shifted.tocoo()
    keep = sector[coo.row] == sector[coo.col]
    diag_part = sp.csc_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])), shape=shifted.shape)
    pre = spla.splu(diag_part)
    m_op = spla.LinearOperator(shifted.shape, matvec=pre.solve, dtype=complex)

    def solve(v):
        x, info = spla.gmres(shifted, v, M=m_op, rtol=1e-12, atol=0.0, restart=80, maxiter=100)
        if info != 0:
            raise SolverError(f"preconditioned GMRES did not converge (info {info})")
        return x

    return solve


def steady_state(model: LiouvillianModel) -> SteadyState:
    """Null vector of the generator by shifted inverse iteration.

    Two different starting states are propagated; if they land on
    different fixed points the null space is flagged degenerate.
    """
    liou = model.superoperator
    dim = model.hilbert_dimension
    norm = _operator_norm(liou)
    shift = 1e-9 * norm
    n = liou.shape[0]
    if n <= DENSE_LIMIT:
        lu = sla.lu_factor(liou.toarray() + shift * np.eye(n))
        solve = lambda v: sla.lu_solve(lu, v)
    else:
        solve = _sparse_solver(model, liou, norm)
    mixed = np.eye(dim, dtype=complex).ravel(order="F") / dim
    vacuum = np.zeros(n, dtype=complex)
    vacuum[0] = 1.0
    x1, r1 = _inverse_iteration(solve, mixed, liou.dot, dim, norm)
    if not r1 < 1e-10:
        raise SolverError(f"steady-state solver did not converge (residual {r1:.3g})")
    x2, _ = _inverse_iteration(solve, vacuum, liou.dot, dim, norm)
    rho = x1.reshape(dim, dim, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    flags = {}
    if np.linalg.norm(x2.reshape(dim, dim, order="F") - rho) > 1e-6:
        flags["degenerate_null_space"] = True
    eig_min = float(np.min(np.linalg.eigvalsh(rho)))
    pops = np.real(np.diag(rho)).reshape(model.dims)
    top = np.zeros(model.dims, dtype=bool)
    top[-2:, :] = True
    top[:, -2:] = True
    tail = float(pops[top].sum())
    if tail >= TAIL_TOLERANCE:
        flags["truncation_tail"] = tail
    if eig_min < -1e-10:
        flags["negative_eigenvalue"] = eig_min
    residual = float(np.linalg.norm(liou @ rho.ravel(order="F")) / norm)
    return SteadyState(rho, residual, tail, eig_min, flags)


def occupancies(model: LiouvillianModel, state: SteadyState) -> np.ndarray:
    """``<c_s^dag c_s>`` for both branches."""
    return np.array([state.expectation(c.T @ c).real for c in model.lowering])


def _sector_blocks(model: LiouvillianModel):
    n = model.superoperator.shape[0]
    if not model.charge_conserving:
        return [np.arange(n)]
    sector = _charge_sectors(model)
    return [np.flatnonzero(sector == v) for v in np.unique(sector)]


class _BlockResolvent:
    """``u^T (-(L_b + i w))^{-1} v`` over frequencies for one invariant block.

    Small blocks are reduced once to complex Schur form so each frequency
    costs a triangular solve; large blocks get a sparse LU per frequency.
    """

    def __init__(self, block: sp.csr_matrix):
        self.block = block
        self.size = block.shape[0]
        self.schur = None
        if self.size <= DENSE_LIMIT:
            self.schur = sla.schur(block.toarray(), output="complex")

    def apply(self, u, vs, omega) -> list[np.ndarray]:
        outs = [np.empty(omega.shape, dtype=complex) for _ in vs]
        if self.schur is not None:
            t, z = self.schur
            uz = u @ z
            rhs = np.column_stack([z.conj().T @ v for v in vs])
            diag = np.diag(t).copy()
            for i, w in enumerate(omega):
                np.fill_diagonal(t, diag + 1j * w)
                try:
                    y = sla.solve_triangular(t, rhs, check_finite=False)
                    vals = -(uz @ y)
                except (np.linalg.LinAlgError, ValueError):
                    vals = np.full(len(vs), np.nan)
                for out, val in zip(outs, np.atleast_1d(vals)):
                    out[i] = val
            np.fill_diagonal(t, diag)
            return outs
        eye = sp.identity(self.size, format="csc")
        rhs = np.column_stack(vs)
        for i, w in enumerate(omega):
            try:
                y = spla.splu((self.block + 1j * w * eye).tocsc()).solve(rhs)
                vals = -(u @ y)
            except RuntimeError:
                vals = np.full(len(vs), np.nan)
            for out, val in zip(outs, np.atleast_1d(vals)):
                out[i] = val
        return outs


def regression_response(model: LiouvillianModel, state: SteadyState, omega):
    """Cavity spectrum ``S_d`` and cavity DOS ``rho_d`` from the regression theorem.

    The stationary mean ``<d>`` is removed first, so a coherent delta peak
    at ``omega = 0`` (present only with the full Hamiltonian) is excluded.
    Frequencies where the resolvent solve fails are returned as NaN.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    d_op = model.photon_operator()
    rho = state.rho
    mean = np.trace(d_op @ rho)
    dim = model.hilbert_dimension
    d_dense = d_op.toarray() - mean * np.eye(dim)
    dd = d_dense.conj().T
    u = d_dense.T.ravel(order="F")
    v_spec = (rho @ dd).ravel(order="F")
    v_comm = (dd @ rho - rho @ dd).ravel(order="F")
    liou = model.superoperator
    spec = np.zeros(omega.shape, dtype=complex)
    dos = np.zeros(omega.shape, dtype=complex)
    for idx in _sector_blocks(model):
        if not (np.any(v_spec[idx]) or np.any(v_comm[idx])) or not np.any(u[idx]):
            continue
        block = liou[idx][:, idx]
        s_part, d_part = _BlockResolvent(block).apply(u[idx], (v_spec[idx], v_comm[idx]), omega)
        spec += s_part
        dos += d_part
    return 2.0 * spec.real, dos.real / np.pi


def regression_spectrum(model: LiouvillianModel, state: SteadyState, omega) -> np.ndarray:
    return regression_response(model, state, omega)[0]
