"""Dyson equation and the self-consistent bubble iteration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import PoleError, SolverError
from ..model import MINUS, PLUS, LinearDissipation, PolaritonBasis
from .greens import GreenFunctionSet, bare_green
from .selfenergy import SelfEnergySet, bubble_self_energy

POLE_FLOOR = 1e-12
RESOLUTION_SPACINGS = 10


def dyson_solve(bare: GreenFunctionSet, sigma: SelfEnergySet) -> GreenFunctionSet:
    """Dress ``bare`` with ``sigma``.

    The result carries flags: ``unstable`` when the dressed damping turns
    negative somewhere, ``unresolved`` when a denominator comes within
    ten grid spacings of zero.
    """
    rs, ks = [], []
    flags = {"unstable": [], "unresolved": []}
    tail = bare.tail
    h = bare.spacing
    for s in (MINUS, PLUS):
        denom = 1.0 / bare.retarded[s] - sigma.retarded[s]
        smallest = float(np.min(np.abs(denom)))
        if not np.isfinite(smallest) or smallest < POLE_FLOOR:
            raise PoleError(f"Dyson denominator vanishes on the grid for sigma={'-+'[s]}")
        r = 1.0 / denom
        bath = -1j * tail.kappa[s] * (2.0 * tail.n0[s] + 1.0)
        k = r * (sigma.keldysh[s] + bath) * np.conj(r)
        k = 1j * k.imag
        if np.any(r.imag > 1e-12 * np.max(np.abs(r))):
            flags["unstable"].append("-+"[s])
        if smallest < RESOLUTION_SPACINGS * h:
            flags["unresolved"].append("-+"[s])
        rs.append(r)
        ks.append(k)
    new_tail = replace(tail, g_tilde=sigma.g_tilde)
    return GreenFunctionSet(bare.windows, tuple(rs), tuple(ks), new_tail,
                            {key: tuple(v) for key, v in flags.items()})


@dataclass
class ConvergenceReport:
    """Per-iteration sup-norm changes of the propagators.

    ``status`` is ``"converged"`` or ``"not_converged"``; a solve that ends
    in an unstable state keeps its status but lists it in ``flags``.
    """

    iterations: int = 0
    deltas: list = field(default_factory=list)
    status: str = "not_converged"
    tolerance: float = 1e-8
    mixing: float = 1.0
    flags: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def as_dict(self) -> dict:
        return {"iterations": self.iterations, "deltas": [float(d) for d in self.deltas],
                "status": self.status, "tolerance": self.tolerance,
                "mixing": self.mixing, "flags": {k: list(v) for k, v in self.flags.items()}}


def _sup_change(new, old):
    return max(np.max(np.abs(n - o)) / max(np.max(np.abs(n)), np.finfo(float).tiny)
               for n, o in zip(new, old))


def self_consistent_solve(basis: PolaritonBasis, dissipation: LinearDissipation,
                          g_tilde: float, windows, n_iter: int = 20, mixing: float = 1.0,
                          tol: float = 1e-8):
    """Iterate ``G <- Dyson(G0, bubble(G))`` from the bare propagators.

    Returns ``(G, Sigma, report)``.  Failure to converge is reported, not
    raised; non-finite intermediate values abort with ``SolverError``.
    """
    if not 0.0 < mixing <= 1.0:
        raise ValueError("mixing must lie in (0, 1]")
    bare = bare_green(basis, dissipation, windows)
    g = bare
    report = ConvergenceReport(tolerance=tol, mixing=mixing)
    sigma = SelfEnergySet.zeros(windows)
    for it in range(1, n_iter + 1):
        sigma = bubble_self_energy(g, g_tilde)
        new = dyson_solve(bare, sigma)
        for s in (MINUS, PLUS):
            if not (np.all(np.isfinite(new.retarded[s])) and np.all(np.isfinite(new.keldysh[s]))):
                raise SolverError(f"non-finite propagator at iteration {it}, sigma={'-+'[s]}")
        delta = max(_sup_change(new.retarded, g.retarded), _sup_change(new.keldysh, g.keldysh))
        report.deltas.append(float(delta))
        report.iterations = it
        if mixing < 1.0:
            rs = tuple(mixing * a + (1 - mixing) * b for a, b in zip(new.retarded, g.retarded))
            ks = tuple(mixing * a + (1 - mixing) * b for a, b in zip(new.keldysh, g.keldysh))
            new = GreenFunctionSet(new.windows, rs, ks, new.tail, new.flags)
        g = new
        if delta < tol:
            report.status = "converged"
            break
    report.flags = dict(g.flags)
    return g, sigma, report
