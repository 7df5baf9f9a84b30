"""Execute scenarios point by point and serialize the results."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classical import classical_spectrum, series_line_weight
from .errors import (BandError, CutoffError, DomainError, OmkError, PoleError, SolverError,
                     TruncationError, WindowError)
from .keldysh import (bare_green, distribution_function, dyson_solve, instability_report,
                      interaction_occupancies, leading_self_energy, self_consistent_solve,
                      total_occupancy, windows_for)
from .keldysh.closed_forms import cooperativities
from .lindblad import build_liouvillian, occupancies, regression_response, steady_state
from .model import MINUS, PLUS, inverse_bose, linear_state, near_2wm_occupancy
from .scenario import Scenario, lindblad_dims, lindblad_points
from .spectrum import cavity_spectrum, integrated_flux, red_sideband_flux, two_phonon_peak

# per-point problems that leave the rest of the sweep meaningful
SOFT_ERRORS = (DomainError, WindowError, PoleError, TruncationError, CutoffError, BandError)

SWEEP_UNITS = {
    "omega_m_over_kappa": "kappa", "detuning_over_omega_m": "omega_m",
    "coupling_over_omega_m": "omega_m", "g_over_kappa": "kappa",
    "gamma_over_kappa": "kappa", "n_th": "1",
}

_PAIR = ("minus", "plus")


def _pairs(name, unit):
    return [(f"{name}_{s}", unit) for s in _PAIR]


COLUMNS = {
    "linear_sweep": (
        _pairs("E", "kappa") + _pairs("kappa", "kappa") + _pairs("kappa_mech", "kappa")
        + _pairs("kappa_cav", "kappa") + _pairs("n0", "1") + _pairs("n_cav", "1")
        + _pairs("T0", "kappa") + _pairs("T_cav", "kappa") + _pairs("alpha_d", "1")
        + _pairs("alpha_d_bar", "1") + _pairs("alpha_b", "1") + _pairs("alpha_b_bar", "1")
        + [("g_tilde", "kappa")]),
    "cooperativity_sweep": (
        _pairs("E", "kappa") + [("g_tilde", "kappa")] + _pairs("C", "1")
        + _pairs("kappa", "kappa") + _pairs("n0", "1") + _pairs("n_int", "1")),
    "bath_occupancy_sweep": (
        _pairs("E", "kappa") + _pairs("n0", "1") + _pairs("n_mech", "1") + _pairs("n_cav", "1")
        + _pairs("T0", "kappa") + [("n0_minus_near_2wm", "1")]),
    "spectrum_point": [("block", "-"), ("omega", "kappa"), ("rho_d", "1/kappa"),
                       ("S_d", "1/kappa"), ("n_eff_d", "1"), ("T_eff_d", "kappa")],
    "flux_vs_G": (
        _pairs("E", "kappa") + _pairs("flux", "1") + _pairs("formula_flux", "1")
        + _pairs("occupancy", "1") + _pairs("C", "1")),
    "instability_scan": (
        _pairs("C", "1") + _pairs("n0", "1")
        + [("occupancy_inverted", "-"), ("unstable", "-"), ("near_threshold", "-"),
           ("threshold_occupancy", "1"), ("total_damping_minus", "kappa"),
           ("n_eff_minus_resonance", "1"), ("n_eff_minus_paramp", "1"),
           ("n_eff_minus_pumped", "1"), ("n_eff_minus_at_E_minus", "1"),
           ("n_eff_d_at_E_minus", "1"), ("iterations", "-"), ("converged", "-")]),
    "two_phonon": [("E_plus", "kappa"), ("gamma_opt", "kappa"), ("width", "kappa"),
                   ("height", "1/kappa"), ("weight", "1"), ("weight_without_gamma_opt", "1"),
                   ("classical_weight", "1"), ("n0_minus", "1")],
    "classical_check": [("quantum_weight", "1"), ("classical_weight", "1"),
                        ("relative_difference", "1"), ("series_weight", "1"),
                        ("series_relative_difference", "1")],
}


@dataclass
class PointResult:
    index: int
    rows: list
    diagnostics: dict = field(default_factory=dict)
    failure: dict | None = None


@dataclass
class RunResult:
    scenario: Scenario
    points: list
    cross_checks: list
    csv_text: str
    status: str
    exit_code: int
    error: str | None = None


def header(scen: Scenario) -> list[str]:
    cols = []
    if scen.sweep_key:
        cols.append(f"{scen.sweep_key} [{SWEEP_UNITS[scen.sweep_key]}]")
    cols += ["detuning [kappa]", "coupling [kappa]"]
    cols += [f"{n} [{u}]" for n, u in COLUMNS[scen.kind]]
    cols.append("solver")
    return cols


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _pair_values(prefix, arr):
    return {f"{prefix}_{s}": float(arr[i]) for i, s in enumerate(_PAIR)}


# ---- kinds -----------------------------------------------------------------

def _linear_sweep(scen, params):
    basis, diss = linear_state(params)
    row = {}
    row.update(_pair_values("E", basis.energies))
    row.update(_pair_values("kappa", diss.kappa))
    row.update(_pair_values("kappa_mech", diss.kappa_mech))
    row.update(_pair_values("kappa_cav", diss.kappa_cav))
    row.update(_pair_values("n0", diss.n0))
    row.update(_pair_values("n_cav", diss.n_cav))
    row.update(_pair_values("T0", diss.t0))
    row.update(_pair_values("T_cav", diss.t_cav))
    for name in ("alpha_d", "alpha_d_bar", "alpha_b", "alpha_b_bar"):
        row.update(_pair_values(name, getattr(basis, name)))
    row["g_tilde"] = basis.g_tilde
    diag = {"t0_capped": diss.t0_capped, "t_cav_capped": diss.t_cav_capped,
            "normalization_defects": basis.normalization_defects()}
    return [row], diag


def _cooperativity_sweep(scen, params):
    basis, diss = linear_state(params)
    c_minus, c_plus = cooperativities(diss.kappa, diss.n0, basis.g_tilde)
    n_int = interaction_occupancies(diss.n0)
    row = {}
    row.update(_pair_values("E", basis.energies))
    row["g_tilde"] = basis.g_tilde
    row.update({"C_minus": c_minus, "C_plus": c_plus})
    row.update(_pair_values("kappa", diss.kappa))
    row.update(_pair_values("n0", diss.n0))
    row.update(_pair_values("n_int", n_int))
    return [row], {"resonance_mismatch": float(basis.energies[PLUS] - 2 * basis.energies[MINUS])}


def _bath_occupancy_sweep(scen, params):
    basis, diss = linear_state(params)
    row = {}
    row.update(_pair_values("E", basis.energies))
    row.update(_pair_values("n0", diss.n0))
    row.update(_pair_values("n_mech", diss.n_mech))
    row.update(_pair_values("n_cav", diss.n_cav))
    row.update(_pair_values("T0", diss.t0))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        row["n0_minus_near_2wm"] = near_2wm_occupancy(params)
    return [row], {"near_2wm_outside_regime": bool(caught)}


def _green(scen, basis, diss, solver):
    """Propagators for the Keldysh solvers; ``linear`` ignores the interaction."""
    opts = scen.options
    g_tilde = 0.0 if solver == "linear" else basis.g_tilde
    wins = windows_for(basis, diss, g_tilde, spacing=opts["spacing"], half_width=opts["half_width"])
    diag = {"spacing": wins[MINUS].spacing, "window_points": wins[MINUS].n_points}
    if solver == "linear":
        return bare_green(basis, diss, wins), diag
    if solver == "leading":
        g = dyson_solve(bare_green(basis, diss, wins), leading_self_energy(basis, diss, g_tilde, wins))
        diag["flags"] = dict(g.flags)
        return g, diag
    g, _, report = self_consistent_solve(basis, diss, g_tilde, wins, n_iter=opts["n_iter"],
                                         mixing=opts["mixing"], tol=opts["tolerance"])
    diag["convergence"] = report.as_dict()
    return g, diag


def _lindblad(scen, params, basis, diss):
    dims = lindblad_dims(scen, params)
    model = build_liouvillian(params, basis, diss, dims=dims, hamiltonian=scen.options["hamiltonian"],
                              dimension_cap=scen.options["dimension_cap"])
    state = steady_state(model)
    diag = {"dims": list(dims), "residual": state.residual, "tail_mass": state.tail_mass,
            "min_eigenvalue": state.min_eigenvalue, "flags": dict(state.flags)}
    return model, state, diag


def _spectrum_grid(scen, basis):
    span, n = scen.options["spectrum_half_span"], scen.options["spectrum_points"]
    blocks = []
    for s in (MINUS, PLUS):
        blocks.append((_PAIR[s], np.linspace(basis.energies[s] - span, basis.energies[s] + span, n)))
    return blocks


def _rows_from_spectrum(blocks, rho, s_d):
    rows, k = [], 0
    for name, w in blocks:
        for x in w:
            r, s = rho[k], s_d[k]
            n_eff = s / (2 * math.pi * r) if r > 0 else math.nan
            rows.append({"block": name, "omega": x, "rho_d": r, "S_d": s, "n_eff_d": n_eff})
            k += 1
    return rows


def _spectrum_point(scen, params):
    basis, diss = linear_state(params)
    blocks = _spectrum_grid(scen, basis)
    omega = np.concatenate([w for _, w in blocks])
    diag = {}
    if scen.solver == "lindblad":
        model, state, diag["lindblad"] = _lindblad(scen, params, basis, diss)
        s_d, rho = regression_response(model, state, omega)
        rows = _rows_from_spectrum(blocks, rho, s_d)
        for row in rows:
            n = row["n_eff_d"]
            row["T_eff_d"] = float(inverse_bose(n, row["omega"])[0]) if n == n and n >= 0 else math.nan
        diag["occupancies"] = occupancies(model, state)
        return rows, diag
    g, diag["keldysh"] = _green(scen, basis, diss, scen.solver)
    res = cavity_spectrum(basis, g, omega)
    rows = []
    k = 0
    for name, w in blocks:
        for x in w:
            rows.append({"block": name, "omega": x, "rho_d": res.rho_d[k], "S_d": res.s_d[k],
                         "n_eff_d": res.n_eff_d[k], "T_eff_d": res.t_eff_d[k]})
            k += 1
    diag["occupancies"] = [total_occupancy(g, s) for s in (MINUS, PLUS)]
    diag["t_eff_capped_points"] = int(np.count_nonzero(res.t_eff_capped))
    diag["masked_points"] = int(np.count_nonzero(res.mask))
    return rows, diag


def _band(center, half_width, spacing):
    lo = math.floor((center - half_width) / spacing)
    hi = math.ceil((center + half_width) / spacing)
    return np.arange(lo, hi + 1) * spacing


def _flux_vs_G(scen, params):
    basis, diss = linear_state(params)
    B = scen.options["band_half_width"]
    c_minus, c_plus = cooperativities(diss.kappa, diss.n0, basis.g_tilde)
    row = {}
    row.update(_pair_values("E", basis.energies))
    diag = {}
    if scen.solver == "lindblad":
        flux, occ, diag["lindblad"] = _lindblad_flux(scen, params, basis, diss)
    else:
        g, diag["keldysh"] = _green(scen, basis, diss, scen.solver)
        flux = []
        for s in (MINUS, PLUS):
            res = cavity_spectrum(basis, g, _band(basis.energies[s], B, g.spacing))
            flux.append(integrated_flux(res, basis.energies[s], B))
        occ = [total_occupancy(g, s) for s in (MINUS, PLUS)]
    row.update(_pair_values("flux", flux))
    if abs(params.detuning + params.mech_freq) < 1e-9 * params.mech_freq:
        row.update(_pair_values("formula_flux", red_sideband_flux(params.many_photon_coupling,
                                                                  params.mech_freq)))
    else:
        row.update({"formula_flux_minus": math.nan, "formula_flux_plus": math.nan})
    row.update(_pair_values("occupancy", occ))
    row.update({"C_minus": c_minus, "C_plus": c_plus})
    return [row], diag


def _lindblad_flux(scen, params, basis, diss):
    B, n = scen.options["band_half_width"], scen.options["band_points"]
    model, state, diag = _lindblad(scen, params, basis, diss)
    flux = []
    for s in (MINUS, PLUS):
        w = np.linspace(basis.energies[s] - B, basis.energies[s] + B, n)
        s_d, _ = regression_response(model, state, w)
        flux.append(float(np.trapezoid(s_d, w) / (2 * math.pi)))
    return flux, occupancies(model, state), diag


def _instability_scan(scen, params):
    basis, diss = linear_state(params)
    rep = instability_report(diss, basis.g_tilde)
    row = {"C_minus": rep.c_minus, "C_plus": rep.c_plus}
    row.update(_pair_values("n0", diss.n0))
    for key in ("occupancy_inverted", "unstable", "near_threshold", "threshold_occupancy",
                "total_damping_minus", "n_eff_minus_resonance", "n_eff_minus_paramp",
                "n_eff_minus_pumped"):
        row[key] = getattr(rep, key)
    diag = {}
    g, diag["keldysh"] = _green(scen, basis, diss, scen.solver)
    e_minus = basis.energies[MINUS]
    n_minus, _ = distribution_function(g)
    i = int(np.argmin(np.abs(g.windows[MINUS].omega - e_minus)))
    row["n_eff_minus_at_E_minus"] = None if np.ma.is_masked(n_minus[i]) else float(n_minus[i])
    spec = cavity_spectrum(basis, g, np.array([g.windows[MINUS].omega[i]]))
    row["n_eff_d_at_E_minus"] = float(spec.n_eff_d[0])
    conv = diag["keldysh"].get("convergence")
    row["iterations"] = conv["iterations"] if conv else 0
    row["converged"] = conv["status"] == "converged" if conv else True
    return [row], diag


def _two_phonon(scen, params):
    basis, diss = linear_state(params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        peak = two_phonon_peak(params)
        bare = two_phonon_peak(params, include_optical_damping=False, warn=False)
    row = {"E_plus": basis.energies[PLUS], "gamma_opt": peak.gamma_opt, "width": peak.width,
           "height": peak.height, "weight": peak.weight, "weight_without_gamma_opt": bare.weight,
           "classical_weight": classical_spectrum(params).weight, "n0_minus": diss.n0[MINUS]}
    return [row], {"regime_warnings": [str(w.message) for w in caught]}


def _classical_check(scen, params):
    q = two_phonon_peak(params, include_optical_damping=False, warn=False).weight
    line = classical_spectrum(params)
    c = line.weight
    series = series_line_weight(params)
    rel = abs(q - c) / c if c else 0.0
    srel = abs(series - c) / c if c else 0.0
    row = {"quantum_weight": q, "classical_weight": c, "relative_difference": rel,
           "series_weight": series, "series_relative_difference": srel}
    return [row], {"flags": list(line.flags)}


KIND_FUNCS = {
    "linear_sweep": _linear_sweep, "cooperativity_sweep": _cooperativity_sweep,
    "bath_occupancy_sweep": _bath_occupancy_sweep, "spectrum_point": _spectrum_point,
    "flux_vs_G": _flux_vs_G, "instability_scan": _instability_scan,
    "two_phonon": _two_phonon, "classical_check": _classical_check,
}


# ---- execution -------------------------------------------------------------

def _prefix(scen, i, params):
    pre = {}
    if scen.sweep_key:
        pre["sweep"] = scen.sweep_values[i]
    if params is not None:
        pre["detuning"] = params.detuning
        pre["coupling"] = params.many_photon_coupling
    return pre


def run_point(args) -> PointResult:
    scen, i = args
    params = None
    try:
        params = scen.system_params(i)
        rows, diag = KIND_FUNCS[scen.kind](scen, params)
    except SOFT_ERRORS as exc:
        pre = _prefix(scen, i, params)
        return PointResult(i, [pre], {}, {"type": type(exc).__name__, "message": str(exc)})
    pre = _prefix(scen, i, params)
    return PointResult(i, [{**pre, **r} for r in rows], diag)


def cross_check_point(args) -> dict:
    """Master-equation comparison at one sweep point of a Keldysh run."""
    scen, i, keldysh = args
    params = scen.system_params(i)
    basis, diss = linear_state(params)
    out = {"index": i}
    if scen.sweep_key:
        out["sweep_value"] = scen.sweep_values[i]
    try:
        if scen.kind == "flux_vs_G":
            flux, occ, out["lindblad"] = _lindblad_flux(scen, params, basis, diss)
            row = keldysh.rows[0]
            k_flux = [row.get("flux_minus"), row.get("flux_plus")]
            out["lindblad_flux"] = flux
            out["keldysh_flux"] = k_flux
            out["lindblad_occupancy"] = occ
            if None not in k_flux:
                out["flux_relative_difference"] = [abs(a - b) / abs(b) for a, b in zip(k_flux, flux)]
        else:
            blocks = _spectrum_grid(scen, basis)
            omega = np.concatenate([w for _, w in blocks])
            model, state, out["lindblad"] = _lindblad(scen, params, basis, diss)
            s_l, _ = regression_response(model, state, omega)
            s_k = np.array([r["S_d"] for r in keldysh.rows])
            out["lindblad_occupancy"] = occupancies(model, state)
            out["keldysh_occupancy"] = keldysh.diagnostics.get("occupancies")
            out["max_pointwise_deviation"] = float(np.max(np.abs(s_k - s_l)) / np.max(np.abs(s_l)))
            n = len(blocks[0][1])
            out["peak_ratio"] = [float(s_k[:n].max() / s_l[:n].max()),
                                 float(s_k[n:].max() / s_l[n:].max())]
    except SOFT_ERRORS as exc:
        out["failure"] = {"type": type(exc).__name__, "message": str(exc)}
    return out


def _map(func, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def render_csv(scen: Scenario, points: list[PointResult]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header(scen))
    keys = (["sweep"] if scen.sweep_key else []) + ["detuning", "coupling"] \
        + [n for n, _ in COLUMNS[scen.kind]]
    for p in points:
        for row in p.rows:
            writer.writerow([_fmt(row.get(k)) for k in keys] + [scen.solver])
    return buf.getvalue()


def execute(scen: Scenario, workers: int = 1) -> RunResult:
    """Run every point.  Hard solver failures abort with exit code 1."""
    try:
        points = _map(run_point, [(scen, i) for i in range(scen.n_points)], workers)
        checks = []
        if scen.solver != "lindblad" and scen.options["lindblad_check"]:
            idx = lindblad_points(scen)
            todo = [(scen, i, points[i]) for i in idx if points[i].failure is None]
            checks = _map(cross_check_point, todo, workers)
    except (SolverError, OmkError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return RunResult(scen, [], [], "", "solver_failure", 1, f"{type(exc).__name__}: {exc}")
    status = "ok" if all(p.failure is None for p in points) else "ok_with_soft_failures"
    return RunResult(scen, points, checks, render_csv(scen, points), status, 0)


def summary(result: RunResult, extra: dict | None = None) -> dict:
    scen = result.scenario
    out = {
        "tool": "omk",
        "version": __version__,
        "scenario": scen.snapshot(),
        "status": result.status,
        "exit_code": result.exit_code,
        "error": result.error,
        "columns": header(scen),
        "points": [{"index": p.index,
                    "sweep_value": scen.sweep_values[p.index] if scen.sweep_key else None,
                    "status": "failed" if p.failure else "ok",
                    "failure": p.failure,
                    "diagnostics": p.diagnostics} for p in result.points],
        "convergence": [p.diagnostics.get("keldysh", {}).get("convergence")
                        for p in result.points],
        "cross_checks": result.cross_checks,
    }
    if extra:
        out.update(extra)
    return _json_safe(out)


def render_json(data: dict) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"
