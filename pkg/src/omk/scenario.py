"""Flat ``key = value`` scenario files.

One parameter may be swept, written either as ``start:stop:count`` or as a
comma separated list.  Everything is in units of the cavity linewidth,
except ``detuning_over_omega_m`` and ``coupling_over_omega_m`` which are
fractions of the mechanical frequency.  ``coupling_over_omega_m = res``
picks the resonant drive at every detuning.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, OmkError
from .lindblad import DEFAULT_DIMENSION_CAP, HAMILTONIANS, default_truncation, predicted_dimension
from .model import MECH_BATH_MODELS, SystemParams, g_res, linear_state

KINDS = ("linear_sweep", "cooperativity_sweep", "bath_occupancy_sweep", "spectrum_point",
         "flux_vs_G", "instability_scan", "two_phonon", "classical_check")

SOLVERS = ("linear", "leading", "self_consistent", "lindblad", "analytic")

ALLOWED_SOLVERS = {
    "linear_sweep": ("linear",),
    "cooperativity_sweep": ("leading",),
    "bath_occupancy_sweep": ("linear",),
    "spectrum_point": ("linear", "leading", "self_consistent", "lindblad"),
    "flux_vs_G": ("linear", "leading", "self_consistent", "lindblad"),
    "instability_scan": ("leading", "self_consistent"),
    "two_phonon": ("analytic",),
    "classical_check": ("analytic",),
}

# sweepable physical knobs and their defaults
PARAM_KEYS = {
    "omega_m_over_kappa": 50.0,
    "detuning_over_omega_m": -1.0,
    "coupling_over_omega_m": "res",
    "g_over_kappa": 1.0,
    "gamma_over_kappa": 1e-4,
    "n_th": 0.0,
}

OPTION_KEYS = {
    "name": None,
    "kind": None,
    "solver": None,
    "mech_bath_model": "flat",
    "n_iter": 20,
    "mixing": 1.0,
    "tolerance": 1e-8,
    "spacing": None,
    "half_width": None,
    "fock_cutoff": "auto",
    "hamiltonian": "resonant",
    "dimension_cap": DEFAULT_DIMENSION_CAP,
    "band_half_width": 5.0,
    "band_points": 1001,
    "spectrum_half_span": 3.0,
    "spectrum_points": 601,
    "lindblad_check": 0,
}

SWEEP_FREE_KINDS = ("spectrum_point",)


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    solver: str
    sweep_key: str | None
    sweep_values: tuple[float, ...]
    params: dict
    options: dict
    source: str = ""
    raw: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return len(self.sweep_values) if self.sweep_key else 1

    def point_values(self, i: int) -> dict:
        vals = dict(self.params)
        if self.sweep_key:
            vals[self.sweep_key] = self.sweep_values[i]
        return vals

    def system_params(self, i: int) -> SystemParams:
        return build_params(self.point_values(i), self.options["mech_bath_model"])

    def snapshot(self) -> dict:
        return {"name": self.name, "kind": self.kind, "solver": self.solver,
                "sweep_key": self.sweep_key, "sweep_values": list(self.sweep_values),
                "params": dict(self.params), "options": dict(self.options)}


def build_params(values: dict, mech_bath_model: str = "flat") -> SystemParams:
    wm = values["omega_m_over_kappa"]
    delta = values["detuning_over_omega_m"] * wm
    coupling = values["coupling_over_omega_m"]
    G = g_res(delta, wm) if coupling == "res" else coupling * wm
    return SystemParams(detuning=delta, mech_freq=wm, many_photon_coupling=G,
                        single_photon_coupling=values["g_over_kappa"],
                        mech_damping=values["gamma_over_kappa"],
                        mech_bath_occupancy=values["n_th"], mech_bath_model=mech_bath_model)


def _number(key: str, text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: value must be finite, got {text!r}")
    return x


def _parse_sweep(key: str, text: str) -> tuple[float, ...] | None:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key}: range must be start:stop:count, got {text!r}")
        start, stop = _number(key, parts[0]), _number(key, parts[1])
        try:
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"{key}: range count must be an integer, got {parts[2]!r}") from None
        if count < 1:
            raise ConfigError(f"{key}: empty sweep range")
        vals = np.linspace(start, stop, count)
    elif "," in text:
        items = [t.strip() for t in text.split(",")]
        if any(not t for t in items):
            raise ConfigError(f"{key}: empty entry in list {text!r}")
        vals = np.array([_number(key, t) for t in items])
    else:
        return None
    return tuple(float(v) for v in np.sort(vals))


def _parse_int(key, text, minimum):
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if v < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}")
    return v


def _parse_options(raw: dict) -> dict:
    opts = dict(OPTION_KEYS)
    for key in OPTION_KEYS:
        if key in raw:
            opts[key] = raw[key]
    if opts["kind"] is None:
        raise ConfigError("missing required key 'kind'")
    if opts["kind"] not in KINDS:
        raise ConfigError(f"kind: unknown scenario kind {opts['kind']!r}; expected one of {KINDS}")
    if opts["solver"] is None:
        opts["solver"] = ALLOWED_SOLVERS[opts["kind"]][0]
    if opts["solver"] not in ALLOWED_SOLVERS[opts["kind"]]:
        raise ConfigError(f"solver {opts['solver']!r} not available for {opts['kind']}; "
                          f"choose from {ALLOWED_SOLVERS[opts['kind']]}")
    if opts["mech_bath_model"] not in MECH_BATH_MODELS:
        raise ConfigError(f"mech_bath_model must be one of {MECH_BATH_MODELS}")
    if opts["hamiltonian"] not in HAMILTONIANS:
        raise ConfigError(f"hamiltonian must be one of {HAMILTONIANS}")
    for key, minimum in (("n_iter", 1), ("dimension_cap", 1), ("band_points", 3),
                         ("spectrum_points", 3), ("lindblad_check", 0)):
        opts[key] = _parse_int(key, str(opts[key]), minimum)
    for key in ("mixing", "tolerance", "band_half_width", "spectrum_half_span"):
        opts[key] = _number(key, str(opts[key]))
        if opts[key] <= 0:
            raise ConfigError(f"{key}: must be positive")
    if opts["mixing"] > 1:
        raise ConfigError("mixing: must lie in (0, 1]")
    for key in ("spacing", "half_width"):
        if opts[key] is not None:
            opts[key] = _number(key, str(opts[key]))
            if opts[key] <= 0:
                raise ConfigError(f"{key}: must be positive")
    fc = str(opts["fock_cutoff"])
    if fc != "auto":
        opts["fock_cutoff"] = _parse_int("fock_cutoff", fc, 2)
    if opts["lindblad_check"] and opts["kind"] not in ("spectrum_point", "flux_vs_G"):
        raise ConfigError("lindblad_check only applies to spectrum_point and flux_vs_G")
    return opts


def _read_raw(text: str) -> dict:
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), interpolation=None,
                                   strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from None
    if cp.sections() != ["scenario"]:
        raise ConfigError("section headers are not allowed in scenario files")
    raw = {k: v.strip() for k, v in cp["scenario"].items()}
    unknown = sorted(set(raw) - set(PARAM_KEYS) - set(OPTION_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    for k, v in raw.items():
        if v == "":
            raise ConfigError(f"{k}: empty value")
    return raw


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    raw = _read_raw(text)
    opts = _parse_options(raw)
    params, sweep_key, sweep = {}, None, ()
    for key, default in PARAM_KEYS.items():
        text_val = raw.get(key)
        if text_val is None:
            params[key] = default
            continue
        if key == "coupling_over_omega_m" and text_val == "res":
            params[key] = "res"
            continue
        values = _parse_sweep(key, text_val)
        if values is None:
            params[key] = _number(key, text_val)
            continue
        if sweep_key is not None:
            raise ConfigError(f"only one swept parameter allowed ({sweep_key} and {key})")
        sweep_key, sweep = key, values
        params[key] = None
    if sweep_key and opts["kind"] in SWEEP_FREE_KINDS:
        raise ConfigError(f"{opts['kind']} takes a single parameter point; {sweep_key} is swept")
    opts["name"] = opts["name"] or name
    scen = Scenario(opts["name"], opts["kind"], opts["solver"], sweep_key, sweep, params, opts,
                    raw=raw)
    _check_points(scen)
    return scen


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from None
    scen = parse_scenario(text, name=path.stem)
    return Scenario(scen.name, scen.kind, scen.solver, scen.sweep_key, scen.sweep_values,
                    scen.params, scen.options, str(path), scen.raw)


def lindblad_dims(scen: Scenario, params: SystemParams):
    basis, diss = linear_state(params)
    fc = scen.options["fock_cutoff"]
    return (fc, fc) if fc != "auto" else default_truncation(diss, basis.g_tilde)


def lindblad_points(scen: Scenario) -> list[int]:
    """Sweep indices that get a master-equation cross-check."""
    k = scen.options["lindblad_check"]
    if scen.solver == "lindblad":
        return list(range(scen.n_points))
    if k == 0:
        return []
    return sorted(set(int(round(x)) for x in np.linspace(0, scen.n_points - 1, min(k, scen.n_points))))


def _check_points(scen: Scenario) -> None:
    """Reject configurations where every point is outside the physical domain,
    and master-equation work that would exceed the dimension cap."""
    bad = 0
    first_error = None
    for i in range(scen.n_points):
        try:
            scen.system_params(i)
        except (OmkError, ValueError) as exc:
            bad += 1
            first_error = first_error or exc
    if bad == scen.n_points:
        raise ConfigError(f"no sweep point lies in the stable domain: {first_error}")
    cap = scen.options["dimension_cap"]
    for i in lindblad_points(scen):
        try:
            params = scen.system_params(i)
            dims = lindblad_dims(scen, params)
        except (OmkError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"master equation infeasible at point {i}: {exc}") from None
        if predicted_dimension(dims) > cap:
            raise ConfigError(f"master equation at point {i} needs Liouvillian dimension "
                              f"{predicted_dimension(dims)} > cap {cap}")
