"""Command-line front end: ``aqgates SUBCOMMAND [KEY=VALUEunit ...] [--config PATH] [--out PATH]``.

Each subcommand has a schema of unit-suffixed keys (see ``aqgates SUBCOMMAND
--help-keys``).  Results are written as CSV with ``#`` metadata that records
the full configuration, so any output can be re-run from its own header.
Exit status is 0 on success, 1 for invalid input and 2 for numerical failures.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.constants import hbar, k as BOLTZMANN

from . import __version__
from .config import (
    ConfigError,
    Key,
    Quantity,
    ResultTable,
    RunConfig,
    Schema,
    SweepSpec,
    emit_csv,
    parse_config,
)
from .errors import NumericalError, SimulationError

TWO_PI = 2 * math.pi


def _q(value, unit=""):
    return Quantity(value, unit)


class Units:
    """Converts config quantities to a module's internal units.

    ``reference`` is the rate (1/s) that internal units normalise to 1; a
    ``gamma`` suffix is a multiple of it.  Frequencies become angular.
    """

    def __init__(self, reference: float | None):
        self.reference = reference

    def _rel(self, q: Quantity) -> float:
        if self.reference is None:
            raise ConfigError([f"'{q.unit}' is not available for this subcommand"])
        return float(q.value)

    def frequency(self, q: Quantity) -> float:
        return self._rel(q) if q.relative else TWO_PI * q.si() / (self.reference or 1.0)

    def rate(self, q: Quantity) -> float:
        return self._rel(q) if q.relative else q.si() / (self.reference or 1.0)

    def time(self, q: Quantity) -> float:
        return self._rel(q) if q.relative else q.si() * (self.reference or 1.0)

    def temperature(self, q: Quantity) -> float:
        return self._rel(q) if q.relative else BOLTZMANN * q.si() / hbar / (self.reference or 1.0)

    def seconds(self, t_internal):
        return t_internal / (self.reference or 1.0)


@dataclass(frozen=True)
class Command:
    schema: Schema
    run: Callable[[RunConfig, int], ResultTable]
    invariants: Callable[[ResultTable], list[str]] | None = None


def _need_positive(q: Quantity, name: str) -> float:
    v = q.si()
    if not v > 0:
        raise ConfigError([f"{name} must be positive"])
    return v


# --- dispersive Z gate -------------------------------------------------------

_DISPERSIVE_KEYS = (
    Key("gamma", "rate", None, "cavity decay rate (1/s, written in Hz); reference rate", required=True),
    Key("bandwidth", "rate", _q(0.03, "gamma"), "photon bandwidth (1/s)"),
    Key("t0", "time", _q(100.0, "1/gamma"), "photon arrival time"),
)


def _run_dispersive(cfg: RunConfig, workers: int) -> ResultTable:
    from .dispersive import (DispersiveZParams, analytic_phase, evolve_effective_eoms, gate_fidelity,
                             optimize_rotation, steady_state_time)

    p = cfg.params
    u = Units(_need_positive(p["gamma"], "gamma"))
    bw = u.rate(p["bandwidth"])
    if "chi" in p:
        chi = u.frequency(p["chi"])
    elif "phi" in p:
        chi = optimize_rotation(float(p["phi"].si()), bandwidth=bw).chi_used
    else:
        raise ConfigError(["dispersive-z needs chi or phi"])
    delta = u.frequency(p["delta"]) if "delta" in p else None
    params = DispersiveZParams(chi=chi, gamma=1.0, delta=delta, bandwidth=bw, t0=u.time(p["t0"]))
    traj = evolve_effective_eoms(params, initial_coherence=0.5)
    target = float(p["phi"].si()) if "phi" in p else analytic_phase(chi, 1.0)
    amp = 1 / math.sqrt(2)
    table = traj.table()
    table[:, 0] = u.seconds(table[:, 0])
    summary = {
        "chi_hz": chi * u.reference / TWO_PI,
        "chi_over_gamma": chi,
        "final_phase": traj.final_phase,
        "analytic_phase": analytic_phase(chi, 1.0),
        "coherence": float(traj.magnitude[-1]),
        "fidelity": gate_fidelity(traj.sigma_minus[-1], amp, amp, target),
        "settle_time_s": u.seconds(steady_state_time(traj, float(p["settle_tol"].value))),
    }
    return ResultTable(("t", "re_sigma_minus", "im_sigma_minus", "phase", "magnitude"), table, summary)


def _sweep_point(args):
    from .dispersive import optimize_rotation

    phi, bw, tol, chis, ratios = args
    r = optimize_rotation(phi, bandwidth=bw, settle_tol=tol, sweep=(chis, ratios))
    return r.phi_target, r.chi_used, r.fidelity, r.coherence_final, r.settle_time


def _run_fidelity_sweep(cfg: RunConfig, workers: int) -> ResultTable:
    from .dispersive import coherence_sweep

    p = cfg.params
    u = Units(_need_positive(p["gamma"], "gamma"))
    bw = u.rate(p["bandwidth"])
    if cfg.sweep.param != "chi":
        raise ConfigError(["fidelity-sweep sweeps chi only"])
    chis = np.array([u.frequency(q) for q in cfg.sweep.quantities()])
    if chis.min() < 0:
        raise ConfigError(["chi sweep must be non-negative"])
    ratios = coherence_sweep(chis, gamma=1.0, bandwidth=bw, t0=u.time(p["t0"]))
    phis = np.linspace(0.0, p["phi_max"].si(), p["phi_samples"].value)
    if phis[-1] > math.pi + 1e-12:
        raise ConfigError(["phi_max must not exceed 180 deg"])
    jobs = [(float(min(phi, math.pi)), bw, float(p["settle_tol"].value), chis, ratios) for phi in phis]
    rows = np.array(_map(_sweep_point, jobs, workers))
    rows[:, 1] *= u.reference / TWO_PI
    rows[:, 4] = u.seconds(rows[:, 4])
    return ResultTable(("phi_target", "chi_opt", "fidelity", "coherence", "settle_time"), rows,
                       {"min_fidelity": float(rows[:, 2].min()), "chi_unit": "Hz", "time_unit": "s"})


def _fidelity_invariants(t: ResultTable) -> list[str]:
    bad = []
    if np.any(t.rows[:, 2] > 1 + 1e-9) or np.any(t.rows[:, 2] < 0):
        bad.append("fidelity outside [0, 1]")
    if np.any(t.rows[:, 3] > 0.5 + 1e-9):
        bad.append("coherence above its initial value")
    return bad


# --- Rydberg atoms -----------------------------------------------------------

def _phase_table(table) -> np.ndarray:
    return np.column_stack([np.arange(4), table.phases, table.relative_phases, table.leakage])


_PHASE_COLUMNS = ("basis_index", "phase", "relative_phase", "leakage")


def _run_rydberg_cz(cfg: RunConfig, workers: int) -> ResultTable:
    from .rydberg import BlockadeParams, blockade_cz

    p = cfg.params
    u = Units(TWO_PI * _need_positive(p["rabi"], "rabi"))
    params = BlockadeParams(rabi=1.0, blockade_shift=u.frequency(p["blockade_shift"]),
                            detuning=u.frequency(p["detuning"]))
    _, table = blockade_cz(params)
    return ResultTable(_PHASE_COLUMNS, _phase_table(table),
                       {"fidelity": table.fidelity(), "conditional_phase": table.conditional_phase})


def _run_levine_pichler(cfg: RunConfig, workers: int) -> ResultTable:
    from .rydberg import LevinePichlerParams, levine_pichler, rabi_from_duration, solve_phase_offset

    p = cfg.params
    ratio = float(p["detuning_ratio"].value)
    if "rabi" in p:
        rabi_si = TWO_PI * _need_positive(p["rabi"], "rabi")
    else:
        rabi_si = rabi_from_duration(_need_positive(p["duration"], "duration"), ratio)
    xi = solve_phase_offset(1.0, ratio)
    lp = LevinePichlerParams(rabi=1.0, detuning=ratio, xi=xi)
    table = levine_pichler(lp)
    return ResultTable(_PHASE_COLUMNS, _phase_table(table), {
        "rabi_hz": rabi_si / TWO_PI,
        "pulse_duration_s": lp.duration / rabi_si,
        "xi": xi,
        "conditional_phase": table.conditional_phase,
        "max_leakage": max(table.leakage),
        "fidelity": table.corrected_fidelity(),
    })


def _run_ultrafast(cfg: RunConfig, workers: int) -> ResultTable:
    from .rydberg import ultrafast_phase

    p = cfg.params
    J = TWO_PI * _need_positive(p["coupling"], "coupling")
    t_end = p["time"].si() if "time" in p else math.pi / J
    times = np.linspace(0.0, t_end, p["samples"].value)
    amps = [ultrafast_phase(J, t) for t in times]
    rows = np.array([(t, dd.real, dd.imag, abs(pf) ** 2) for t, (dd, pf) in zip(times, amps)])
    dd, _ = amps[-1]
    return ResultTable(("t", "re_dd", "im_dd", "p_pf"), rows,
                       {"time_s": t_end, "re_dd_final": dd.real, "im_dd_final": dd.imag})


def _run_laser_timing(cfg: RunConfig, workers: int) -> ResultTable:
    from .rydberg import TIMING_NOTE, clock_laser_distance

    p = cfg.params
    d = clock_laser_distance(p["delay"].si(), float(p["refractive_index"].value))
    return ResultTable(("delay", "distance"), [[p["delay"].si(), d]], {"distance_m": d}, (TIMING_NOTE,))


# --- trapped ions ------------------------------------------------------------

def _run_ms_gate(cfg: RunConfig, workers: int) -> ResultTable:
    from .ions import MSParams, ms_evolve

    p = cfg.params
    params = MSParams(qubit_gap=TWO_PI * p["qubit_gap"].si(), mode_frequency=TWO_PI * p["mode_frequency"].si(),
                      detuning=TWO_PI * p["detuning"].si(), eta=float(p["eta"].value),
                      rabi=TWO_PI * p["rabi"].si() if "rabi" in p else None, n_max=p["n_max"].value)
    res = ms_evolve(params, steps=p["steps"].value)
    return ResultTable(("t", "fidelity_to_target", "motional_purity"), res.table(), {
        "gate_time_s": params.gate_time,
        "fidelity": res.final_fidelity,
        "motional_purity": float(res.motional_purity[-1]),
        "phonon_return": float(abs(res.mean_phonons[-1] - res.mean_phonons[0])),
    })


def _run_slide(cfg: RunConfig, workers: int) -> ResultTable:
    from .ions import slide_diameter, slide_exposure

    p = cfg.params
    v = p["speed"].si()
    if ("exposure" in p) == ("beam_diameter" in p):
        raise ConfigError(["slide needs exactly one of exposure or beam_diameter"])
    if "exposure" in p:
        t = p["exposure"].si()
        d = slide_diameter(v, t)
    else:
        d = p["beam_diameter"].si()
        t = slide_exposure(v, d)
    note = ("two slide speeds are in circulation: 3.7 m/s with a 7.5 us exposure and 0.5 m/s "
            "with a 50 us exposure; they need different beams")
    return ResultTable(("speed", "exposure", "beam_diameter"), [[v, t, d]],
                       {"exposure_s": t, "beam_diameter_m": d}, (note,))


def _run_ring(cfg: RunConfig, workers: int) -> ResultTable:
    from .ions import RingParams, _illumination_segments, ring_pulsed_rabi, ring_schedule

    p = cfg.params
    params = RingParams(radius=p["radius"].si(), rotation_frequency=p["rotation_frequency"].si(),
                        chord=p["chord"].si(), duration=p["duration"].si(), decay_rate=p["decay_rate"].si(),
                        rabi=TWO_PI * p["rabi"].si() if "rabi" in p else None)
    sched = ring_schedule(params)
    res = ring_pulsed_rabi(params)
    rows, t = [], 0.0
    for length, lit in _illumination_segments(params):
        rows.append((t, t + length, float(lit)))
        t += length
    return ResultTable(("start", "end", "lit"), rows, {
        "passes": sched.passes,
        "angle_rad": sched.angle,
        "illuminated_fraction": sched.illuminated_fraction,
        "pulse_area": sched.pulse_area,
        "excited_population": res.excited_population,
        "continuous_reference": res.reference_population,
        "fidelity": res.fidelity,
    })


# --- autonomous clock --------------------------------------------------------

def _run_clock(cfg: RunConfig, workers: int) -> ResultTable:
    from .clock import ClockParams, build_clock_model, ensemble_rate, steady_state_flux, tick_ensemble, tick_statistics
    from .errors import InsufficientDataError

    p = cfg.params
    u = Units(_need_positive(p["emission_rate"], "emission_rate"))
    params = ClockParams(
        omega_ge=u.frequency(p["omega_ge"]), omega_se=u.frequency(p["omega_se"]),
        omega_c=u.frequency(p["omega_c"]), omega_h=u.frequency(p["omega_h"]),
        temp_c=u.temperature(p["temp_c"]), temp_h=u.temperature(p["temp_h"]),
        coupling=u.frequency(p["coupling"]),
        cold_rate=u.rate(p["cold_rate"]) if "cold_rate" in p else None,
        hot_rate=u.rate(p["hot_rate"]), emission_rate=1.0, decay_rate=u.rate(p["decay_rate"]))
    model = build_clock_model(params)
    duration = u.time(p["duration"])
    n_traj = p["trajectories"].value
    if n_traj < 1:
        raise ConfigError(["trajectories must be at least 1"])
    records = tick_ensemble(model, duration, cfg.seed, n_traj, step=u.time(p["step"]), start=p["start"].value)
    rows = [(i, u.seconds(t)) for i, r in enumerate(records) for t in r.times]
    summary = {
        "tick_rate_hz": ensemble_rate(records, 0.0, duration) * u.reference,
        "steady_state_rate_hz": steady_state_flux(model) * u.reference,
        "ticks": len(rows),
    }
    try:
        stats = tick_statistics(records)
        summary.update(mean_interval_s=u.seconds(stats.mean_interval),
                       variance_s2=u.seconds(u.seconds(stats.variance)), accuracy=stats.accuracy)
    except InsufficientDataError:
        summary.update(mean_interval_s=math.nan, variance_s2=math.nan, accuracy=math.nan)
    return ResultTable(("trajectory", "tick_time"), np.array(rows).reshape(-1, 2), summary, model.warnings)


# --- XY gate -----------------------------------------------------------------

def _run_xy(cfg: RunConfig, workers: int) -> ResultTable:
    from .xy import XYParams, simulate_tick_gate, thermal_photon_number, zz_strength

    p = cfg.params
    gamma_si = p["gamma_c"].si()
    if gamma_si < 0:
        raise ConfigError(["gamma_c must be non-negative"])
    ref = gamma_si if gamma_si > 0 else TWO_PI * _need_positive(p["g"], "g")
    u = Units(ref)
    chi = u.frequency(p["chi"])
    omega_b = u.frequency(p["omega_b"])
    n_th = 0.0
    if p["temperature"].si() > 0:
        n_th = thermal_photon_number(p["omega_c"].si(), p["temperature"].si()).n_thermal
    params = XYParams(omega_c=u.frequency(p["omega_c"]), omega_a=omega_b - 2 * chi + u.frequency(p["mismatch"]),
                      omega_b=omega_b, chi=chi, g=u.frequency(p["g"]), gamma_c=u.rate(p["gamma_c"]),
                      n_max=p["n_max"].value, n_thermal=n_th, include_zz=p["include_zz"].value == "on")
    kw = {}
    if p["injection"].value == "pulsed":
        kw["pulse_bandwidth"] = u.rate(p["pulse_bandwidth"])
        kw["photon_detuning"] = u.frequency(p["photon_detuning"])
    report = simulate_tick_gate(params, p["qubit_state"].value, injection=p["injection"].value,
                                duration=u.time(p["duration"]) if "duration" in p else None,
                                samples=p["samples"].value, **kw)
    table = report.table()
    table[:, 0] = u.seconds(table[:, 0])
    zz = zz_strength(params.g, params.qubit_detuning) if params.qubit_detuning else None
    return ResultTable(("t", "p01", "p10", "cavity_population"), table, {
        "theta": report.theta,
        "fidelity": report.fidelity,
        "photon_survival": report.photon_survival,
        "zz_rate_hz": zz.rate * ref / TWO_PI if zz else 0.0,
        "zz_ratio": zz.ratio if zz else math.inf,
        "thermal_photons": n_th,
    })


# --- registry ----------------------------------------------------------------

COMMANDS: dict[str, Command] = {
    "dispersive-z": Command(Schema(_DISPERSIVE_KEYS + (
        Key("chi", "frequency", None, "dispersive shift (cyclic); omit to optimise for phi"),
        Key("phi", "angle", None, "target rotation, used when chi is omitted"),
        Key("delta", "frequency", None, "cavity detuning (cyclic); default chi/2"),
        Key("settle_tol", "number", _q(1e-3), "settling tolerance"),
    ), "single-photon scattering off a dispersively coupled cavity rotates a qubit about z"), _run_dispersive),
    "fidelity-sweep": Command(Schema(_DISPERSIVE_KEYS + (
        Key("phi_max", "angle", _q(1.0, "pi"), "largest target rotation"),
        Key("phi_samples", "count", _q(21), "number of target rotations from 0"),
        Key("settle_tol", "number", _q(1e-3), "settling tolerance"),
    ), "best dispersive-shift choice and fidelity for each target rotation",
        default_sweep=SweepSpec("chi", 0.0, 30.0, "gamma", 601)), _run_fidelity_sweep, _fidelity_invariants),
    "rydberg-cz": Command(Schema((
        Key("rabi", "frequency", _q(1.0, "MHz"), "Rabi frequency (cyclic); reference rate"),
        Key("blockade_shift", "frequency", _q(math.inf, "MHz"), "blockade shift (cyclic); inf for hard blockade"),
        Key("detuning", "frequency", _q(0.0, "MHz"), "laser detuning (cyclic)"),
    ), "pi, 2pi, pi pulse sequence on two Rydberg atoms under blockade"), _run_rydberg_cz),
    "levine-pichler": Command(Schema((
        Key("duration", "time", _q(195.0, "ns"), "length of each global pulse; sets the Rabi frequency"),
        Key("detuning_ratio", "number", _q(0.377), "detuning over Rabi frequency"),
        Key("rabi", "frequency", None, "Rabi frequency (cyclic); overrides duration"),
    ), "two detuned global pulses with a solved phase jump implement CZ"), _run_levine_pichler),
    "ultrafast": Command(Schema((
        Key("coupling", "frequency", _q(1.0, "MHz"), "resonant exchange coupling J (cyclic)"),
        Key("time", "time", None, "evolution time; default pi/J"),
        Key("samples", "count", _q(101), "output rows"),
    ), "resonant dipole exchange returns |dd> with a sign flip"), _run_ultrafast),
    "laser-timing": Command(Schema((
        Key("delay", "time", None, "pulse delay", required=True, aliases=("T",)),
        Key("refractive_index", "number", _q(1.0), "path refractive index"),
    ), "optical path length that realises a pulse delay"), _run_laser_timing),
    "ms-gate": Command(Schema((
        Key("qubit_gap", "frequency", _q(411.0, "THz"), "qubit transition (cyclic); fixes laser tones only"),
        Key("mode_frequency", "frequency", _q(1.23, "MHz"), "motional mode (cyclic)"),
        Key("detuning", "frequency", _q(20.0, "kHz"), "sideband detuning (cyclic)"),
        Key("eta", "number", _q(0.05), "Lamb-Dicke parameter"),
        Key("rabi", "frequency", None, "carrier Rabi frequency (cyclic); default closes one loop"),
        Key("n_max", "count", _q(10), "retained Fock levels"),
        Key("steps", "count", _q(2000), "integration steps"),
    ), "bichromatic drive entangles two ions through a shared motional mode"), _run_ms_gate),
    "slide": Command(Schema((
        Key("speed", "speed", _q(3.7, "m/s"), "ion speed"),
        Key("exposure", "time", None, "time in the beam"),
        Key("beam_diameter", "length", None, "beam diameter"),
    ), "exposure of an ion sliding through a static beam"), _run_slide),
    "ring": Command(Schema((
        Key("radius", "length", _q(3.0, "um"), "ring radius"),
        Key("rotation_frequency", "frequency", _q(100.0, "kHz"), "rotation frequency (cyclic)"),
        Key("chord", "length", _q(4.0, "um"), "beam width across the ring"),
        Key("duration", "time", _q(50.0, "us"), "gate duration"),
        Key("decay_rate", "rate", _q(0.0, "Hz"), "energy relaxation rate (1/s)"),
        Key("rabi", "frequency", None, "Rabi frequency while lit (cyclic); default gives a pi pulse"),
    ), "duty-cycled drive on ions circulating through a beam"), _run_ring),
    "clock": Command(Schema((
        Key("emission_rate", "rate", _q(1.0, "MHz"), "e to s emission rate (1/s); reference rate"),
        Key("omega_ge", "frequency", _q(5.0, "gamma"), "g-e splitting"),
        Key("omega_se", "frequency", _q(3.0, "gamma"), "s-e splitting"),
        Key("omega_c", "frequency", _q(1.0, "gamma"), "cold qubit splitting"),
        Key("omega_h", "frequency", _q(6.0, "gamma"), "hot qubit splitting"),
        Key("temp_c", "temperature", _q(0.5, "gamma"), "cold bath temperature"),
        Key("temp_h", "temperature", _q(5.0, "gamma"), "hot bath temperature"),
        Key("coupling", "frequency", _q(1.0, "gamma"), "three-body exchange strength"),
        Key("cold_rate", "rate", None, "cold bath coupling; default ten times the exchange"),
        Key("hot_rate", "rate", _q(1.0, "gamma"), "hot bath coupling"),
        Key("decay_rate", "rate", _q(0.05, "gamma"), "s to g relaxation"),
        Key("duration", "time", None, "simulated time per trajectory", required=True),
        Key("trajectories", "count", _q(1000), "quantum-jump trajectories"),
        Key("step", "time", _q(0.02, "1/gamma"), "integration step"),
        Key("start", "choice", _q("thermal"), "initial state", choices=("thermal", "steady")),
    ), "heat-engine driven three-level clock whose emissions are ticks"), _run_clock),
    "xy-gate": Command(Schema((
        Key("omega_c", "frequency", _q(6.0, "GHz"), "cavity frequency (cyclic)"),
        Key("omega_b", "frequency", _q(5.0, "GHz"), "qubit B frequency (cyclic)"),
        Key("chi", "frequency", _q(250.0, "MHz"), "dispersive shift of qubit A (cyclic)"),
        Key("mismatch", "frequency", _q(0.0, "MHz"), "2 chi - (w_B - w_A), cyclic"),
        Key("g", "frequency", _q(5.0, "MHz"), "exchange coupling (cyclic)"),
        Key("gamma_c", "rate", _q(5.0, "MHz"), "cavity decay rate (1/s); reference rate"),
        Key("temperature", "temperature", _q(0.0, "K"), "cavity temperature"),
        Key("n_max", "count", _q(3), "retained cavity levels"),
        Key("duration", "time", None, "evolution time; default 20/gamma_c"),
        Key("samples", "count", _q(401), "output rows"),
        Key("injection", "choice", _q("fock"), "photon injection", choices=("fock", "pulsed")),
        Key("pulse_bandwidth", "rate", _q(0.03, "gamma"), "pulsed-photon bandwidth"),
        Key("photon_detuning", "frequency", _q(0.0, "MHz"), "pulsed-photon detuning from the cavity"),
        Key("qubit_state", "choice", _q("01"), "initial qubit state", choices=("00", "01", "10", "11")),
        Key("include_zz", "choice", _q("off"), "empty-cavity ZZ term", choices=("off", "on")),
    ), "a stored photon switches on qubit exchange"), _run_xy),
}

SCHEMAS = {name: c.schema for name, c in COMMANDS.items()}


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _point_job(args):
    cfg, workers = args
    return COMMANDS[cfg.subcommand].run(cfg, 1).summary


def run(cfg: RunConfig, workers: int = 1) -> ResultTable:
    """Execute a validated configuration.  A sweep on a single-point command tabulates its summary."""
    command = COMMANDS[cfg.subcommand]
    if cfg.sweep is None or cfg.sweep == command.schema.default_sweep:
        return command.run(cfg, workers)
    sweep = cfg.sweep
    points = [replace(cfg, params={**cfg.params, sweep.param: q}, sweep=None) for q in sweep.quantities()]
    summaries = _map(_point_job, [(pt, 1) for pt in points], workers)
    keys = [k for k, v in summaries[0].items() if not isinstance(v, str)]
    rows = [[q.value] + [float(s[k]) for k in keys] for q, s in zip(sweep.quantities(), summaries)]
    return ResultTable((sweep.param,) + tuple(keys), rows, {"sweep_unit": sweep.unit or "1"})


def _check_invariants(name: str, table: ResultTable) -> list[str]:
    bad = [] if np.all(np.isfinite(table.rows)) else ["non-finite values in table"]
    check = COMMANDS[name].invariants
    return bad + (check(table) if check else [])


def _write_atomic(path: str, text: str):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".aqgates-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _key_help() -> str:
    out = []
    for name, schema in SCHEMAS.items():
        out.append(f"[{name}]  {schema.description}")
        for k in schema.keys:
            default = "required" if k.required else (k.default.text() if k.default else "optional")
            kind = "|".join(k.choices) if k.choices else k.kind
            out.append(f"    {k.name:<20} {kind:<12} {default:<14} {k.doc}")
        if schema.default_sweep:
            out.append(f"    [sweep] {schema.default_sweep.text()}")
    return "\n".join(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqgates", description="Autonomous quantum gate simulations.",
                                     epilog="Run 'aqgates --help-keys' for every subcommand's keys and units.")
    parser.add_argument("subcommand", nargs="?", help=", ".join(COMMANDS))
    parser.add_argument("overrides", nargs="*", metavar="KEY=VALUEunit")
    parser.add_argument("--config", metavar="PATH")
    parser.add_argument("--out", metavar="PATH", help="CSV destination (default: stdout)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--regen-golden", action="store_true",
                        help="write --out only if the result passes the subcommand's invariants")
    parser.add_argument("--help-keys", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.help_keys:
        print(_key_help())
        return 0
    try:
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError([f"cannot read config: {exc}"])
        if args.workers < 1:
            raise ConfigError(["--workers must be at least 1"])
        if args.regen_golden and not args.out:
            raise ConfigError(["--regen-golden needs --out"])
        cfg = parse_config(text, SCHEMAS, args.subcommand, args.overrides, args.seed, args.out)
        table = run(cfg, args.workers)
        if args.regen_golden:
            bad = _check_invariants(cfg.subcommand, table)
            if bad:
                print(f"error: invariants failed, golden file not written: {'; '.join(bad)}", file=sys.stderr)
                return 2
        csv = emit_csv(table, cfg, SCHEMAS[cfg.subcommand].description, __version__)
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        for line in getattr(exc, "problems", [str(exc)]):
            print(f"error: {type(exc).__name__}: {line}", file=sys.stderr)
        return 1
    if args.out:
        _write_atomic(args.out, csv)
    else:
        sys.stdout.write(csv)
    return 0
