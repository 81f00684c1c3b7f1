"""End-to-end acceptance checks; each test prints one PASS/FAIL line for its criterion."""
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

from aqgates.cli import SCHEMAS, run
from aqgates.clock import ClockParams, build_clock_model, ensemble_rate, metastable_margin, steady_state_flux, tick_ensemble
from aqgates.config import parse_config, read_csv
from aqgates.dispersive import DispersiveZParams, analytic_phase, evolve_effective_eoms, optimize_rotation
from aqgates.ions import MSParams, RingParams, ms_evolve, ring_schedule, slide_diameter
from aqgates.rydberg import (
    BlockadeParams,
    LevinePichlerParams,
    blockade_cz,
    levine_pichler,
    rabi_from_duration,
    solve_phase_offset,
    ultrafast_phase,
    wrap_phase,
)
from aqgates.xy import XYParams, ideal_xy, rotating_hamiltonian, simulate_tick_gate, thermal_photon_number

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def half_turn():
    start = time.perf_counter()
    report = optimize_rotation(math.pi / 2)
    return report, time.perf_counter() - start


def test_phase_formula(verdict):
    rng = np.random.default_rng(2026)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        gamma = rng.uniform(0.5, 5.0)
        chi = gamma * rng.uniform(0.05, 10.0)
        traj = evolve_effective_eoms(DispersiveZParams(chi=chi, gamma=gamma))
        worst = max(worst, abs(traj.final_phase - analytic_phase(chi, gamma)))
    elapsed = time.perf_counter() - start
    verdict(1, "ODE phase matches 2 arctan(2 chi/gamma)", worst < 0.02 and elapsed < 30,
            f"max error {worst:.2e} rad, {elapsed:.1f} s")


def test_fidelity_benchmark(verdict, half_turn):
    report, elapsed = half_turn
    ok = abs(report.fidelity - 0.9989) <= 0.002 and abs(report.coherence_final - 0.4997) <= 0.001
    verdict(2, "pi/2 rotation fidelity and coherence", ok and elapsed < 120,
            f"F = {report.fidelity:.6f}, |c| = {report.coherence_final:.6f}, {elapsed:.1f} s")


def test_settling_time(verdict, half_turn):
    report, _ = half_turn
    si = report.settle_time_si(1 / 10e-9)
    ok = 100 <= report.settle_time <= 300 and 1e-6 <= si <= 3e-6
    verdict(3, "settling within [100, 300]/gamma, about 2 us at 1/gamma = 10 ns", ok,
            f"{report.settle_time:.1f}/gamma = {si * 1e6:.3f} us")


def _sweep(bandwidth: str):
    cfg = parse_config(f"[fidelity-sweep]\ngamma = 100 MHz\nbandwidth = {bandwidth}\n", SCHEMAS)
    return run(cfg).rows


def test_fidelity_curve_shape(verdict):
    in_regime = _sweep("0.03 gamma")
    detuned = _sweep("0.5 gamma")
    golden_in = read_csv((GOLDEN / "fidelity_sweep_in_regime.csv").read_text())[1]
    golden_det = read_csv((GOLDEN / "fidelity_sweep_detuned.csv").read_text())[1]
    matches = np.allclose(in_regime, golden_in, rtol=1e-9, atol=1e-12) and \
        np.allclose(detuned, golden_det, rtol=1e-9, atol=1e-12)
    covers = in_regime[0, 0] == 0.0 and in_regime[-1, 0] == pytest.approx(math.pi)
    floor = in_regime[:, 2].min()
    monotone = bool(np.all(np.diff(detuned[:, 2]) < 0))
    verdict(4, "in-regime F >= 0.99 on [0, pi]; detuned F falls with |phi|",
            floor >= 0.99 and monotone and covers and matches,
            f"in-regime min {floor:.5f}, detuned {detuned[0, 2]:.4f} -> {detuned[-1, 2]:.4f}, "
            f"golden match {matches}")


def test_blockade_cz(verdict):
    _, hard = blockade_cz(BlockadeParams(rabi=1.0))
    err = max(abs(wrap_phase(p - t)) for p, t in zip(hard.phases, (0, math.pi, math.pi, math.pi)))
    fids = [blockade_cz(BlockadeParams(rabi=1.0, blockade_shift=v))[1].fidelity() for v in (5, 10, 20, 50, 100)]
    monotone = all(b > a for a, b in zip(fids, fids[1:]))
    verdict(5, "hard blockade phases (0, pi, pi, pi); finite-V fidelity rises with V", err < 1e-6 and monotone,
            f"phase error {err:.1e}, F(V/Omega=5..100) = {', '.join(f'{f:.5f}' for f in fids)}")


def test_levine_pichler(verdict):
    xi = solve_phase_offset(1.0, 0.377)
    table = levine_pichler(LevinePichlerParams(1.0, 0.377, xi))
    off = abs(wrap_phase(table.conditional_phase - math.pi))
    rabi = rabi_from_duration(195e-9)
    tau = LevinePichlerParams(rabi, 0.377 * rabi).duration
    ok = off <= 0.02 and max(table.leakage) < 1e-3 and abs(tau - 195e-9) < 1e-15
    verdict(6, "Levine-Pichler CZ and 195 ns pulse", ok,
            f"phase off pi by {off:.4f}, leakage {max(table.leakage):.1e}, "
            f"Omega = 2pi x {rabi / 2 / math.pi / 1e6:.4f} MHz gives {tau * 1e9:.3f} ns")


def test_ultrafast(verdict):
    J = 2 * math.pi * 1e6
    dd, _ = ultrafast_phase(J, math.pi / J)
    err = abs(dd - (-1))
    verdict(7, "exchange returns -|dd> at t = pi/J", err < 1e-9, f"|amp + 1| = {err:.1e}")


def test_molmer_sorensen(verdict):
    start = time.perf_counter()
    res = ms_evolve(MSParams())
    elapsed = time.perf_counter() - start
    back = abs(res.mean_phonons[-1] - res.mean_phonons[0])
    ok = res.final_fidelity > 0.99 and back < 1e-3 and elapsed < 60
    verdict(8, "MS gate Bell-state fidelity and phonon return at 50 us", ok,
            f"F = {res.final_fidelity:.8f}, phonon return {back:.1e}, {elapsed:.1f} s")


def test_feasibility_arithmetic(verdict):
    slides = (slide_diameter(3.7, 7.5e-6), slide_diameter(0.5, 50e-6))
    ring = ring_schedule(RingParams(3e-6, 100e3, 4e-6, 50e-6))
    n_th = thermal_photon_number(6e9, 35e-3).n_thermal
    ok = (abs(slides[0] - 27.75e-6) < 1e-15 and abs(slides[1] - 25e-6) < 1e-15
          and abs(ring.passes - 5) < 1e-12 and abs(ring.angle - 1.46) < 5e-3 and n_th <= 1e-3)
    verdict(9, "slide, ring and thermal-photon arithmetic", ok,
            f"{slides[0] * 1e6:.2f} um, {slides[1] * 1e6:.2f} um, {ring.passes:.0f} passes, "
            f"theta {ring.angle:.4f} rad, n_th {n_th:.2e}")


@pytest.mark.slow
def test_clock_flux(verdict):
    model = build_clock_model(ClockParams())
    start = time.perf_counter()
    records = tick_ensemble(model, 100.0, seed=2026, n_traj=10_000, step=0.02, start="steady")
    elapsed = time.perf_counter() - start
    rate = ensemble_rate(records, 0.0, 100.0)
    oracle = steady_state_flux(model)
    rel = rate / oracle - 1
    margin = metastable_margin(4e-6, 250e-9)
    ok = abs(rel) < 0.03 and margin.ratio == pytest.approx(16.0) and margin.passed and elapsed < 300
    verdict(10, "jump tick flux matches steady-state flux; metastable margin", ok,
            f"relative error {rel:+.4f}, margin {margin.ratio:.1f}, {elapsed:.1f} s")


def test_xy_gate(verdict):
    p = XYParams.resonant(gamma_c=0.0)
    H = rotating_hamiltonian(p).matrix
    err = max(np.max(np.abs(expm(-1j * H * t)[4:8, 4:8] - ideal_xy(2 * p.g * t))) for t in np.linspace(0.1, 3, 12))
    detuned = simulate_tick_gate(XYParams.resonant(gamma_c=0.0, offset=20 * p.g), duration=10.0, samples=4001)
    transfer = float(detuned.p10.max())
    verdict(11, "lossless XY propagator and detuned transfer", err < 1e-8 and transfer < 0.01,
            f"max deviation {err:.1e}, detuned peak transfer {transfer:.4f}")
