"""A photon stored in a cavity brings two qubits into resonance so they swap excitations.

Run with ``python demos/05_xy_gate.py``.  Rates are in units of the exchange coupling g.
"""
import math

from aqgates.xy import XYParams, simulate_tick_gate, thermal_photon_number, zz_strength

# %% Without loss the photon switches on a clean XY rotation.
lossless = simulate_tick_gate(XYParams.resonant(gamma_c=0.0), duration=math.pi / 4)
print(f"lossless, t = pi/(4g): theta = {lossless.theta:.6f}, fidelity {lossless.fidelity:.9f}")

# %% A leaky cavity stops the gate at a random time; the angle shrinks and fidelity suffers.
print("\ngamma_C/g   theta     fidelity (best local Z frame)")
for gamma in (0.1, 0.5, 1.0, 4.0):
    r = simulate_tick_gate(XYParams.resonant(gamma_c=gamma))
    print(f"{gamma:9.1f}   {r.theta:+.4f}   {r.fidelity:.4f}")

# %% Off the one-photon resonance the exchange barely moves.
off = simulate_tick_gate(XYParams.resonant(gamma_c=0.0, offset=20.0), duration=10.0, samples=2001)
print(f"\nmismatch of 20 g: peak transfer {off.p10.max():.4f}")

# %% Stray couplings and thermal photons.
zz = zz_strength(5e6, 500e6)
print(f"ZZ from 5 MHz exchange at 500 MHz detuning: {zz.rate / 1e3:.0f} kHz (ratio {zz.ratio:.0f})")
th = thermal_photon_number(6e9, 35e-3, gamma_c=2 * math.pi * 1e6)
print(f"6 GHz cavity at 35 mK: n_th = {th.n_thermal:.2e}, thermal photon rate {th.dephasing_rate:.0f}/s")
