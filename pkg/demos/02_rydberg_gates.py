"""Rydberg-atom controlled-Z gates: the blockade sequence and the two-pulse variant.

Run with ``python demos/02_rydberg_gates.py``.
"""
import math

from aqgates.rydberg import (BlockadeParams, LevinePichlerParams, blockade_cz, clock_laser_distance,
                             levine_pichler, rabi_from_duration, solve_phase_offset, ultrafast_phase)

# %% Pi, 2pi, pi pulses: with a perfect blockade every input except |00> picks up a sign.
_, table = blockade_cz(BlockadeParams(rabi=1.0))
print("hard blockade phases:", [f"{p:+.4f}" for p in table.phases])

# %% A finite blockade shift lets |rr> leak in; the gate improves as the shift grows.
print("\nV/Omega   CZ fidelity")
for v in (5, 10, 20, 50, 100):
    print(f"{v:7d}   {blockade_cz(BlockadeParams(rabi=1.0, blockade_shift=v))[1].fidelity():.6f}")

# %% Two detuned global pulses with a solved phase jump between them.
xi = solve_phase_offset(1.0, 0.377)
lp = levine_pichler(LevinePichlerParams(1.0, 0.377, xi))
print(f"\nphase jump xi = {xi:.5f}, conditional phase {lp.conditional_phase:+.5f}, "
      f"fidelity after local Z {lp.corrected_fidelity():.7f}")
rabi = rabi_from_duration(195e-9)
print(f"195 ns pulses need Omega = 2pi x {rabi / 2 / math.pi / 1e6:.3f} MHz at Delta = 0.377 Omega")

# %% Resonant exchange between two Rydberg states flips the sign of |dd> after pi/J.
J = 2 * math.pi * 10e6
dd, pf = ultrafast_phase(J, math.pi / J)
print(f"\nafter pi/J = {math.pi / J * 1e9:.1f} ns: |dd> amplitude {dd.real:+.3f}")

# %% Delaying one pulse with a longer optical path.
for delay in (10e-9, 70e-9):
    print(f"delay {delay * 1e9:4.0f} ns needs {clock_laser_distance(delay):.2f} m of extra path")
