"""Trapped ions: a bichromatic entangling gate, then moving ions through static beams.

Run with ``python demos/03_trapped_ions.py``.
"""
import numpy as np

from aqgates.ions import MSParams, RingParams, ms_evolve, ring_pulsed_rabi, ring_schedule, slide_diameter

# %% The motional mode makes one loop in phase space and returns the spins entangled.
params = MSParams()
run = ms_evolve(params)
print(f"gate time {params.gate_time * 1e6:.1f} us, final Bell fidelity {run.final_fidelity:.8f}")
for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
    i = int(round(frac * (run.times.size - 1)))
    print(f"  t = {run.times[i] * 1e6:5.1f} us   F = {run.fidelity[i]:.4f}   motional purity = "
          f"{run.motional_purity[i]:.4f}   <n> = {run.mean_phonons[i]:.4f}")

# %% Sliding ions through a beam: the beam diameter sets the exposure.
for speed, exposure in ((3.7, 7.5e-6), (0.5, 50e-6)):
    print(f"{speed} m/s for {exposure * 1e6:.1f} us needs a {slide_diameter(speed, exposure) * 1e6:.2f} um beam")

# %% Ions circulating on a ring cross the beam twice per turn.
ring = RingParams(3e-6, 100e3, 4e-6, 50e-6, decay_rate=0.167)
sched = ring_schedule(ring)
res = ring_pulsed_rabi(ring)
print(f"\nring: {sched.passes:.0f} turns, arc {sched.angle:.4f} rad, lit {sched.illuminated_fraction:.1%} of the time")
print(f"duty-cycled pi pulse reaches {res.excited_population:.6f}; continuous drive {res.reference_population:.6f}")
print("illuminated fraction vs chord:", np.round([RingParams(3e-6, 1e5, c, 5e-5).illuminated_fraction
                                                 for c in (1e-6, 3e-6, 6e-6)], 3))
