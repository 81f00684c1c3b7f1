"""A photon bouncing off a dispersively coupled cavity rotates a qubit about z.

Run with ``python demos/01_dispersive_z_gate.py``.  Rates are in units of the
cavity decay rate gamma.
"""
import math

import numpy as np

from aqgates.dispersive import (DispersiveZParams, analytic_phase, evolve_effective_eoms,
                                optimize_rotation, steady_state_time)

# %% The acquired phase follows an arctangent law in chi / gamma.
print("chi/gamma   simulated phase   2 arctan(2 chi/gamma)")
for chi in (0.1, 0.25, 0.5, 1.0, 3.0):
    traj = evolve_effective_eoms(DispersiveZParams(chi=chi))
    print(f"{chi:9.2f}   {traj.final_phase:15.5f}   {analytic_phase(chi, 1.0):21.5f}")

# %% A slow photon keeps the qubit coherent; the coherence magnitude tells how slow is slow enough.
for ratio in (0.03, 0.1, 0.3):
    traj = evolve_effective_eoms(DispersiveZParams(chi=0.5, bandwidth=ratio))
    print(f"bandwidth {ratio:4.2f} gamma: |c| = {traj.magnitude[-1]:.6f} (ideal 0.5)")

# %% Pick chi for a quarter turn and see when the qubit stops changing.
report = optimize_rotation(math.pi / 2)
print(f"\npi/2 gate: chi = {report.chi_used:.3f} gamma, fidelity {report.fidelity:.6f}")
print(f"settles after {report.settle_time:.0f}/gamma, i.e. {report.settle_time_si(1e8) * 1e6:.2f} us at gamma = 1e8/s")

traj = evolve_effective_eoms(DispersiveZParams(chi=report.chi_used))
marks = np.searchsorted(traj.times, [0, 50, 100, 150, 200, 300])
for i in marks[marks < traj.times.size]:
    print(f"  t = {traj.times[i]:6.1f}   phase = {traj.phase[i]:.5f}   |c| = {traj.magnitude[i]:.6f}")
print(f"steady state from t = {steady_state_time(traj):.1f}")
