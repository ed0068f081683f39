"""Braiding two Majoranas by moving a topological segment through a T-junction.

Slower gate sweeps approach the ideal sqrt(X) gate; faster ones leak into
excited states and the fidelity drops.

Run: python demos/03_tjunction_braid.py   (about 20 seconds)
"""
from mzmsim.devices import TJunctionDevice
from mzmsim.protocol import BraidMove, Schedule, gate_fidelity, run
from mzmsim.stabilizer import EncodingLayout, glossary, logical_qubit_matrix

layout = EncodingLayout.sparse(1)
target = glossary(1)["sqrt_X on qubit 1"]
schedule = Schedule([BraidMove(2, 3)], layout, dt=0.4)

print("ramp   total time  fidelity")
for ramp in (5.0, 10.0, 20.0, 40.0):
    device = TJunctionDevice(arm=8, leg=8, segment=4, ramp=ramp)
    result = run(schedule, device)
    fid = gate_fidelity(logical_qubit_matrix(result.T, layout), target)
    print(f"{ramp:5.1f}  {result.diagnostics['t_end']:10.1f}  {fid:.6f}")
