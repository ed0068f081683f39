"""Zero modes of a Kitaev chain and how the spectrum probe counts them.

Run: python demos/01_kitaev_zero_modes.py
"""
import numpy as np

from mzmsim.bdg import assemble, kitaev_chain, spectrum_probe
from mzmsim.evolution import zero_mode_majoranas

# A chain is topological for |mu| < 2t. Inside that window the two lowest
# BdG eigenvalues split off from the bulk and approach zero exponentially
# with the chain length.
print("mu     n_zero  lowest |E|   bulk gap")
for mu in (0.0, 0.5, 1.5, 2.5, 4.0):
    probe = spectrum_probe(kitaev_chain(30, mu=mu))
    lowest = np.min(np.abs(np.linalg.eigvalsh(assemble(kitaev_chain(30, mu=mu)))))
    print(f"{mu:4.1f}   {probe.n_zero:6d}  {lowest:10.2e}  {probe.bulk_gap:8.3f}")

# The two Majoranas live on opposite ends. Anchoring them to the end sites
# fixes their labels and signs, which later lets schedules refer to them.
n = 30
w = zero_mode_majoranas(assemble(kitaev_chain(n, mu=0.5)), 2, anchors=[0, n - 1])
weight = np.abs(w[:n]) ** 2 + np.abs(w[n:]) ** 2
for k, name in enumerate(("left", "right")):
    print(f"{name} Majorana: weight on the first 5 sites {weight[:5, k].sum() / 2:.4f}, "
          f"on the last 5 sites {weight[-5:, k].sum() / 2:.4f}")
