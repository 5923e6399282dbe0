"""Reusing a basis across a parameter change that opens level crossings.

The basis comes from ASP on the chain with a staggered field B_X = 0.1.
The same projected groups, reweighted to B_X = 0, follow the ground state
through crossings where the ramp itself would be diabatic.
"""

import numpy as np

from ecprep.metrics import per_point_rel_error
from ecprep.models import build_xy_chain, make_sweep
from ecprep.stateprep import ASPConfig
from ecprep.subspace import build_basis, cross_family_sweep

src = build_xy_chain(5, B_X=0.1)
dst = src.with_params(B_X=0.0)
targets = make_sweep((0.0, 3.0), 20, "B_Z")
basis = build_basis(src, make_sweep((0.0, 3.0), 4, "B_Z"), ASPConfig(0.05, 3.75))
exact = [dst.spectrum(t) for t in targets]
ec = cross_family_sweep(basis, src, dst, targets, exact_energies=[s.ground_energy for s in exact])
rel = per_point_rel_error([p.energy for p in ec], [s.ground_energy for s in exact])

print("B_Z    gap      rel error")
for t, s, r in zip(targets.column("B_Z"), exact, rel):
    print(f"{t:4.2f}  {s.gap:7.4f}  {r:.2e}")
print(f"max relative error {rel.max():.3%}, median {np.median(rel):.3%}")
