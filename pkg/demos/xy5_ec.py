"""Truncated ITE and ASP on the 5-site XY chain, with and without EC.

Prepares k_p = 5 cheap states along B_Z, projects the Hamiltonian groups
once, then solves the small generalized eigenproblem at 20 targets.
"""

from ecprep.metrics import fidelity, rms_error
from ecprep.models import build_xy_chain, make_sweep
from ecprep.qcore import expectation
from ecprep.stateprep import ASPConfig, ITEConfig
from ecprep.subspace import build_basis, ec_sweep, prepare_state

fam = build_xy_chain(5, J=1.0, B_X=0.2)
targets = make_sweep((0.0, 3.0), 20, "B_Z")
exact = [fam.spectrum(t) for t in targets]
e0 = [s.ground_energy for s in exact]

for name, method in (("ITE", ITEConfig(0.2, 1.6)), ("ASP", ASPConfig(0.05, 3.75))):
    basis = build_basis(fam, make_sweep((0.0, 3.0), 5, "B_Z"), method)
    ec = ec_sweep(basis, fam, targets, exact_energies=e0)
    trunc = [prepare_state(fam, t, method) for t in targets]
    e_tr = [expectation(s, fam.instantiate(t)) for s, t in zip(trunc, targets)]
    f_ec = min(fidelity(p.state, s.ground_state) for p, s in zip(ec, exact))
    f_tr = min(fidelity(v, s.ground_state) for v, s in zip(trunc, exact))
    r_ec, r_tr = rms_error([p.energy for p in ec], e0), rms_error(e_tr, e0)
    print(f"{name}: rms truncated {r_tr:.4f}  rms EC {r_ec:.5f}  reduction {1 - r_ec / r_tr:.1%}  "
          f"min fidelity {f_tr:.3f} -> {f_ec:.3f}")

print("B_Z    exact      EC(ASP)")
for t, e, p in zip(targets.column("B_Z")[::4], e0[::4], ec[::4]):
    print(f"{t:4.2f}  {e:9.5f}  {p.energy:9.5f}")
