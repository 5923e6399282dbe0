"""Gate noise on truncated ASP and its effect on the averaged overlap matrix.

The noise perturbs each Trotter factor's generator, as in the bundled noise
configs.  A small ensemble (50 trajectories) keeps this to a few seconds.  Noise
raises the smallest eigenvalue of the averaged S, so its condition number
falls as sigma grows; thresholding at alpha drops the remaining weak
directions.
"""

import numpy as np

from ecprep.models import build_xy_chain, make_sweep
from ecprep.noise import NoiseConfig, alpha_for, ensemble_projected_matrices, solve_ensemble
from ecprep.stateprep import ASPConfig
from ecprep.subspace import condition_number

fam = build_xy_chain(5, B_X=0.2)
train = make_sweep((0.0, 3.0), 7, "B_Z")
targets = make_sweep((0.0, 3.0), 20, "B_Z")
e0 = np.array([fam.spectrum(t).ground_energy for t in targets])
sigmas = [0.0, 0.02, 0.05, 0.1]
schedule = ((0.04, 0.015), (0.08, 0.05), (np.inf, 0.09))
noise = NoiseConfig(n_trajectories=50, seed=1, mechanism="hamiltonian")

ens = ensemble_projected_matrices(fam, ASPConfig(0.05, 7.5), train.points, noise, sigmas)
print("sigma  cond(S)     alpha  rms(thresholded EC)")
for s, e in zip(sigmas, ens):
    proj = e.projection()
    alpha = alpha_for(s, schedule)
    energies = np.array([p.ground_energy for p in solve_ensemble(e, targets.points, alpha)])
    rms = np.sqrt(np.mean((energies - e0) ** 2))
    print(f"{s:5.2f}  {condition_number(proj.S):10.3g}  {alpha:5.3f}  {rms:.4f}")
