"""Stochastic gate noise on ASP trajectories, ensemble averaging and readout error.

Two mechanisms share the same sampled amplitudes.  With ``mechanism="gate"``
every Trotter factor ``exp(-i dt c R)`` is followed by

    single-site R:   sqrt(1-p) I + sqrt(p) R
    two-site R1R2:   sqrt(1-p1-p2-p1*p2) I + sqrt(p1) R1 + sqrt(p2) R2 + sqrt(p1*p2) R1R2

and renormalized.  Multiplying by the Pauli ``R`` (``R1R2``) gives the
effective gate ``sqrt(1-p) R + sqrt(p) I`` and its two-site analogue.
With ``mechanism="hamiltonian"`` the same combination replaces the term
inside the exponent instead, so each factor becomes

    single-site:  exp(-i dt c (sqrt(1-p) R + sqrt(p) I))
    two-site:     exp(-i dt c (sqrt(1-p1-p2-p1*p2) R1R2 + sqrt(p1) R1 + sqrt(p2) R2 + sqrt(p1*p2) I))

which is unitary and perturbs each step at order ``dt``.
Each amplitude is ``p = sigma * |z|`` with ``z`` a standard normal drawn
from the trajectory's own stream, so one stream serves every ``sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import ParamHamiltonian
from .qcore import PauliTerm, apply_pauli_term_exp, pauli_action
from .stateprep import ASPConfig
from .subspace import ConditioningError, SubspaceProjection, condition_number, generalized_eigh, hermitize


MECHANISMS = ("gate", "hamiltonian")


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = 0.0
    n_trajectories: int = 500
    seed: int = 0
    bootstrap_resamples: int = 1000
    mechanism: str = "gate"

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {MECHANISMS}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be finite and >= 0")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.bootstrap_resamples < 1:
            raise ValueError("bootstrap_resamples must be >= 1")


def trajectory_stream(seed: int, trajectory: int, point: int = 0) -> np.random.Generator:
    """Independent generator for one (trajectory, training point) pair."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trajectory, point)))


# --------------------------------------------------------------------------
# per-gate noise


@dataclass(frozen=True)
class _Gate:
    term: PauliTerm  # unit coefficient
    group: int
    paulis: tuple[str, ...]  # single-site factors of the term
    slot: int  # first normal-variate slot


def _gate_table(family: ParamHamiltonian) -> tuple[list[_Gate], int]:
    gates, slot = [], 0
    for gi, (_, terms) in enumerate(family.groups):
        for t in terms:
            sup = t.support
            if len(sup) > 2:
                raise ValueError(f"noise model covers one- and two-site gates, got {t}")
            paulis = tuple(
                "".join(t.axes[k] if k == s else "I" for k in range(t.nsites)) for s in sup
            )
            gates.append(_Gate(t, gi, paulis, slot))
            slot += len(sup)
    return gates, slot


def noise_operator_weights(p: Sequence[float]) -> tuple[float, ...]:
    """Coefficients of ``(I, R1, R2, R1R2)`` (or ``(I, R)``) for sampled amplitudes."""
    if len(p) == 1:
        (p1,) = p
        return math.sqrt(max(0.0, 1.0 - p1)), math.sqrt(p1)
    p1, p2 = p
    return (math.sqrt(max(0.0, 1.0 - p1 - p2 - p1 * p2)), math.sqrt(p1), math.sqrt(p2), math.sqrt(p1 * p2))


def apply_noise_gate(state: np.ndarray, gate_paulis: Sequence[str], full: str, p: Sequence[float]) -> np.ndarray:
    """Apply the noise operator for one gate and renormalize."""
    w = noise_operator_weights(p)
    ops = [None, *gate_paulis] if len(p) == 1 else [None, gate_paulis[0], gate_paulis[1], full]
    out = w[0] * state
    for wk, axes in zip(w[1:], ops[1:]):
        if wk:
            src, phase = pauli_action(axes)
            out = out + wk * (phase * state[..., src])
    return out / np.linalg.norm(out)


def effective_gate_matrix(term: PauliTerm, p: Sequence[float], angle: complex) -> np.ndarray:
    """Dense ``N(p) @ exp(angle * c * P)`` built from Kronecker products."""
    from .qcore import pauli_matrix

    n = term.nsites
    P = pauli_matrix(PauliTerm(1.0, term.axes))
    a = complex(angle) * term.coefficient
    U = np.cosh(a) * np.eye(1 << n) + np.sinh(a) * P
    sup = term.support
    singles = [pauli_matrix(PauliTerm.from_sites(n, {s: term.axes[s]})) for s in sup]
    w = noise_operator_weights(p)
    if len(sup) == 1:
        N = w[0] * np.eye(1 << n) + w[1] * singles[0]
    else:
        N = w[0] * np.eye(1 << n) + w[1] * singles[0] + w[2] * singles[1] + w[3] * P
    return N @ U


def noisy_asp_trajectory(family: ParamHamiltonian, cfg: ASPConfig, noise: NoiseConfig,
                         stream: np.random.Generator, target=None, initial: np.ndarray | None = None) -> np.ndarray:
    """One noisy ASP run, gate by gate.  ``sigma == 0`` reproduces ``run_asp`` exactly."""
    gates, nslots = _gate_table(family)
    path = cfg.path(target)
    psi = family.spectrum(cfg.theta_start).ground_state if initial is None else initial
    z = np.abs(stream.standard_normal((len(path), nslots)))
    for step, theta in enumerate(path):
        weights = family.weights(theta)
        for g in gates:
            w = weights[g.group]
            if w == 0.0:
                continue
            p = noise.sigma * z[step, g.slot:g.slot + len(g.paulis)]
            if noise.mechanism == "hamiltonian" and noise.sigma > 0:
                psi = apply_perturbed_exp(psi, g, w * cfg.dt * g.term.coefficient, p)
                continue
            psi = apply_pauli_term_exp(psi, g.term.scaled(w), -1j * cfg.dt)
            if noise.sigma > 0:
                psi = apply_noise_gate(psi, g.paulis, g.term.axes, p)
    return psi


def apply_perturbed_exp(state: np.ndarray, gate: _Gate, angle: float, p: Sequence[float]) -> np.ndarray:
    """``exp(-i angle K)`` for the perturbed term ``K``, as a product of commuting rotations."""
    w = noise_operator_weights(p)
    if len(p) == 1:
        parts = [(w[0], gate.term.axes), (w[1], None)]
    else:
        parts = [(w[0], gate.term.axes), (w[1], gate.paulis[0]), (w[2], gate.paulis[1]), (w[3], None)]
    for wk, axes in parts:
        if axes is None:
            state = np.exp(-1j * angle * wk) * state
        elif wk:
            state = apply_pauli_term_exp(state, PauliTerm(1.0, axes), -1j * angle * wk)
    return state


def noisy_asp_ensemble(family: ParamHamiltonian, cfg: ASPConfig, noise: NoiseConfig, target=None,
                       point: int = 0, sigmas: Sequence[float] | None = None,
                       chunk: int = 500) -> np.ndarray:
    """States of every trajectory, vectorized over trajectories.

    Returns ``(n_sigma, n_trajectories, dim)``; trajectory ``t`` draws from
    ``trajectory_stream(noise.seed, t, point)``, so it matches
    ``noisy_asp_trajectory`` with that stream.

    The noise operator is a sum of Paulis that commute with the gate's own
    Pauli, so gate and noise fuse into one combination of (I, R1, R2, R1R2).
    Everything is linear, so normalizing once per step gives the same state.
    """
    sigmas = [noise.sigma] if sigmas is None else list(sigmas)
    gates, nslots = _gate_table(family)
    path = cfg.path(target)
    psi0 = family.spectrum(cfg.theta_start).ground_state
    dim = psi0.shape[0]
    actions = [pauli_action(g.term.axes) for g in gates]
    single_actions = [[pauli_action(a) for a in g.paulis] for g in gates]
    weights = np.array([family.weights(theta) for theta in path]).reshape(len(path), -1)
    ntraj = noise.n_trajectories
    out = np.empty((len(sigmas), ntraj, dim), dtype=np.complex128)
    for start in range(0, ntraj, chunk):
        ids = range(start, min(start + chunk, ntraj))
        z = np.abs(np.stack([trajectory_stream(noise.seed, t, point).standard_normal((len(path), nslots))
                             for t in ids], axis=1)) if len(path) else np.zeros((0, len(ids), nslots))
        # all sigmas advance together; columns of psi are (sigma, trajectory) pairs
        sig = np.repeat(np.asarray(sigmas, dtype=float), len(ids))
        psi = np.tile(psi0[:, None], (1, len(sig)))
        for step in range(len(path)):
            zs = np.tile(z[step], (len(sigmas), 1)) * sig[:, None]
            for gi, g in enumerate(gates):
                w = weights[step, g.group]
                if w == 0.0:
                    continue
                p = zs[:, g.slot:g.slot + len(g.paulis)]
                if noise.mechanism == "hamiltonian":
                    psi = _fused_perturbed_exp(psi, cfg.dt * w * g.term.coefficient, p,
                                               single_actions[gi], actions[gi])
                    continue
                a = -1j * cfg.dt * w * g.term.coefficient
                psi = _fused_gate(psi, np.cosh(a), np.sinh(a), p, single_actions[gi], actions[gi])
            psi /= np.linalg.norm(psi, axis=0)
        out[:, start:start + len(ids)] = psi.T.reshape(len(sigmas), len(ids), dim)
    return out


def _fused_gate(psi, c, s, p, singles, full):
    """``N(p) (c I + s P)`` applied to the columns of ``psi``."""
    src, phase = full
    if not np.any(p):
        return c * psi + s * (phase[:, None] * psi[src])
    if p.shape[1] == 1:
        w0, w1 = np.sqrt(np.maximum(0.0, 1.0 - p[:, 0])), np.sqrt(p[:, 0])
        return (w0 * c + w1 * s) * psi + (w0 * s + w1 * c) * (phase[:, None] * psi[src])
    p1, p2 = p[:, 0], p[:, 1]
    w0 = np.sqrt(np.maximum(0.0, 1.0 - p1 - p2 - p1 * p2))
    w1, w2, w3 = np.sqrt(p1), np.sqrt(p2), np.sqrt(p1 * p2)
    (s1, ph1), (s2, ph2) = singles
    # R1 R2 = P and R1 P = R2 up to the phases carried by pauli_action
    return ((w0 * c + w3 * s) * psi
            + (w1 * c + w2 * s) * (ph1[:, None] * psi[s1])
            + (w2 * c + w1 * s) * (ph2[:, None] * psi[s2])
            + (w3 * c + w0 * s) * (phase[:, None] * psi[src]))


def _fused_perturbed_exp(psi, angle, p, singles, full):
    """``exp(-i angle K)`` on the columns of ``psi``, one perturbed term ``K`` per column.

    The rotations about ``P``, ``R1`` and ``R2`` commute, and ``P R1 = R2``,
    so their product is again a combination of (I, R1, R2, P).
    """
    src, phase = full
    if p.shape[1] == 1:
        a = np.sqrt(np.maximum(0.0, 1.0 - p[:, 0]))
        g = np.exp(-1j * angle * np.sqrt(p[:, 0]))
        return g * np.cos(angle * a) * psi - 1j * g * np.sin(angle * a) * (phase[:, None] * psi[src])
    p1, p2 = p[:, 0], p[:, 1]
    a = np.sqrt(np.maximum(0.0, 1.0 - p1 - p2 - p1 * p2))
    c0, s0 = np.cos(angle * a), -1j * np.sin(angle * a)
    c1, s1 = np.cos(angle * np.sqrt(p1)), -1j * np.sin(angle * np.sqrt(p1))
    c2, s2 = np.cos(angle * np.sqrt(p2)), -1j * np.sin(angle * np.sqrt(p2))
    g = np.exp(-1j * angle * np.sqrt(p1 * p2))
    (i1, f1), (i2, f2) = singles
    return g * ((c0 * c1 * c2 + s0 * s1 * s2) * psi
                + (c0 * s1 * c2 + s0 * c1 * s2) * (f1[:, None] * psi[i1])
                + (c0 * c1 * s2 + s0 * s1 * c2) * (f2[:, None] * psi[i2])
                + (c0 * s1 * s2 + s0 * c1 * c2) * (phase[:, None] * psi[src]))


def ensemble_energies(family: ParamHamiltonian, theta, states: np.ndarray) -> np.ndarray:
    """``<psi_t|H(theta)|psi_t>`` for each row of ``states``."""
    H = family.matrix(theta)
    return np.real(np.einsum("td,td->t", states.conj(), (H @ states.T).T))


# --------------------------------------------------------------------------
# ensemble projection


@dataclass
class EnsembleProjection:
    """Trajectory-averaged projected matrices with bootstrap standard errors.

    ``samples_S`` has shape ``(n_traj, k, k)``; ``samples_groups[g]`` likewise.
    """

    samples_S: np.ndarray
    samples_groups: dict
    family: ParamHamiltonian
    bootstrap_resamples: int = 1000
    seed: int = 0

    @property
    def n_trajectories(self) -> int:
        return self.samples_S.shape[0]

    def projection(self) -> SubspaceProjection:
        S = hermitize(_pairwise_mean(self.samples_S))
        mats = {g: hermitize(_pairwise_mean(m)) for g, m in self.samples_groups.items()}
        return SubspaceProjection(S, mats, self.family)

    def standard_errors(self) -> dict:
        """Bootstrap standard error of every averaged element, keyed ``"S"`` and by group."""
        n = self.n_trajectories
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(2**31,)))
        counts = rng.multinomial(n, np.full(n, 1.0 / n), size=self.bootstrap_resamples) / n
        out = {}
        for key, samples in [("S", self.samples_S), *self.samples_groups.items()]:
            flat = samples.reshape(n, -1)
            means = counts @ flat
            se = np.sqrt(np.std(means.real, axis=0, ddof=1) ** 2 + np.std(means.imag, axis=0, ddof=1) ** 2) \
                if self.bootstrap_resamples > 1 else np.zeros(flat.shape[1])
            out[key] = se.reshape(samples.shape[1:])
        return out

    def max_standard_error(self) -> float:
        return float(max(np.max(v) for v in self.standard_errors().values()))


def _pairwise_mean(samples: np.ndarray) -> np.ndarray:
    # np.add.reduce uses pairwise summation along a contiguous axis
    return np.add.reduce(np.ascontiguousarray(samples), axis=0) / samples.shape[0]


def project_samples(vectors: np.ndarray, family: ParamHamiltonian) -> tuple[np.ndarray, dict]:
    """Per-trajectory ``S`` and ``M_g`` for ``vectors`` of shape ``(n_traj, k, dim)``."""
    S = np.einsum("tid,tjd->tij", vectors.conj(), vectors)
    mats = {}
    for g, G in family.group_matrices.items():
        Gv = np.stack([(G @ v.T).T for v in vectors])
        mats[g] = np.einsum("tid,tjd->tij", vectors.conj(), Gv)
    return S, mats


def ensemble_projected_matrices(family: ParamHamiltonian, cfg: ASPConfig, training_points, noise: NoiseConfig,
                                sigmas: Sequence[float] | None = None) -> list[EnsembleProjection]:
    """Noisy ASP basis per trajectory, projected and collected for averaging.

    One ``EnsembleProjection`` per sigma (just ``noise.sigma`` by default).
    """
    points = np.atleast_2d(getattr(training_points, "points", training_points))
    sigmas = [noise.sigma] if sigmas is None else list(sigmas)
    per_point = [noisy_asp_ensemble(family, cfg, noise, target=theta, point=i, sigmas=sigmas)
                 for i, theta in enumerate(points)]
    out = []
    for si in range(len(sigmas)):
        vectors = np.stack([pp[si] for pp in per_point], axis=1)  # (traj, k, dim)
        S, mats = project_samples(vectors, family)
        out.append(EnsembleProjection(S, mats, family, noise.bootstrap_resamples, noise.seed))
    return out


# --------------------------------------------------------------------------
# readout error


@dataclass(frozen=True)
class ConfusionModel:
    """Readout flips ``p01`` (0 read as 1), ``p10`` (1 read as 0) and a ``T1`` decay up to ``pT1``."""

    p01: float = 0.0
    p10: float = 0.0
    pT1: float = 0.0

    def __post_init__(self):
        for name in ("p01", "p10", "pT1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")


@dataclass
class MeasurementResult:
    S: np.ndarray
    group_mats: dict
    clamped: int


def _perturb(x: np.ndarray, n_terms: int, model: ConfusionModel, decay: np.ndarray, counter: list) -> np.ndarray:
    """Push a Hadamard-test estimate through the readout confusion map.

    Each of ``n_terms`` Pauli contributions is read from an ancilla with
    ``P(0) = (1 + x_term)/2``; the element is their sum, so the per-term
    mean ``x/n`` goes through the map.
    """
    mean = x / n_terms
    p0 = 0.5 * (1.0 + mean)
    bad = (p0 < 0) | (p0 > 1)
    counter[0] += int(np.count_nonzero(bad))
    p0 = np.clip(p0, 0.0, 1.0)
    p10 = model.p10 + decay
    q0 = (1.0 - model.p01) * p0 + p10 * (1.0 - p0)
    q0 = np.clip(q0, 0.0, 1.0)
    return n_terms * (2.0 * q0 - 1.0)


def apply_measurement_error(S: np.ndarray, group_mats: dict, family: ParamHamiltonian, model: ConfusionModel,
                            stream: np.random.Generator) -> MeasurementResult:
    """Perturb overlap and projected-group matrices as read out by Hadamard tests.

    Real and imaginary parts of every upper-triangle element are estimated
    separately; the ``T1`` contribution is drawn per estimate, uniform in
    ``[0, pT1]``.  ``S`` keeps its unit diagonal (no measurement needed).
    Lower triangles are restored by Hermitian symmetry.
    """
    counter = [0]
    k = S.shape[0]
    iu = np.triu_indices(k)

    def perturb_matrix(m, n_terms, keep_diag):
        vals = m[iu]
        dr = stream.uniform(0.0, model.pT1, size=vals.shape) if model.pT1 > 0 else np.zeros(vals.shape)
        di = stream.uniform(0.0, model.pT1, size=vals.shape) if model.pT1 > 0 else np.zeros(vals.shape)
        re = _perturb(vals.real, n_terms, model, dr, counter)
        im = _perturb(vals.imag, n_terms, model, di, counter)
        diag = iu[0] == iu[1]
        im[diag] = 0.0
        new = re + 1j * im
        if keep_diag:
            new[diag] = m[iu][diag]
        out = np.zeros_like(m)
        out[iu] = new
        return out + np.triu(out, 1).conj().T

    if model.p01 == model.p10 == model.pT1 == 0.0:
        return MeasurementResult(S.copy(), {g: m.copy() for g, m in group_mats.items()}, 0)
    S_new = perturb_matrix(S, 1, keep_diag=True)
    mats = {g: perturb_matrix(m, len(family.group(g)), keep_diag=False) for g, m in group_mats.items()}
    return MeasurementResult(S_new, mats, counter[0])


def measured_ensemble(ens: EnsembleProjection, model: ConfusionModel, seed: int) -> EnsembleProjection:
    """Readout error applied to every trajectory sample, one stream per trajectory."""
    S = np.empty_like(ens.samples_S)
    mats = {g: np.empty_like(m) for g, m in ens.samples_groups.items()}
    clamped = 0
    for t in range(ens.n_trajectories):
        stream = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t, 2**30)))
        res = apply_measurement_error(ens.samples_S[t], {g: m[t] for g, m in ens.samples_groups.items()},
                                      ens.family, model, stream)
        S[t] = res.S
        for g in mats:
            mats[g][t] = res.group_mats[g]
        clamped += res.clamped
    out = EnsembleProjection(S, mats, ens.family, ens.bootstrap_resamples, ens.seed)
    out.clamped = clamped
    return out


def measured_energy(states: np.ndarray, family: ParamHamiltonian, theta, model: ConfusionModel,
                    stream: np.random.Generator) -> np.ndarray:
    """Per-trajectory energies with each group's expectation read through the confusion map."""
    vals = family.weights(theta)
    out = np.zeros(len(states))
    counter = [0]
    for (g, G), w in zip(family.group_matrices.items(), vals):
        e = np.real(np.einsum("td,td->t", states.conj(), (G @ states.T).T))
        decay = stream.uniform(0.0, model.pT1, size=e.shape) if model.pT1 > 0 else np.zeros(e.shape)
        out += w * _perturb(e, len(family.group(g)), model, decay, counter)
    return out


def solve_ensemble(ens: EnsembleProjection, targets, threshold: float | None = None,
                   family: ParamHamiltonian | None = None):
    """Ground energies at ``targets`` from the averaged matrices."""
    proj = ens.projection()
    points = np.atleast_2d(getattr(targets, "points", targets))
    sols = [generalized_eigh(proj.hamiltonian(t, family), proj.S, threshold) for t in points]
    return sols


# --------------------------------------------------------------------------
# sigma sweep


def alpha_for(sigma: float, schedule: Sequence[tuple[float, float]]) -> float | None:
    """Threshold from ``schedule``, a list of ``(sigma_upper, alpha)`` sorted by ``sigma_upper``.

    The first row with ``sigma < sigma_upper`` wins; the last row catches the rest.
    An empty schedule means no thresholding.
    """
    if not schedule:
        return None
    for upper, alpha in schedule:
        if sigma < upper:
            return alpha
    return schedule[-1][1]


@dataclass
class NoiseStudyRow:
    sigma: float
    method: str  # "full_asp", "truncated_asp", "ec_k<k_p>" or "ec_k<k_p>_thresholded"
    energies: np.ndarray
    rms: float
    condition_number: float = float("nan")
    retained_condition_number: float = float("nan")
    alpha: float | None = None
    max_standard_error: float = 0.0


def noise_study(family: ParamHamiltonian, targets, sigmas: Sequence[float], noise: NoiseConfig,
                full: ASPConfig, truncated: ASPConfig, k_ps: Sequence[int] = (5, 6, 7),
                alpha_schedule: Sequence[tuple[float, float]] = (), train_axis: str | None = None,
                exact_energies=None, confusion: ConfusionModel | None = None) -> list[NoiseStudyRow]:
    """Noisy full ASP, truncated ASP and truncated ASP + EC over a sigma grid.

    Every sigma shares each trajectory's normal draws.  EC rows solve the
    averaged matrices as they are (NaN energies if the overlap matrix is
    singular) and, when ``alpha_schedule`` is given, once more with the
    threshold for that sigma.  With ``confusion`` every method also gets a
    ``*_measured`` row with readout error applied to the energies or to the
    sampled matrix elements (thresholded with the schedule when one is given).
    """
    from .models import make_sweep

    points = np.atleast_2d(getattr(targets, "points", targets))
    if exact_energies is None:
        exact_energies = [family.spectrum(t).ground_energy for t in points]
    exact = np.asarray(exact_energies, dtype=float)
    lo, hi = points[:, 0].min(), points[:, 0].max()
    axis = train_axis or family.axes[0]
    rows: list[NoiseStudyRow] = []

    def rms(e):
        return float(np.sqrt(np.mean((np.asarray(e) - exact) ** 2)))

    for name, cfg in (("full_asp", full), ("truncated_asp", truncated)):
        per_sigma = np.zeros((len(sigmas), len(points)))
        measured = np.zeros_like(per_sigma)
        for j, theta in enumerate(points):
            states = noisy_asp_ensemble(family, cfg, noise, target=theta, point=j, sigmas=sigmas)
            for si in range(len(sigmas)):
                per_sigma[si, j] = ensemble_energies(family, theta, states[si]).mean()
                if confusion is not None:
                    stream = np.random.default_rng(np.random.SeedSequence(noise.seed, spawn_key=(2**29, si, j)))
                    measured[si, j] = measured_energy(states[si], family, theta, confusion, stream).mean()
        rows += [NoiseStudyRow(float(s), name, per_sigma[si], rms(per_sigma[si])) for si, s in enumerate(sigmas)]
        if confusion is not None:
            rows += [NoiseStudyRow(float(s), name + "_measured", measured[si], rms(measured[si]))
                     for si, s in enumerate(sigmas)]

    for k in k_ps:
        train = make_sweep((lo, hi), k, axis)
        ens = ensemble_projected_matrices(family, truncated, train.points, noise, sigmas)
        for s, e in zip(sigmas, ens):
            proj = e.projection()
            try:
                raw = [generalized_eigh(proj.hamiltonian(t), proj.S) for t in points]
                energies, cond = np.array([sol.ground_energy for sol in raw]), raw[0].condition_number
            except ConditioningError:
                energies, cond = np.full(len(points), np.nan), condition_number(proj.S)
            alpha = alpha_for(s, alpha_schedule)
            se = e.max_standard_error() if e.n_trajectories > 1 else 0.0
            rows.append(NoiseStudyRow(float(s), f"ec_k{k}", energies, rms(energies), cond,
                                      cond, None, se))
            if alpha is not None:
                cut = [generalized_eigh(proj.hamiltonian(t), proj.S, alpha) for t in points]
                ecut = np.array([sol.ground_energy for sol in cut])
                rows.append(NoiseStudyRow(float(s), f"ec_k{k}_thresholded", ecut, rms(ecut), cond,
                                          cut[0].condition_number, alpha, se))
            if confusion is not None:
                mproj = measured_ensemble(e, confusion, noise.seed).projection()
                sols = [generalized_eigh(mproj.hamiltonian(t), mproj.S, alpha) for t in points]
                em = np.array([sol.ground_energy for sol in sols])
                rows.append(NoiseStudyRow(float(s), f"ec_k{k}_measured", em, rms(em),
                                          condition_number(mproj.S), sols[0].condition_number, alpha, se))
    return rows
