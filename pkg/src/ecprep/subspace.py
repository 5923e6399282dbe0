"""Eigenvector continuation: basis assembly, projected matrices and the generalized eigenproblem."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .models import ParamHamiltonian, SweepGrid
from .qcore import PauliTerm, apply_hamiltonian, normalize
from .stateprep import ASPConfig, ITEConfig, VQEConfig, run_asp, run_ite, run_vqe

PD_TOL = 1e-12


class ConditioningError(np.linalg.LinAlgError):
    """The overlap matrix is too close to singular for the requested solve."""


class PreparationError(RuntimeError):
    def __init__(self, point, cause):
        super().__init__(f"state preparation failed at training point {tuple(point)}: {cause}")
        self.point = point


@dataclass
class SubspaceBasis:
    """``vectors[i]`` is the normalized state prepared at ``training_points[i]``."""

    vectors: np.ndarray
    training_points: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.complex128))
        self.training_points = np.asarray(self.training_points, dtype=float).reshape(len(self.vectors), -1)
        norms = np.linalg.norm(self.vectors, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-10):
            raise ValueError(f"basis vectors are not normalized: {norms}")

    @property
    def k_p(self) -> int:
        return len(self.vectors)

    def __len__(self):
        return self.k_p

    def subset(self, idx) -> "SubspaceBasis":
        idx = list(idx)
        return SubspaceBasis(self.vectors[idx], self.training_points[idx], dict(self.provenance))


def prepare_state(family: ParamHamiltonian, theta, method) -> np.ndarray:
    """Approximate ground state of ``family`` at ``theta`` with one method config."""
    if isinstance(method, ITEConfig):
        return run_ite(family.instantiate(theta), method).state
    if isinstance(method, ASPConfig):
        return run_asp(family, method, target=theta).state
    if isinstance(method, VQEConfig):
        return run_vqe(family, theta, method).state
    raise TypeError(f"unsupported preparation config {type(method).__name__}")


def _provenance(method) -> dict:
    name = {ITEConfig: "ite", ASPConfig: "asp", VQEConfig: "vqe"}.get(type(method), type(method).__name__)
    knobs = {k: v for k, v in vars(method).items() if not isinstance(v, np.ndarray)}
    return {"method": name, **knobs}


def build_basis(family: ParamHamiltonian, training_points, method, mapper=map) -> SubspaceBasis:
    """Prepare one state per training point.  ``mapper`` may be a parallel map."""
    points = training_points.points if isinstance(training_points, SweepGrid) else np.atleast_2d(training_points)

    def prep(theta):
        try:
            return prepare_state(family, theta, method)
        except (ValueError, FloatingPointError, ArithmeticError) as exc:
            raise PreparationError(theta, exc) from exc

    vectors = list(mapper(prep, list(points)))
    return SubspaceBasis(np.array(vectors), points, _provenance(method))


def krylov_basis(terms: Sequence[PauliTerm], psi0: np.ndarray, k_p: int) -> SubspaceBasis:
    """Unorthogonalized power basis ``{psi0, H psi0, ..., H^(k_p-1) psi0}``, each normalized."""
    if k_p < 1:
        raise ValueError("k_p must be >= 1")
    vecs = [normalize(psi0)]
    for _ in range(k_p - 1):
        vecs.append(normalize(apply_hamiltonian(vecs[-1], terms)))
    return SubspaceBasis(np.array(vecs), np.zeros((k_p, 1)), {"method": "krylov", "k_p": k_p})


# --------------------------------------------------------------------------
# projection


@dataclass(frozen=True)
class SubspaceProjection:
    """Overlap matrix and one projected matrix per Hamiltonian group."""

    S: np.ndarray
    group_mats: Mapping[str, np.ndarray]
    family: ParamHamiltonian | None = None

    @property
    def k_p(self) -> int:
        return self.S.shape[0]

    def hamiltonian(self, theta=None, family: ParamHamiltonian | None = None) -> np.ndarray:
        """``sum_g w_g(theta) M_g`` with weights from ``family`` (default: the source family)."""
        family = family or self.family
        if family is None:
            raise ValueError("no family to take weights from")
        _check_labels(family, self.group_mats)
        out = np.zeros_like(self.S)
        for g, w in zip(family.labels, family.weights(theta)):
            out = out + w * self.group_mats[g]
        return out


def _check_labels(family: ParamHamiltonian, group_mats: Mapping[str, np.ndarray]):
    if set(family.labels) != set(group_mats):
        raise ValueError(
            f"group labels {sorted(family.labels)} do not match projected groups {sorted(group_mats)}"
        )


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def project_operators(basis: SubspaceBasis, family: ParamHamiltonian) -> SubspaceProjection:
    """``S_ij = <phi_i|phi_j>`` and ``(M_g)_ij = <phi_i|G_g|phi_j>``, computed once per basis."""
    Phi = basis.vectors.T  # columns are basis states
    if Phi.shape[0] != 1 << family.nsites:
        raise ValueError("basis dimension does not match the model")
    S = hermitize(Phi.conj().T @ Phi)
    mats = {g: hermitize(Phi.conj().T @ (G @ Phi)) for g, G in family.group_matrices.items()}
    return SubspaceProjection(S, mats, family)


# --------------------------------------------------------------------------
# generalized eigenproblem


@dataclass
class GEPSolution:
    eigenvalues: np.ndarray
    coefficient_vectors: np.ndarray  # columns, in the original (unrotated) basis
    effective_dim: int
    condition_number: float

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_coefficients(self) -> np.ndarray:
        return self.coefficient_vectors[:, 0]


def condition_number(S: np.ndarray) -> float:
    s = np.linalg.eigvalsh(hermitize(S))
    return float(s[-1] / s[0]) if s[0] > 0 else float("inf")


def generalized_eigh(H: np.ndarray, S: np.ndarray, threshold: float | None = None) -> GEPSolution:
    """Solve ``H v = E S v``.

    Without ``threshold`` the overlap matrix must be positive definite
    (smallest eigenvalue above ``PD_TOL``) and the problem is reduced by
    Cholesky congruence.  With ``threshold`` the eigenpairs of ``S`` below
    it are discarded and both matrices are rotated into the retained
    eigenvectors before solving.
    """
    H = hermitize(np.asarray(H, dtype=np.complex128))
    S = hermitize(np.asarray(S, dtype=np.complex128))
    if H.shape != S.shape or H.shape[0] != H.shape[1]:
        raise ValueError(f"incompatible shapes {H.shape} and {S.shape}")
    s, U = np.linalg.eigh(S)
    if threshold is None:
        if s[0] <= PD_TOL:
            raise ConditioningError(
                f"overlap matrix smallest eigenvalue {s[0]:.3e} <= {PD_TOL:g}; pass a threshold"
            )
        L = np.linalg.cholesky(S)
        Ht = scipy.linalg.solve_triangular(L, H, lower=True)
        Ht = scipy.linalg.solve_triangular(L, Ht.conj().T, lower=True).conj().T
        w, y = np.linalg.eigh(hermitize(Ht))
        v = scipy.linalg.solve_triangular(L.conj().T, y, lower=False)
        return GEPSolution(w, v, len(s), float(s[-1] / s[0]))
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    keep = s >= threshold
    if not np.any(keep):
        raise ConditioningError(f"threshold {threshold} discards every overlap eigenvalue (max {s[-1]:.3e})")
    Uk = U[:, keep]
    sk = s[keep]
    Hr = Uk.conj().T @ H @ Uk
    # retained S is diagonal: scale to a standard problem
    scale = 1.0 / np.sqrt(sk)
    w, y = np.linalg.eigh(hermitize(scale[:, None] * Hr * scale[None, :]))
    v = Uk @ (scale[:, None] * y)
    return GEPSolution(w, v, int(keep.sum()), float(sk[-1] / sk[0]))


def solve_gep(proj: SubspaceProjection, theta=None, threshold: float | None = None,
              family: ParamHamiltonian | None = None) -> GEPSolution:
    return generalized_eigh(proj.hamiltonian(theta, family), proj.S, threshold)


# --------------------------------------------------------------------------
# sweeps


@dataclass
class ECPoint:
    theta: np.ndarray
    energy: float
    coefficients: np.ndarray
    state: np.ndarray | None
    effective_dim: int
    condition_number: float


class VariationalBoundError(AssertionError):
    pass


def ec_sweep(basis: SubspaceBasis, family: ParamHamiltonian, targets, threshold: float | None = None,
             exact_energies: Sequence[float] | None = None, projection: SubspaceProjection | None = None,
             target_family: ParamHamiltonian | None = None, bound_tol: float = 1e-9) -> list[ECPoint]:
    """Solve the projected problem at every target, reusing one projection.

    ``family`` generated the basis; ``target_family`` (default ``family``)
    supplies the weights at the targets.  When ``exact_energies`` are given
    the Rayleigh-Ritz bound ``E_EC >= E_exact - bound_tol`` is asserted.
    """
    target_family = target_family or family
    if target_family.nsites != family.nsites:
        raise ValueError("source and target families act on different numbers of sites")
    proj = projection or project_operators(basis, family)
    _check_labels(target_family, proj.group_mats)
    points = targets.points if isinstance(targets, SweepGrid) else np.atleast_2d(targets)
    out = []
    for i, theta in enumerate(points):
        sol = solve_gep(proj, theta, threshold, family=target_family)
        c = sol.ground_coefficients
        state = normalize(basis.vectors.T @ c)
        if exact_energies is not None and sol.ground_energy < exact_energies[i] - bound_tol:
            raise VariationalBoundError(
                f"EC energy {sol.ground_energy:.12f} below exact {exact_energies[i]:.12f} at {tuple(theta)}"
            )
        out.append(ECPoint(theta, sol.ground_energy, c, state, sol.effective_dim, sol.condition_number))
    return out


def cross_family_sweep(basis: SubspaceBasis, source: ParamHamiltonian, target: ParamHamiltonian, targets,
                       threshold: float | None = None, exact_energies=None) -> list[ECPoint]:
    """EC with a basis prepared in ``source`` and weights from ``target``."""
    if source.labels != target.labels:
        raise ValueError(f"group labels differ: {source.labels} vs {target.labels}")
    return ec_sweep(basis, source, targets, threshold, exact_energies, target_family=target)


def ec_fidelity_from_coefficients(coeffs: np.ndarray, S: np.ndarray, overlaps: np.ndarray) -> float:
    """Fidelity of ``sum_i c_i phi_i`` with a state ``e`` given ``overlaps[i] = <e|phi_i>``."""
    norm2 = float(np.real(coeffs.conj() @ S @ coeffs))
    return float(abs(overlaps @ coeffs) ** 2 / norm2)
