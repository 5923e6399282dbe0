"""State-vector kernel: Pauli strings, Pauli exponentials and exact diagonalization.

States are plain complex numpy arrays of length ``2**nsites``.  Site ``k`` is
bit ``k`` of the basis index (site 0 is the least significant bit), and bit
value 0 is the Z=+1 state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

MAX_SITES = 17
MAX_DENSE_SITES = 12

_LABELS = frozenset("IXYZ")


class CapacityError(ValueError):
    """The requested system is too large for the chosen representation."""


@dataclass(frozen=True)
class PauliTerm:
    """A real coefficient times a tensor product of single-site Paulis.

    ``axes[k]`` is the label acting on site ``k``.
    """

    coefficient: float
    axes: str

    def __post_init__(self):
        axes = "".join(self.axes).upper()
        if not axes or set(axes) - _LABELS:
            raise ValueError(f"invalid Pauli axes {self.axes!r}")
        coeff = float(self.coefficient)
        if not math.isfinite(coeff):
            raise ValueError("Pauli coefficient must be finite")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "coefficient", coeff)

    @classmethod
    def from_sites(cls, nsites: int, ops: dict[int, str], coefficient: float = 1.0) -> "PauliTerm":
        """Build a term from a sparse ``{site: label}`` map."""
        axes = ["I"] * nsites
        for site, label in ops.items():
            if not 0 <= site < nsites:
                raise ValueError(f"site {site} outside chain of {nsites}")
            axes[site] = label
        return cls(coefficient, "".join(axes))

    @property
    def nsites(self) -> int:
        return len(self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, a in enumerate(self.axes) if a != "I")

    def scaled(self, factor: float) -> "PauliTerm":
        return PauliTerm(self.coefficient * factor, self.axes)

    def __str__(self):
        ops = " ".join(f"{a}{k}" for k, a in enumerate(self.axes) if a != "I") or "I"
        return f"{self.coefficient:+g} {ops}"


@lru_cache(maxsize=4096)
def pauli_action(axes: str) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(src, phase)`` such that ``(P psi)[b] = phase[b] * psi[src[b]]``."""
    n = len(axes)
    flip = 0
    zy = 0
    ny = 0
    for k, a in enumerate(axes):
        if a in "XY":
            flip |= 1 << k
        if a in "ZY":
            zy |= 1 << k
        if a == "Y":
            ny += 1
    idx = np.arange(1 << n, dtype=np.int64)
    src = idx ^ flip
    # P|c> = i^ny (-1)^popcount(c & zy) |c ^ flip>, evaluated at c = src
    parity = _popcount(src & zy) & 1
    phase = (1j**ny) * (1 - 2 * parity).astype(np.complex128)
    src.setflags(write=False)
    phase.setflags(write=False)
    return src, phase


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


def nsites_of(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def _check_term(state: np.ndarray, term: PauliTerm) -> None:
    if state.shape[-1] != 1 << term.nsites:
        raise ValueError(
            f"term on {term.nsites} sites does not match state of dimension {state.shape[-1]}"
        )


def apply_pauli(state: np.ndarray, term: PauliTerm) -> np.ndarray:
    """Return ``coefficient * P @ state``.  Works on a trailing axis batch."""
    _check_term(state, term)
    src, phase = pauli_action(term.axes)
    return term.coefficient * phase * state[..., src]


def apply_pauli_term_exp(state: np.ndarray, term: PauliTerm, angle: complex) -> np.ndarray:
    """Return ``exp(angle * coefficient * P) @ state``.

    Uses ``exp(aP) = cosh(a) I + sinh(a) P``.  A purely imaginary ``angle``
    gives a unitary rotation; a real ``angle`` gives an imaginary-time factor
    whose result is not normalized.
    """
    _check_term(state, term)
    a = complex(angle) * term.coefficient
    if not (math.isfinite(a.real) and math.isfinite(a.imag)):
        raise ValueError("angle must be finite")
    src, phase = pauli_action(term.axes)
    return np.cosh(a) * state + np.sinh(a) * (phase * state[..., src])


def apply_hamiltonian(state: np.ndarray, terms: Iterable[PauliTerm]) -> np.ndarray:
    out = np.zeros(state.shape, dtype=np.complex128)
    for term in terms:
        out += apply_pauli(state, term)
    return out


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def expectation(state: np.ndarray, terms: Sequence[PauliTerm]) -> float:
    value = inner_product(state, apply_hamiltonian(state, terms))
    return value.real


def normalize(state: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(state)
    if not norm > 0.0 or not math.isfinite(norm):
        raise FloatingPointError(f"cannot normalize state with norm {norm}")
    return state / norm


def basis_state(nsites: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << nsites, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def product_state(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, site 0 first."""
    index = sum(1 << k for k, b in enumerate(bits) if b == "1")
    return basis_state(len(bits), index)


def uniform_state(nsites: int) -> np.ndarray:
    """Equal superposition of all computational basis states."""
    dim = 1 << nsites
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)


def haar_random_state(nsites: int, seed) -> np.ndarray:
    """Draw a state uniformly from the unit sphere of ``C^(2^nsites)``.

    ``seed`` may be an integer, a ``SeedSequence`` or a ``Generator``.
    """
    if nsites < 1:
        raise ValueError("nsites must be >= 1")
    rng = np.random.default_rng(seed)
    dim = 1 << nsites
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def pauli_matrix(term: PauliTerm) -> np.ndarray:
    """Dense matrix of a term, built from Kronecker products (independent of ``pauli_action``)."""
    mats = {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    out = np.array([[1.0 + 0j]])
    # highest site is the most significant factor
    for a in reversed(term.axes):
        out = np.kron(out, mats[a])
    return term.coefficient * out


def sparse_matrix(terms: Sequence[PauliTerm], nsites: int | None = None) -> scipy.sparse.csr_matrix:
    terms = list(terms)
    if nsites is None:
        if not terms:
            raise ValueError("cannot infer nsites from an empty term list")
        nsites = terms[0].nsites
    if nsites > MAX_SITES:
        raise CapacityError(f"{nsites} sites exceeds the supported maximum of {MAX_SITES}")
    dim = 1 << nsites
    idx = np.arange(dim)
    # group by flip pattern so each distinct off-diagonal is stored once
    diagonals: dict[int, np.ndarray] = {}
    for term in terms:
        if term.nsites != nsites:
            raise ValueError("terms act on differing numbers of sites")
        src, phase = pauli_action(term.axes)
        flip = int(src[0])
        acc = diagonals.setdefault(flip, np.zeros(dim, dtype=np.complex128))
        acc += term.coefficient * phase
    rows, cols, data = [], [], []
    for flip, vals in diagonals.items():
        keep = vals != 0
        rows.append(idx[keep])
        cols.append((idx ^ flip)[keep])
        data.append(vals[keep])
    if not rows:
        return scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
    mat = scipy.sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    if not np.iscomplexobj(mat.data) or np.all(mat.data.imag == 0):
        mat = mat.real.astype(np.float64)
    return mat


def dense_matrix(terms: Sequence[PauliTerm], nsites: int | None = None) -> np.ndarray:
    if nsites is None and terms:
        nsites = terms[0].nsites
    if nsites is not None and nsites > MAX_DENSE_SITES + 2:
        raise CapacityError(f"dense matrix for {nsites} sites is too large")
    return sparse_matrix(terms, nsites).toarray()


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues; ``eigenvectors[:, k]`` pairs with ``eigenvalues[k]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])


def exact_diagonalize(terms: Sequence[PauliTerm], nsites: int, k: int | None = None) -> Spectrum:
    """Diagonalize a Pauli sum.

    With ``k=None`` the full spectrum is computed by a dense Hermitian
    eigensolver (up to ``MAX_DENSE_SITES``).  With an integer ``k`` only the
    lowest ``k`` eigenpairs are returned; above 10 sites these come from
    sparse Lanczos, which reaches ``MAX_SITES``.
    """
    if nsites > MAX_SITES:
        raise CapacityError(f"{nsites} sites exceeds the supported maximum of {MAX_SITES}")
    dim = 1 << nsites
    if k is None and nsites > MAX_DENSE_SITES:
        raise CapacityError(
            f"full spectrum of {nsites} sites needs a {dim}x{dim} dense matrix; "
            f"pass k for the lowest eigenpairs"
        )
    mat = sparse_matrix(terms, nsites)
    if k is None or nsites <= 10 or k >= dim - 1:
        w, v = scipy.linalg.eigh(mat.toarray())
        if k is not None:
            w, v = w[:k], v[:, :k]
    else:
        rng = np.random.default_rng(0)
        v0 = rng.standard_normal(dim)
        w, v = scipy.sparse.linalg.eigsh(mat, k=k, which="SA", v0=v0, tol=1e-12)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    return Spectrum(np.asarray(w, dtype=float), np.asarray(v, dtype=np.complex128))
