import sys

import numpy as np
import pytest
import scipy.linalg

from ecprep.models import build_xy_chain, make_sweep
from ecprep.qcore import PauliTerm, pauli_matrix


def dense_from_terms(terms, nsites):
    """Independent oracle: Kronecker-product construction of a Pauli sum."""
    out = np.zeros((1 << nsites, 1 << nsites), dtype=complex)
    for t in terms:
        out += pauli_matrix(t)
    return out


def dense_expm(terms, nsites, angle):
    """``exp(angle * H)`` via eigendecomposition of the Hermitian generator."""
    H = dense_from_terms(terms, nsites)
    w, v = scipy.linalg.eigh(H)
    return (v * np.exp(angle * w)) @ v.conj().T


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return z / np.linalg.norm(z)


def random_term(n, rng, coefficient=None):
    axes = "".join(rng.choice(list("IXYZ"), size=n))
    c = rng.normal() if coefficient is None else coefficient
    return PauliTerm(c, axes)


@pytest.fixture(scope="session")
def xy5():
    return build_xy_chain(5, J=1.0, B_X=0.2)


@pytest.fixture(scope="session")
def xy5_targets():
    return make_sweep((0.0, 3.0), 20, "B_Z")


@pytest.fixture(scope="session")
def xy5_exact(xy5, xy5_targets):
    return [xy5.spectrum(t) for t in xy5_targets]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
