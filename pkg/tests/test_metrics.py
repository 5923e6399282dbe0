import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecprep.metrics import (
    ErrorReport,
    basis_eigenstate_overlap,
    energy_gap_curve,
    fidelity,
    low_energy_weight,
    per_point_rel_error,
    rel_rms_error,
    rms_error,
)
from ecprep.models import SweepGrid, build_kagome_xxz, build_xxz_chain, build_xy_chain, make_sweep
from ecprep.qcore import basis_state, uniform_state
from ecprep.stateprep import ASPConfig
from ecprep.subspace import SubspaceBasis, build_basis, krylov_basis

from conftest import random_state

energies = st.lists(st.floats(-50, -0.1), min_size=1, max_size=20)


def test_fidelity_basics():
    psi = random_state(3, 0)
    assert fidelity(psi, psi) == pytest.approx(1.0)
    assert fidelity(basis_state(1, 0), basis_state(1, 1)) == 0.0
    assert fidelity(psi, np.exp(0.7j) * psi) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fidelity(psi, basis_state(2))


@settings(max_examples=50, deadline=None)
@given(a=st.integers(0, 10**6), b=st.integers(0, 10**6))
def test_fidelity_bounds_and_symmetry(a, b):
    x, y = random_state(3, a), random_state(3, b)
    f = fidelity(x, y)
    assert 0 <= f <= 1 + 1e-10
    assert f == pytest.approx(fidelity(y, x), abs=1e-15)


def test_rms_cases():
    e = np.array([-1.0, -2.0, -3.0])
    assert rms_error(e, e) == 0
    assert rms_error(e + 0.3, e) == pytest.approx(0.3)
    assert rms_error(e - 0.3, e) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        rms_error(e, e[:2])


def test_relative_cases():
    e = np.array([-1.0, -2.0, -3.0])
    assert rel_rms_error(e, e) == 0
    assert rel_rms_error(1.05 * e, e) == pytest.approx(0.05)
    np.testing.assert_allclose(per_point_rel_error(1.05 * e, e), 0.05)


def test_zero_exact_energy_is_flagged():
    rel = per_point_rel_error([0.1, -1.1], [0.0, -1.0])
    assert np.isnan(rel[0]) and rel[1] == pytest.approx(0.1)
    with pytest.warns(RuntimeWarning):
        assert rel_rms_error([0.1, -1.1], [0.0, -1.0]) == pytest.approx(0.1)
    rep = ErrorReport(np.zeros((2, 1)), [0.1, -1.1], [0.0, -1.0])
    assert list(rep.undefined_relative) == [True, False]


@settings(max_examples=50, deadline=None)
@given(exact=energies, seed=st.integers(0, 1000))
def test_errors_permutation_invariant(exact, seed):
    exact = np.array(exact)
    rng = np.random.default_rng(seed)
    cal = exact + rng.normal(0, 0.1, exact.size)
    perm = rng.permutation(exact.size)
    assert rms_error(cal[perm], exact[perm]) == pytest.approx(rms_error(cal, exact))
    assert rel_rms_error(cal[perm], exact[perm]) == pytest.approx(rel_rms_error(cal, exact))
    assert rms_error(cal, exact) >= 0


def test_error_report_aggregates():
    rep = ErrorReport(np.arange(3)[:, None], [-0.9, -2.0, -3.3], [-1.0, -2.0, -3.0], np.array([0.5, 1.0, 0.9]))
    agg = rep.aggregates()
    assert agg["p"] == 3
    assert agg["rms"] == pytest.approx(np.sqrt((0.01 + 0 + 0.09) / 3))
    assert agg["min_fidelity"] == 0.5 and agg["max_fidelity"] == 1.0
    np.testing.assert_allclose(rep.abs_error, [0.1, 0, 0.3], atol=1e-15)


def test_xxz_odd_chain_gap_is_field_splitting():
    gaps = energy_gap_curve(build_xxz_chain(9, B_Z=0.2), make_sweep((0, 3), 13, "J_Z"))
    np.testing.assert_allclose(gaps, 0.4, atol=1e-8)


def sector_ground_energies(n):
    """Lowest XY-chain energy per magnetization sector at zero field, by block diagonalization."""
    H = build_xy_chain(n, B_X=0.0).matrix([0.0]).toarray()
    out = {}
    for ups in range(n + 1):
        idx = [i for i in range(2**n) if bin(i).count("1") == n - ups]
        out[2 * ups - n] = np.linalg.eigvalsh(H[np.ix_(idx, idx)])[0]
    return out


def test_xy_gap_closes_at_crossings():
    n = 5
    e = sector_ground_energies(n)
    # E_M(B) = E_M(0) + B*M; crossings between successive ground sectors on B >= 0
    crossings = []
    B = np.linspace(0, 3, 3001)
    ground = [min(e, key=lambda m: e[m] + b * m) for b in B]
    for i in range(1, len(B)):
        if ground[i] != ground[i - 1]:
            m0, m1 = ground[i - 1], ground[i]
            crossings.append((e[m0] - e[m1]) / (m1 - m0))
    assert len(crossings) >= 2
    gaps = energy_gap_curve(build_xy_chain(n, B_X=0.0), SweepGrid(("B_Z",), np.array(crossings)))
    np.testing.assert_allclose(gaps, 0.0, atol=1e-9)


def test_gap_curve_continuity():
    fam = build_xy_chain(5)
    coarse = energy_gap_curve(fam, make_sweep((0, 3), 31, "B_Z"))
    fine = energy_gap_curve(fam, make_sweep((0, 3), 61, "B_Z"))
    assert np.max(np.abs(fine[::2] - coarse)) < 1e-12
    assert np.max(np.abs(np.diff(fine))) < 0.05 * 3 / 0.05


def test_kagome_gap_profiles_flip():
    fam = build_kagome_xxz(2, 2, B_Z=0.2)
    grid = make_sweep((-1, 2), 4, "J_Z")
    small = energy_gap_curve(fam.with_params(axes=("J_Z",), J=0.1), grid)
    large = energy_gap_curve(fam.with_params(axes=("J_Z",), J=1.5), grid)
    assert small[0] > large[0]
    assert small[-1] < large[-1]


def test_overlap_sum_rule_and_eigenbasis():
    fam = build_xy_chain(4)
    spec = fam.spectrum([1.0])
    F = basis_eigenstate_overlap(SubspaceBasis(spec.eigenvectors[:, :3].T, np.zeros((3, 1))), spec)
    np.testing.assert_allclose(F, [1, 1, 1] + [0] * 13, atol=1e-12)
    for k, seed in itertools.product((1, 4, 7), (0, 1)):
        vecs = np.array([random_state(4, seed * 10 + i) for i in range(k)])
        assert basis_eigenstate_overlap(vecs, spec).sum() == pytest.approx(k, abs=1e-8)
    with pytest.raises(ValueError):
        basis_eigenstate_overlap(np.ones((1, 8)) / np.sqrt(8), spec)


def test_asp_basis_concentrates_on_low_states(xy5):
    spec = xy5.spectrum([1.5])
    kb = krylov_basis(xy5.instantiate([1.5]), uniform_state(5), 7)
    ab = build_basis(xy5, make_sweep((0, 3), 7, "B_Z"), ASPConfig(0.05, 3.75))
    Fk = basis_eigenstate_overlap(kb, spec)
    Fa = basis_eigenstate_overlap(ab, spec)
    assert Fk.sum() == pytest.approx(7, abs=1e-8) and Fa.sum() == pytest.approx(7, abs=1e-8)
    assert low_energy_weight(Fk) == pytest.approx(0.6054180658726289, abs=1e-8)
    assert low_energy_weight(Fa) == pytest.approx(6.886672611717719, abs=1e-8)
    assert low_energy_weight(np.ones(3), 0.1) == 1.0
