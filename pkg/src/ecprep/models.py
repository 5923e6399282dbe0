"""Parameterized spin Hamiltonians as weighted groups of Pauli terms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .qcore import MAX_SITES, CapacityError, PauliTerm, exact_diagonalize, sparse_matrix

# Trotter and HVA order: fields first, then couplings
GROUP_ORDER = ("X", "Z", "XX", "YY", "ZZ")


@dataclass(frozen=True)
class ParamHamiltonian:
    """``H(theta) = sum_g weight_g(theta) * G_g``.

    Each group ``G_g`` is a sum of Pauli terms with unit-magnitude
    coefficients and is scaled by the coupling named in ``couplings[g]``.
    ``params`` holds the value of every coupling; the names in ``axes`` are
    the ones a parameter vector ``theta`` overrides, in order.
    """

    name: str
    nsites: int
    groups: tuple[tuple[str, tuple[PauliTerm, ...]], ...]
    couplings: Mapping[str, str]
    params: Mapping[str, float]
    axes: tuple[str, ...]
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        labels = [g for g, _ in self.groups]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate group labels in {labels}")
        for g in labels:
            if self.couplings.get(g) not in self.params:
                raise ValueError(f"group {g!r} has no coupling parameter")
        unknown = set(self.axes) - set(self.params)
        if unknown:
            raise ValueError(f"unknown sweep axes {sorted(unknown)}")
        if self.nsites > MAX_SITES:
            raise CapacityError(f"{self.nsites} sites exceeds the supported maximum of {MAX_SITES}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(g for g, _ in self.groups)

    def group(self, label: str) -> tuple[PauliTerm, ...]:
        return dict(self.groups)[label]

    def values(self, theta=None) -> dict[str, float]:
        vals = dict(self.params)
        if theta is not None:
            theta = np.atleast_1d(np.asarray(theta, dtype=float))
            if theta.shape != (len(self.axes),):
                raise ValueError(f"expected {len(self.axes)} parameters {self.axes}, got {theta.shape}")
            vals.update(zip(self.axes, map(float, theta)))
        return vals

    def weights(self, theta=None) -> np.ndarray:
        vals = self.values(theta)
        return np.array([vals[self.couplings[g]] for g in self.labels])

    def instantiate(self, theta=None) -> list[PauliTerm]:
        """Pauli terms of ``H(theta)`` in Trotter order, zero-weight groups dropped."""
        out = []
        for (label, terms), w in zip(self.groups, self.weights(theta)):
            if w != 0.0:
                out.extend(t.scaled(w) for t in terms)
        return out

    @cached_property
    def group_matrices(self) -> dict:
        return {g: sparse_matrix(terms, self.nsites) for g, terms in self.groups}

    def matrix(self, theta=None):
        mats = self.group_matrices
        out = None
        for g, w in zip(self.labels, self.weights(theta)):
            out = w * mats[g] if out is None else out + w * mats[g]
        return out

    def spectrum(self, theta=None, k: int | None = None):
        return exact_diagonalize(self.instantiate(theta), self.nsites, k=k)

    def with_params(self, axes: Sequence[str] | None = None, **values: float) -> "ParamHamiltonian":
        """Same operator groups with different fixed couplings (or sweep axes)."""
        unknown = set(values) - set(self.params)
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)}")
        params = {**self.params, **{k: float(v) for k, v in values.items()}}
        return replace(self, params=params, axes=tuple(axes) if axes is not None else self.axes)

    def __hash__(self):
        return hash((self.name, self.nsites, self.labels, tuple(sorted(self.params.items())), self.axes))

    def __eq__(self, other):
        if not isinstance(other, ParamHamiltonian):
            return NotImplemented
        return (
            self.name == other.name
            and self.groups == other.groups
            and dict(self.couplings) == dict(other.couplings)
            and dict(self.params) == dict(other.params)
            and self.axes == other.axes
        )


def _ordered(groups: dict[str, list[PauliTerm]]):
    return tuple((g, tuple(groups[g])) for g in GROUP_ORDER if g in groups)


def _bond_groups(nsites: int, bonds, labels=("XX", "YY", "ZZ")):
    return {
        ab + ab: [PauliTerm.from_sites(nsites, {i: ab, j: ab}) for i, j in bonds]
        for ab in (lab[0] for lab in labels)
    }


def _check_chain(N: int):
    if N < 2:
        raise ValueError(f"chain needs at least 2 sites, got {N}")
    if N > MAX_SITES:
        raise CapacityError(f"{N} sites exceeds the supported maximum of {MAX_SITES}")


def build_xy_chain(N: int, J: float = 1.0, B_X: float = 0.2, B_Z: float = 0.0, axes=("B_Z",)) -> ParamHamiltonian:
    """Open XY chain with a uniform Z field and a staggered X field.

    The staggered field on site ``k`` (0-based) has sign ``(-1)**(k+1)``, so
    the first site carries ``-B_X``.
    """
    _check_chain(N)
    bonds = [(i, i + 1) for i in range(N - 1)]
    groups = _bond_groups(N, bonds, ("XX", "YY"))
    groups["Z"] = [PauliTerm.from_sites(N, {i: "Z"}) for i in range(N)]
    groups["X"] = [PauliTerm.from_sites(N, {i: "X"}, (-1.0) ** (i + 1)) for i in range(N)]
    return ParamHamiltonian(
        name="xy_chain",
        nsites=N,
        groups=_ordered(groups),
        couplings={"XX": "J", "YY": "J", "Z": "B_Z", "X": "B_X"},
        params={"J": float(J), "B_X": float(B_X), "B_Z": float(B_Z)},
        axes=tuple(axes),
        meta={"N": N},
    )


def build_xxz_chain(N: int, J: float = 1.0, J_Z: float = 0.0, B_Z: float = 0.2, axes=("J_Z",)) -> ParamHamiltonian:
    """Open XXZ chain with a uniform Z field; every sum runs over the N-1 bonds."""
    _check_chain(N)
    bonds = [(i, i + 1) for i in range(N - 1)]
    groups = _bond_groups(N, bonds)
    groups["Z"] = [PauliTerm.from_sites(N, {i: "Z"}) for i in range(N)]
    return ParamHamiltonian(
        name="xxz_chain",
        nsites=N,
        groups=_ordered(groups),
        couplings={"XX": "J", "YY": "J", "ZZ": "J_Z", "Z": "B_Z"},
        params={"J": float(J), "J_Z": float(J_Z), "B_Z": float(B_Z)},
        axes=tuple(axes),
        meta={"N": N},
    )


def kagome_bonds(N_X: int, N_Y: int) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds of a periodic ``N_X x N_Y`` kagome cluster.

    Unit cell ``(x, y)`` holds sites ``A, B, C = 3c, 3c+1, 3c+2`` with
    ``c = x + N_X*y``; A sits at the origin, B at ``a1/2`` and C at ``a2/2``.
    Each cell contributes one up triangle (A-B-C) and the bonds
    ``B-A(x+1)``, ``C-A(y+1)``, ``B-C(x+1, y-1)`` of a down triangle.
    Returned pairs are sorted with ``i < j`` and deduplicated.
    """
    if N_X < 1 or N_Y < 1:
        raise ValueError("kagome cluster needs N_X, N_Y >= 1")

    def site(x, y, s):
        return 3 * ((x % N_X) + N_X * (y % N_Y)) + s

    bonds = set()
    for x, y in itertools.product(range(N_X), range(N_Y)):
        a, b, c = site(x, y, 0), site(x, y, 1), site(x, y, 2)
        for i, j in [(a, b), (a, c), (b, c),
                     (b, site(x + 1, y, 0)),
                     (c, site(x, y + 1, 0)),
                     (b, site(x + 1, y - 1, 2))]:
            if i != j:
                bonds.add((min(i, j), max(i, j)))
    return sorted(bonds)


def build_kagome_xxz(N_X: int, N_Y: int, J: float = 1.0, J_Z: float = 0.0, B_Z: float = 0.2,
                     axes=("J", "J_Z")) -> ParamHamiltonian:
    """Kagome XXZ model with a Z field on a periodic cluster of ``3*N_X*N_Y`` sites."""
    if N_X < 1 or N_Y < 1:
        raise ValueError("kagome cluster needs N_X, N_Y >= 1")
    n = 3 * N_X * N_Y
    if n > MAX_SITES:
        raise CapacityError(f"kagome {N_X}x{N_Y} has {n} sites, above the maximum of {MAX_SITES}")
    groups = _bond_groups(n, kagome_bonds(N_X, N_Y))
    groups["Z"] = [PauliTerm.from_sites(n, {i: "Z"}) for i in range(n)]
    return ParamHamiltonian(
        name="kagome_xxz",
        nsites=n,
        groups=_ordered(groups),
        couplings={"XX": "J", "YY": "J", "ZZ": "J_Z", "Z": "B_Z"},
        params={"J": float(J), "J_Z": float(J_Z), "B_Z": float(B_Z)},
        axes=tuple(axes),
        meta={"N_X": N_X, "N_Y": N_Y},
    )


MODELS = {
    "xy_chain": build_xy_chain,
    "xxz_chain": build_xxz_chain,
    "kagome_xxz": build_kagome_xxz,
}


def build_model(name: str, **kwargs) -> ParamHamiltonian:
    try:
        builder = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return builder(**kwargs)


@dataclass(frozen=True)
class SweepGrid:
    """Ordered parameter vectors; ``points`` has shape ``(n, len(axes))``."""

    axes: tuple[str, ...]
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] == 0:
            raise ValueError("sweep grid is empty")
        if pts.shape[1] != len(self.axes):
            raise ValueError(f"points have {pts.shape[1]} columns for axes {self.axes}")
        pts.setflags(write=False)
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def column(self, axis: str) -> np.ndarray:
        return self.points[:, self.axes.index(axis)]

    def cross(self, other: "SweepGrid") -> "SweepGrid":
        """Cartesian product; this grid's axes vary slowest."""
        pts = [np.concatenate([p, q]) for p in self.points for q in other.points]
        return SweepGrid(self.axes + other.axes, np.array(pts))


def make_sweep(range_: tuple[float, float], count: int, axis: str = "theta") -> SweepGrid:
    """``count`` equally spaced points over the closed interval ``range_``."""
    lo, hi = map(float, range_)
    if count < 1:
        raise ValueError("sweep needs count >= 1")
    if lo > hi:
        raise ValueError(f"sweep range ({lo}, {hi}) has lo > hi")
    pts = np.array([lo]) if count == 1 else np.linspace(lo, hi, count)
    return SweepGrid((axis,), pts[:, None])
