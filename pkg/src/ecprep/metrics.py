"""Error measures and spectral diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .models import ParamHamiltonian, SweepGrid
from .qcore import Spectrum

ZERO_ENERGY_TOL = 1e-12


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def _pair(E_cal, E_exact):
    E_cal = np.asarray(E_cal, dtype=float)
    E_exact = np.asarray(E_exact, dtype=float)
    if E_cal.shape != E_exact.shape:
        raise ValueError(f"length mismatch: {E_cal.shape} vs {E_exact.shape}")
    if E_cal.size == 0:
        raise ValueError("need at least one point")
    return E_cal, E_exact


def rms_error(E_cal, E_exact) -> float:
    E_cal, E_exact = _pair(E_cal, E_exact)
    return float(np.sqrt(np.mean((E_cal - E_exact) ** 2)))


def per_point_rel_error(E_cal, E_exact) -> np.ndarray:
    """``|E_cal - E_exact| / |E_exact|``; NaN where the exact energy vanishes."""
    E_cal, E_exact = _pair(E_cal, E_exact)
    out = np.full(E_cal.shape, np.nan)
    ok = np.abs(E_exact) > ZERO_ENERGY_TOL
    out[ok] = np.abs(E_cal[ok] - E_exact[ok]) / np.abs(E_exact[ok])
    return out


def rel_rms_error(E_cal, E_exact) -> float:
    """Root-mean-square of the per-point relative errors.

    Points with vanishing exact energy are left out with a warning.
    """
    rel = per_point_rel_error(E_cal, E_exact)
    ok = ~np.isnan(rel)
    if not ok.all():
        warnings.warn(f"{(~ok).sum()} point(s) with zero exact energy excluded from relative RMS", RuntimeWarning)
    if not ok.any():
        return float("nan")
    return float(np.sqrt(np.mean(rel[ok] ** 2)))


@dataclass
class ErrorReport:
    """Per-target comparison plus aggregates; ``p`` is the number of targets."""

    thetas: np.ndarray
    E_cal: np.ndarray
    E_exact: np.ndarray
    fidelities: np.ndarray | None = None
    abs_error: np.ndarray = field(init=False)
    rel_error: np.ndarray = field(init=False)

    def __post_init__(self):
        self.E_cal, self.E_exact = _pair(self.E_cal, self.E_exact)
        self.abs_error = np.abs(self.E_cal - self.E_exact)
        self.rel_error = per_point_rel_error(self.E_cal, self.E_exact)

    @property
    def p(self) -> int:
        return len(self.E_cal)

    @property
    def rms(self) -> float:
        return rms_error(self.E_cal, self.E_exact)

    @property
    def rel_rms(self) -> float:
        return rel_rms_error(self.E_cal, self.E_exact)

    @property
    def undefined_relative(self) -> np.ndarray:
        return np.isnan(self.rel_error)

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.fidelities)) if self.fidelities is not None else float("nan")

    @property
    def max_fidelity(self) -> float:
        return float(np.max(self.fidelities)) if self.fidelities is not None else float("nan")

    def aggregates(self) -> dict:
        return {
            "p": self.p,
            "rms": self.rms,
            "rel_rms": self.rel_rms,
            "min_fidelity": self.min_fidelity,
            "max_fidelity": self.max_fidelity,
        }


def energy_gap_curve(family: ParamHamiltonian, sweep: SweepGrid, k: int = 2) -> np.ndarray:
    """``E_1 - E_0`` from the exact spectrum at every sweep point."""
    gaps = []
    for theta in sweep.points:
        spec = family.spectrum(theta, k=k if family.nsites > 10 else None)
        gaps.append(spec.eigenvalues[1] - spec.eigenvalues[0])
    return np.array(gaps)


def basis_eigenstate_overlap(basis, spectrum: Spectrum) -> np.ndarray:
    """``F_i = sum_j |<e_i|phi_j>|^2`` over every eigenstate ``e_i`` of ``spectrum``."""
    vectors = basis.vectors if hasattr(basis, "vectors") else np.atleast_2d(basis)
    V = spectrum.eigenvectors
    if vectors.shape[1] != V.shape[0]:
        raise ValueError("basis and spectrum dimensions differ")
    return np.sum(np.abs(V.conj().T @ vectors.T) ** 2, axis=1)


def low_energy_weight(F: np.ndarray, fraction: float = 0.1) -> float:
    """Total ``F`` weight on the lowest ``fraction`` of eigenstates (at least one)."""
    n = max(1, int(round(fraction * len(F))))
    return float(np.sum(F[:n]))
