"""Truncated ground-state preparation: Trotterized ITE, linear-ramp ASP and HVA-VQE."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.optimize

from .models import ParamHamiltonian
from .qcore import (
    PauliTerm,
    Spectrum,
    apply_pauli_term_exp,
    expectation,
    haar_random_state,
    normalize,
    product_state,
    uniform_state,
)

log = logging.getLogger(__name__)


def _step_count(total: float, step: float, what: str) -> int:
    n = total / step
    steps = round(n)
    if abs(n - steps) > 1e-9 * max(1.0, abs(n)):
        raise ValueError(f"{what}: {total} is not an integer multiple of {step}")
    return int(steps)


def trotter_step(state: np.ndarray, terms: Sequence[PauliTerm], angle: complex, order: int = 1) -> np.ndarray:
    """Product formula for ``exp(angle * H)``.

    ``order=1``: ``prod_k exp(angle c_k P_k)`` with the first term applied
    first.  ``order=2``: the symmetric (Strang) product, a forward sweep
    with half angles followed by a backward one.
    """
    if order == 1:
        for term in terms:
            state = apply_pauli_term_exp(state, term, angle)
        return state
    if order == 2:
        half = angle / 2
        for term in terms:
            state = apply_pauli_term_exp(state, term, half)
        for term in reversed(terms):
            state = apply_pauli_term_exp(state, term, half)
        return state
    raise ValueError(f"unsupported Trotter order {order}")


# --------------------------------------------------------------------------
# imaginary time evolution


@dataclass(frozen=True)
class ITEConfig:
    """``initial`` is ``"computational_uniform"``, ``"haar"`` (uses ``seed``) or a state array.

    ``trotter_order=2`` (symmetric splitting) keeps the Trotterized fixed
    point close to the true ground state at ``dtau=0.2``; first order caps
    the XY 5-site ground fidelity near 0.87.
    """

    dtau: float = 0.2
    tau_max: float = 1.6
    initial: object = "computational_uniform"
    seed: int = 0
    trotter_order: int = 2

    def __post_init__(self):
        if not self.dtau > 0:
            raise ValueError("dtau must be positive")
        if self.tau_max < 0:
            raise ValueError("tau_max must be non-negative")
        if self.trotter_order not in (1, 2):
            raise ValueError("trotter_order must be 1 or 2")
        _step_count(self.tau_max, self.dtau, "tau_max/dtau")

    @property
    def steps(self) -> int:
        return _step_count(self.tau_max, self.dtau, "tau_max/dtau")

    def initial_state(self, nsites: int, seed=None) -> np.ndarray:
        init = self.initial
        if isinstance(init, np.ndarray):
            if init.shape != (1 << nsites,):
                raise ValueError("given initial state has the wrong dimension")
            return normalize(init.astype(np.complex128))
        if init == "computational_uniform":
            return uniform_state(nsites)
        if init == "haar":
            return haar_random_state(nsites, self.seed if seed is None else seed)
        raise ValueError(f"unknown ITE initial state {init!r}")


@dataclass
class Evolution:
    state: np.ndarray
    energies: np.ndarray
    states: list = field(default_factory=list)


def run_ite(terms: Sequence[PauliTerm], cfg: ITEConfig, keep_states: bool = False,
            initial: np.ndarray | None = None) -> Evolution:
    """Trotterized ``exp(-tau H)`` with renormalization after every step.

    ``energies[0]`` is the energy of the initial state, ``energies[k]`` the
    energy after step ``k``.
    """
    terms = list(terms)
    nsites = terms[0].nsites
    psi = cfg.initial_state(nsites) if initial is None else normalize(initial)
    energies = [expectation(psi, terms)]
    states = [psi] if keep_states else []
    for step in range(cfg.steps):
        phi = trotter_step(psi, terms, -cfg.dtau, cfg.trotter_order)
        norm = np.linalg.norm(phi)
        if not norm > 1e-300 or not math.isfinite(norm):
            raise FloatingPointError(f"ITE state lost its norm at step {step + 1} (norm={norm})")
        psi = phi / norm
        energies.append(expectation(psi, terms))
        if keep_states:
            states.append(psi)
    return Evolution(psi, np.array(energies), states)


# --------------------------------------------------------------------------
# adiabatic state preparation


@dataclass(frozen=True)
class ASPConfig:
    """Linear ramp from ``theta_start`` over ``T_max`` in steps of ``dt``.

    Every preparation takes ``T_max/dt`` steps; a preparation aimed at an
    intermediate ``target`` ramps from ``theta_start`` to that target instead
    of ``theta_end`` (see ``run_asp``).
    """

    dt: float = 0.05
    T_max: float = 3.75
    theta_start: tuple = (3.0,)
    theta_end: tuple = (0.0,)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T_max < 0:
            raise ValueError("T_max must be non-negative")
        _step_count(self.T_max, self.dt, "T_max/dt")
        object.__setattr__(self, "theta_start", tuple(np.atleast_1d(self.theta_start).astype(float)))
        object.__setattr__(self, "theta_end", tuple(np.atleast_1d(self.theta_end).astype(float)))
        if len(self.theta_start) != len(self.theta_end):
            raise ValueError("ramp endpoints have different dimensions")

    @property
    def steps(self) -> int:
        return _step_count(self.T_max, self.dt, "T_max/dt")

    def path(self, target=None) -> np.ndarray:
        """Parameter values ``theta_j = start + j*dtheta`` for ``j = 1..N``, ``dtheta = (target - start)/N``.

        ``target`` defaults to ``theta_end`` and must lie on the segment
        between the two endpoints.
        """
        start = np.array(self.theta_start)
        end = np.array(self.theta_end)
        if target is None:
            target = end
        else:
            target = np.atleast_1d(np.asarray(target, dtype=float))
            if target.shape != start.shape:
                raise ValueError(f"target {target} has the wrong dimension for the ramp {start} -> {end}")
            span = end - start
            length = float(np.linalg.norm(span))
            offset = target - start
            if length == 0:
                if np.linalg.norm(offset) > 1e-12:
                    raise ValueError(f"target {target} is off the degenerate ramp at {start}")
            else:
                frac = float(offset @ span) / length**2
                if np.linalg.norm(offset - frac * span) > 1e-9 * length or not -1e-9 <= frac <= 1 + 1e-9:
                    raise ValueError(f"target {target} does not lie on the ramp {start} -> {end}")
        n = self.steps
        if n == 0:
            return np.empty((0, len(start)))
        dtheta = (target - start) / n
        return start + dtheta * np.arange(1, n + 1)[:, None]


def run_asp(family: ParamHamiltonian, cfg: ASPConfig, target=None, keep_states: bool = False,
            initial: np.ndarray | None = None) -> Evolution:
    """Trotterized adiabatic evolution along ``cfg``'s linear ramp.

    Starts from the exact ground state at ``theta_start`` and applies
    ``N = T_max/dt`` steps; step ``j`` is ``exp(-i dt H(theta_start + j*dtheta))``
    as a first-order Trotter product, ending exactly at ``H(target)``.
    ``energies[j]`` is measured with the Hamiltonian of step ``j``.
    """
    path = cfg.path(target)
    psi = family.spectrum(cfg.theta_start).ground_state if initial is None else initial
    energies = [expectation(psi, family.instantiate(cfg.theta_start))]
    states = [psi] if keep_states else []
    for theta in path:
        terms = family.instantiate(theta)
        psi = trotter_step(psi, terms, -1j * cfg.dt)
        energies.append(expectation(psi, terms))
        if keep_states:
            states.append(psi)
    return Evolution(psi, np.array(energies), states)


# --------------------------------------------------------------------------
# VQE with the Hamiltonian variational ansatz


@dataclass(frozen=True)
class VQEConfig:
    """HVA layers over the model's groups; ``max_iters=None`` runs to convergence."""

    layers: int = 2
    max_iters: int | None = 12
    optimizer_seed: int = 0
    initial_state: str = "neel"
    init_scale: float = 0.1
    gtol: float = 1e-6

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def product_state(self, nsites: int) -> np.ndarray:
        bits = self.initial_state
        if bits == "neel":
            bits = "".join("01"[k % 2] for k in range(nsites))
        elif bits == "zeros":
            bits = "0" * nsites
        elif bits == "ones":
            bits = "1" * nsites
        if len(bits) != nsites or set(bits) - set("01"):
            raise ValueError(f"bad product state {self.initial_state!r} for {nsites} sites")
        return product_state(bits)


def hva_gates(model: ParamHamiltonian) -> list[PauliTerm]:
    """One layer of generators: every term of every group, with unit coefficient."""
    return [PauliTerm(1.0, t.axes) for _, terms in model.groups for t in terms]


def hva_parameter_count(model: ParamHamiltonian, cfg: VQEConfig) -> int:
    return cfg.layers * len(hva_gates(model))


def hva_apply(params: np.ndarray, cfg: VQEConfig, model: ParamHamiltonian,
              initial: np.ndarray | None = None) -> np.ndarray:
    """Apply ``cfg.layers`` HVA layers, each ``exp(-i a_g P_g)`` in group order."""
    gates = hva_gates(model)
    params = np.asarray(params, dtype=float)
    if params.shape != (cfg.layers * len(gates),):
        raise ValueError(f"expected {cfg.layers * len(gates)} angles, got {params.shape}")
    psi = cfg.product_state(model.nsites) if initial is None else initial
    for angle, gate in zip(params, gates * cfg.layers):
        psi = apply_pauli_term_exp(psi, gate, -1j * angle)
    return psi


@dataclass
class VQEResult:
    state: np.ndarray
    params: np.ndarray
    energies: np.ndarray
    iterations: int
    converged: bool


def run_vqe(family: ParamHamiltonian, theta, cfg: VQEConfig) -> VQEResult:
    """Minimize ``<H(theta)>`` over HVA angles with BFGS.

    Gradients use the parameter-shift rule, exact for ``exp(-i a P)`` gates.
    An iteration is one accepted BFGS step; ``energies`` starts with the
    initial guess and has one entry per iteration.
    """
    terms = family.instantiate(theta)
    npar = hva_parameter_count(family, cfg)
    rng = np.random.default_rng(cfg.optimizer_seed)
    x0 = cfg.init_scale * rng.standard_normal(npar)
    psi0 = cfg.product_state(family.nsites)

    def energy(x):
        return expectation(hva_apply(x, cfg, family, psi0), terms)

    def grad(x):
        g = np.empty_like(x)
        shift = np.pi / 4
        for k in range(len(x)):
            xp = x.copy()
            xp[k] += shift
            xm = x.copy()
            xm[k] -= shift
            g[k] = energy(xp) - energy(xm)
        return g

    trace = [energy(x0)]

    def callback(xk):
        trace.append(energy(xk))

    options = {"gtol": cfg.gtol}
    if cfg.max_iters is not None:
        options["maxiter"] = cfg.max_iters
    res = scipy.optimize.minimize(energy, x0, jac=grad, method="BFGS", callback=callback, options=options)
    state = hva_apply(res.x, cfg, family, psi0)
    converged = bool(np.linalg.norm(grad(res.x)) < cfg.gtol)
    return VQEResult(state, res.x, np.array(trace), int(res.nit), converged)


# --------------------------------------------------------------------------
# diagnostics


def track_eigenstate_overlaps(states: Sequence[np.ndarray], spectrum: Spectrum) -> np.ndarray:
    """``table[s, k] = |<e_k|psi_s>|^2`` for every step ``s`` and eigenstate ``k``."""
    V = spectrum.eigenvectors
    out = []
    for psi in states:
        if psi.shape[0] != V.shape[0]:
            raise ValueError("state and spectrum dimensions differ")
        out.append(np.abs(V.conj().T @ psi) ** 2)
    return np.array(out)
