"""Declarative experiment runner.

    ecprep list
    ecprep validate CONFIG
    ecprep run CONFIG [--out DIR] [--workers N] [--seed S]

A config is a TOML file with a ``kind`` and the sections that kind needs.
Bundled configs live in ``ecprep/configs`` and may be named without their
directory or suffix.  Each run writes long-format CSV tables (one row per
point, method and quantity), a ``meta.json`` sidecar that echoes the
resolved config, and ``timing.json`` with wall times.  Everything except
``timing.json`` is byte-identical between runs of the same config.

Exit codes: 0 success, 1 config error, 2 numeric or capacity error.
The default output directory is ``$ECPREP_OUT`` or ``./ecprep_out``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .metrics import (
    basis_eigenstate_overlap,
    fidelity,
    low_energy_weight,
    per_point_rel_error,
    rel_rms_error,
    rms_error,
)
from .models import ParamHamiltonian, SweepGrid, build_model, make_sweep
from .noise import ConfusionModel, NoiseConfig, noise_study, noisy_asp_ensemble
from .qcore import CapacityError, expectation, normalize, uniform_state
from .stateprep import ASPConfig, ITEConfig, VQEConfig, run_asp, run_ite, track_eigenstate_overlaps
from .subspace import (
    ConditioningError,
    PreparationError,
    VariationalBoundError,
    build_basis,
    ec_sweep,
    krylov_basis,
    prepare_state,
)

ENV_OUT = "ECPREP_OUT"
DEFAULT_OUT = "ecprep_out"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# config schema


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSpec(Strict):
    name: Literal["xy_chain", "xxz_chain", "kagome_xxz"]
    params: dict[str, float] = {}
    axes: list[str]

    def build(self, **override) -> ParamHamiltonian:
        kwargs = {**self.params, **override}
        for size in ("N", "N_X", "N_Y"):
            if size in kwargs:
                kwargs[size] = int(kwargs[size])
        return build_model(self.name, axes=tuple(self.axes), **kwargs)


class SweepSpec(Strict):
    """Equally spaced points per axis, crossed with the first axis slowest."""

    ranges: list[tuple[float, float]]
    counts: list[int]

    @model_validator(mode="after")
    def _same_length(self):
        if len(self.ranges) != len(self.counts):
            raise ValueError("ranges and counts need one entry per axis")
        return self

    def grid(self, axes) -> SweepGrid:
        if len(axes) != len(self.ranges):
            raise ValueError(f"sweep has {len(self.ranges)} ranges for model axes {list(axes)}")
        grid = None
        for ax, r, n in zip(axes, self.ranges, self.counts):
            g = make_sweep(r, n, ax)
            grid = g if grid is None else grid.cross(g)
        return grid


class ITESpec(Strict):
    kind: Literal["ite"]
    dtau: float = 0.2
    tau_max: float = 1.6
    initial: Literal["computational_uniform", "haar"] = "computational_uniform"
    haar_seed: int = 0
    trotter_order: int = 2
    scan: list[float] = []  # extra tau_max values for an error-vs-truncation curve

    def config(self, knob=None) -> ITEConfig:
        return ITEConfig(self.dtau, self.tau_max if knob is None else knob, self.initial, self.haar_seed,
                         self.trotter_order)


class ASPSpec(Strict):
    kind: Literal["asp"]
    dt: float = 0.05
    T_max: float = 3.75
    theta_start: list[float] = [3.0]
    theta_end: list[float] = [0.0]
    scan: list[float] = []

    def config(self, knob=None) -> ASPConfig:
        return ASPConfig(self.dt, self.T_max if knob is None else knob, tuple(self.theta_start),
                         tuple(self.theta_end))


class VQESpec(Strict):
    kind: Literal["vqe"]
    layers: int = 2
    max_iters: Optional[int] = 12
    optimizer_seed: int = 0
    initial_state: str = "neel"
    init_scale: float = 0.1
    scan: list[int] = []

    def config(self, knob=None) -> VQEConfig:
        return VQEConfig(self.layers, self.max_iters if knob is None else int(knob), self.optimizer_seed,
                         self.initial_state, self.init_scale)


MethodSpec = Annotated[Union[ITESpec, ASPSpec, VQESpec], Field(discriminator="kind")]


def _knob(spec) -> float:
    return {"ite": "tau_max", "asp": "T_max", "vqe": "max_iters"}[spec.kind]


class Base(Strict):
    name: str
    figure: str
    description: str = ""
    seed: int = 0


class ECExperiment(Base):
    """EC with one or more preparation methods over a target sweep."""

    kind: Literal["ec"]
    model: ModelSpec
    targets: SweepSpec
    training: SweepSpec
    methods: list[MethodSpec]
    target_params: dict[str, float] = {}  # fixed couplings of the target family, if it differs
    threshold: Optional[float] = None
    spectrum_levels: int = 0
    scan_kps: list[int] = []  # extra training counts (last training axis) for the truncation scan


class ScalingModel(Strict):
    model: ModelSpec
    sizes: list[int]
    method: ASPSpec
    targets: SweepSpec
    max_kp_offset: int = 0  # k_p runs up to N + offset


class ScalingExperiment(Base):
    kind: Literal["scaling"]
    families: list[ScalingModel]
    tolerance: float = 0.05


class NoiseSpec(Strict):
    sigmas: list[float]
    n_trajectories: int = 500
    bootstrap_resamples: int = 1000
    full: ASPSpec
    truncated: ASPSpec
    k_ps: list[int] = [5, 6, 7]
    alpha_schedule: list[tuple[float, float]] = []
    confusion: Optional[tuple[float, float, float]] = None
    mechanism: Literal["gate", "hamiltonian"] = "gate"


class NoiseExperiment(Base):
    kind: Literal["noise"]
    model: ModelSpec
    targets: SweepSpec
    noise: NoiseSpec


class GapExperiment(Base):
    """Low spectrum and ground gap of several model variants over one sweep."""

    kind: Literal["gap"]
    model: ModelSpec
    variants: list[dict[str, float]]
    sweep: SweepSpec
    levels: int = 2


class ITEOverlapExperiment(Base):
    kind: Literal["ite_overlaps"]
    model: ModelSpec
    theta: list[float]
    method: ITESpec
    initial_states: list[Literal["eigen_uniform", "computational_uniform", "haar"]]


class ASPFidelityExperiment(Base):
    kind: Literal["asp_fidelity"]
    model: ModelSpec
    method: ASPSpec
    T_max: list[float]


class BasisOverlapExperiment(Base):
    kind: Literal["basis_overlap"]
    model: ModelSpec
    theta: list[float]
    k_p: int = 7
    training: SweepSpec
    method: ASPSpec
    sigmas: list[float] = [0.0]
    n_trajectories: int = 100
    mechanism: Literal["gate", "hamiltonian"] = "gate"
    low_fraction: float = 0.1


Experiment = Annotated[
    Union[ECExperiment, ScalingExperiment, NoiseExperiment, GapExperiment, ITEOverlapExperiment,
          ASPFidelityExperiment, BasisOverlapExperiment],
    Field(discriminator="kind"),
]


class _Root(BaseModel):
    experiment: Experiment


# --------------------------------------------------------------------------
# loading and validation


def configs_dir():
    return resources.files("ecprep") / "configs"


def bundled_configs() -> dict[str, Path]:
    return {p.name[:-5]: Path(str(p)) for p in sorted(configs_dir().iterdir(), key=lambda p: p.name)
            if p.name.endswith(".toml")}


def resolve_config(name: str) -> Path:
    path = Path(name)
    if path.is_file():
        return path
    bundled = bundled_configs()
    key = path.name[:-5] if path.name.endswith(".toml") else path.name
    if key in bundled:
        return bundled[key]
    raise ConfigError(f"no config file {name!r} and no bundled config of that name")


def _error_path(err) -> str:
    loc = [str(x) for x in err["loc"] if not str(x).startswith(("function-", "tagged-union"))]
    # drop the discriminator values pydantic inserts into the location
    kinds = {"ec", "scaling", "noise", "gap", "ite_overlaps", "asp_fidelity", "basis_overlap", "ite", "asp", "vqe"}
    return ".".join(x for x in loc[1:] if x not in kinds) or "<root>"


def parse_config(data: dict, seed: int | None = None):
    """Validate a config mapping, then build every model so bad couplings fail early."""
    if seed is not None:
        data = {**data, "seed": seed}
    try:
        exp = _Root(experiment=data).experiment
    except ValidationError as exc:
        msgs = [f"{_error_path(e)}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("invalid config: " + "; ".join(msgs)) from None
    try:
        _check(exp)
    except CapacityError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    return exp


def load_config(path, seed: int | None = None):
    path = resolve_config(str(path))
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, seed)


def _check(exp) -> None:
    """Cheap precondition checks: build models and method configs without any compute."""
    if isinstance(exp, ECExperiment):
        fam = exp.model.build()
        exp.targets.grid(fam.axes)
        exp.training.grid(fam.axes)
        fam.with_params(**exp.target_params)
        if not exp.methods:
            raise ValueError("methods: at least one method is required")
        for m in exp.methods:
            m.config()
            for v in m.scan:
                m.config(v)
    elif isinstance(exp, ScalingExperiment):
        for f in exp.families:
            for n in f.sizes:
                fam = f.model.build(N=n)
                f.targets.grid(fam.axes)
            f.method.config()
    elif isinstance(exp, NoiseExperiment):
        fam = exp.model.build()
        exp.targets.grid(fam.axes)
        NoiseConfig(0.0, exp.noise.n_trajectories, exp.seed, exp.noise.bootstrap_resamples)
        for s in exp.noise.sigmas:
            NoiseConfig(s)
        exp.noise.full.config()
        exp.noise.truncated.config()
        if exp.noise.confusion is not None:
            ConfusionModel(*exp.noise.confusion)
        if any(k < 1 for k in exp.noise.k_ps):
            raise ValueError("noise.k_ps entries must be >= 1")
    elif isinstance(exp, GapExperiment):
        for v in exp.variants:
            fam = exp.model.build(**v)
            exp.sweep.grid(fam.axes)
        if exp.levels < 2:
            raise ValueError("levels must be >= 2 for a gap")
    elif isinstance(exp, ITEOverlapExperiment):
        exp.model.build().values(exp.theta)
        exp.method.config()
    elif isinstance(exp, ASPFidelityExperiment):
        exp.model.build()
        for T in exp.T_max:
            exp.method.config(T)
    elif isinstance(exp, BasisOverlapExperiment):
        fam = exp.model.build()
        fam.values(exp.theta)
        exp.training.grid(fam.axes)
        exp.method.config()
        for s in exp.sigmas:
            NoiseConfig(s, exp.n_trajectories)


# --------------------------------------------------------------------------
# output


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


class Table:
    def __init__(self, name: str, columns):
        self.name = name
        self.columns = list(columns)
        self.rows = []

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"table {self.name}: {len(values)} values for columns {self.columns}")
        self.rows.append(values)

    def write(self, directory: Path) -> Path:
        path = directory / f"{self.name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([fmt(v) for v in r])
        return path


class Run:
    """Tables and per-stage timings collected while an experiment runs."""

    def __init__(self, workers: int = 1):
        self.tables: dict[str, Table] = {}
        self.timing: dict[str, float] = {}
        self.workers = workers

    def table(self, name, columns) -> Table:
        if name not in self.tables:
            self.tables[name] = Table(name, columns)
        return self.tables[name]

    @contextmanager
    def stage(self, label):
        t0 = time.perf_counter()
        yield
        self.timing[label] = self.timing.get(label, 0.0) + time.perf_counter() - t0

    def map(self, f, xs):
        """Ordered map; threads when ``workers > 1``.  Results do not depend on the worker count."""
        xs = list(xs)
        if self.workers <= 1 or len(xs) <= 1:
            return [f(x) for x in xs]
        with ThreadPoolExecutor(self.workers) as pool:
            return list(pool.map(f, xs))


# --------------------------------------------------------------------------
# experiment kinds


def _exact(fam: ParamHamiltonian, theta, levels: int = 1):
    k = None if fam.nsites <= 10 else max(levels, 2)
    return fam.spectrum(theta, k=k)


def run_ec(exp: ECExperiment, run: Run):
    src = exp.model.build()
    dst = src.with_params(**exp.target_params) if exp.target_params else src
    targets = exp.targets.grid(src.axes)
    training = exp.training.grid(src.axes)
    axes = list(src.axes)
    with run.stage("exact"):
        specs = run.map(lambda t: _exact(dst, t, exp.spectrum_levels), targets.points)
    exact = np.array([s.ground_energy for s in specs])
    if exp.spectrum_levels:
        tab = run.table("spectrum", [*axes, "level", "energy"])
        for t, s in zip(targets.points, specs):
            for lvl, e in enumerate(s.eigenvalues[:exp.spectrum_levels]):
                tab.add(*t, lvl, e)
    energies = run.table("energies", ["method", *axes, "quantity", "value"])
    for t, e in zip(targets.points, exact):
        energies.add("exact", *t, "energy", e)
    summary = run.table("summary", ["method", "k_p", "truncation", "quantity", "value"])
    basis_tab = run.table("basis", ["method", *axes, "quantity", "value"])
    main_kp = len(training)
    kps = [main_kp, *[k for k in exp.scan_kps if k != main_kp]]

    for spec in exp.methods:
        label = spec.kind
        for knob in [None, *spec.scan]:
            cfg = spec.config(knob)
            level = getattr(cfg, _knob(spec))
            with run.stage(f"{label}:{level}:truncated"):
                trunc = run.map(lambda t: prepare_state(dst, t, cfg), targets.points)
            e_tr = np.array([expectation(s, dst.instantiate(t)) for s, t in zip(trunc, targets.points)])
            f_tr = np.array([fidelity(s, sp.ground_state) for s, sp in zip(trunc, specs)])
            rel_tr = per_point_rel_error(e_tr, exact)
            r_tr = rms_error(e_tr, exact)
            for q, v in (("rms_truncated", r_tr), ("rel_rms_truncated", rel_rms_error(e_tr, exact)),
                         ("max_rel_error_truncated", np.nanmax(rel_tr)),
                         ("median_rel_error_truncated", np.nanmedian(rel_tr)),
                         ("min_fidelity_truncated", f_tr.min())):
                summary.add(label, 0, level, q, v)
            for k in kps:
                train = exp.training.model_copy(update={"counts": [*exp.training.counts[:-1], k]}).grid(src.axes)
                with run.stage(f"{label}:{level}:k{k}"):
                    basis = build_basis(src, train, cfg, mapper=run.map)
                    ec = ec_sweep(basis, src, targets, exp.threshold, exact_energies=exact, target_family=dst)
                e_ec = np.array([p.energy for p in ec])
                f_ec = np.array([fidelity(p.state, s.ground_state) for p, s in zip(ec, specs)])
                rel_ec = per_point_rel_error(e_ec, exact)
                r_ec = rms_error(e_ec, exact)
                for q, v in (("rms_ec", r_ec), ("reduction", 1 - r_ec / r_tr if r_tr else 0.0),
                             ("rel_rms_ec", rel_rms_error(e_ec, exact)), ("max_rel_error_ec", np.nanmax(rel_ec)),
                             ("median_rel_error_ec", np.nanmedian(rel_ec)), ("min_fidelity_ec", f_ec.min()),
                             ("max_condition_number", max(p.condition_number for p in ec))):
                    summary.add(label, k, level, q, v)
                if knob is not None or k != main_kp:
                    continue
                for i, t in enumerate(targets.points):
                    for q, v in (("ec_energy", e_ec[i]), ("truncated_energy", e_tr[i]), ("ec_fidelity", f_ec[i]),
                                 ("truncated_fidelity", f_tr[i]), ("ec_rel_error", rel_ec[i]),
                                 ("truncated_rel_error", rel_tr[i]), ("condition_number", ec[i].condition_number)):
                        energies.add(label, *t, q, v)
                for t, v in zip(basis.training_points, basis.vectors):
                    s = _exact(src, t)
                    e = expectation(v, src.instantiate(t))
                    basis_tab.add(label, *t, "energy", e)
                    basis_tab.add(label, *t, "rel_error", per_point_rel_error([e], [s.ground_energy])[0])
                    basis_tab.add(label, *t, "fidelity", fidelity(v, s.ground_state))


def run_scaling(exp: ScalingExperiment, run: Run):
    heat = run.table("heatmap", ["model", "N", "k_p", "quantity", "value"])
    best = run.table("min_kp", ["model", "N", "quantity", "value"])
    gaps = run.table("gaps", ["model", "N", "axis_value", "quantity", "value"])
    for f in exp.families:
        for n in f.sizes:
            fam = f.model.build(N=n)
            targets = f.targets.grid(fam.axes)
            lo, hi = f.targets.ranges[0]
            cfg = f.method.config()
            with run.stage(f"{f.model.name}:{n}:exact"):
                specs = run.map(lambda t: _exact(fam, t, 2), targets.points)
            exact = np.array([s.ground_energy for s in specs])
            for t, s in zip(targets.points, specs):
                gaps.add(f.model.name, n, t[0], "gap", s.eigenvalues[1] - s.eigenvalues[0])
            found = None
            for k in range(1, n + f.max_kp_offset + 1):
                train = make_sweep((lo, hi), k, fam.axes[0])
                with run.stage(f"{f.model.name}:{n}:k{k}"):
                    basis = build_basis(fam, train, cfg, mapper=run.map)
                    try:
                        ec = ec_sweep(basis, fam, targets, exact_energies=exact)
                        rel = rel_rms_error([p.energy for p in ec], exact)
                    except ConditioningError:
                        rel = float("nan")
                heat.add(f.model.name, n, k, "rel_rms", rel)
                if found is None and rel < exp.tolerance:
                    found = k
            best.add(f.model.name, n, "min_k_p", found if found is not None else -1)


def run_noise(exp: NoiseExperiment, run: Run):
    fam = exp.model.build()
    targets = exp.targets.grid(fam.axes)
    ns = exp.noise
    axes = list(fam.axes)
    with run.stage("exact"):
        exact = np.array([s.ground_energy for s in run.map(lambda t: _exact(fam, t), targets.points)])
    noise = NoiseConfig(0.0, ns.n_trajectories, exp.seed, ns.bootstrap_resamples, ns.mechanism)
    confusion = ConfusionModel(*ns.confusion) if ns.confusion is not None else None
    with run.stage("study"):
        rows = noise_study(fam, targets, ns.sigmas, noise, ns.full.config(), ns.truncated.config(), ns.k_ps,
                           [tuple(r) for r in ns.alpha_schedule], exact_energies=exact, confusion=confusion)
    summary = run.table("summary", ["sigma", "method", "quantity", "value"])
    energies = run.table("energies", ["sigma", "method", *axes, "quantity", "value"])
    for t, e in zip(targets.points, exact):
        energies.add(0.0, "exact", *t, "energy", e)
    for r in rows:
        summary.add(r.sigma, r.method, "rms", r.rms)
        if r.method.startswith("ec"):
            summary.add(r.sigma, r.method, "condition_number", r.condition_number)
            summary.add(r.sigma, r.method, "retained_condition_number", r.retained_condition_number)
            summary.add(r.sigma, r.method, "max_standard_error", r.max_standard_error)
            if r.alpha is not None:
                summary.add(r.sigma, r.method, "alpha", r.alpha)
        for t, e in zip(targets.points, r.energies):
            energies.add(r.sigma, r.method, *t, "energy", e)


def run_gap(exp: GapExperiment, run: Run):
    spec_tab = run.table("spectrum", ["variant", "axis_value", "level", "energy"])
    gap_tab = run.table("gap", ["variant", "axis_value", "gap"])
    for v in exp.variants:
        fam = exp.model.build(**v)
        grid = exp.sweep.grid(fam.axes)
        label = ";".join(f"{k}={fmt(x)}" for k, x in sorted(v.items()))
        with run.stage(label):
            specs = run.map(lambda t: fam.spectrum(t, k=None if fam.nsites <= 10 else exp.levels), grid.points)
        for t, s in zip(grid.points, specs):
            tag = ";".join(fmt(x) for x in t)
            for lvl, e in enumerate(s.eigenvalues[:exp.levels]):
                spec_tab.add(label, tag, lvl, e)
            gap_tab.add(label, tag, s.eigenvalues[1] - s.eigenvalues[0])


def run_ite_overlaps(exp: ITEOverlapExperiment, run: Run):
    fam = exp.model.build()
    spec = fam.spectrum(exp.theta)
    tab = run.table("overlaps", ["initial", "step", "level", "energy", "overlap"])
    for init in exp.initial_states:
        if init == "eigen_uniform":
            psi0 = normalize(spec.eigenvectors.sum(axis=1))
        elif init == "computational_uniform":
            psi0 = uniform_state(fam.nsites)
        else:
            psi0 = exp.method.config().initial_state(fam.nsites, exp.method.haar_seed)
        with run.stage(init):
            evo = run_ite(fam.instantiate(exp.theta), exp.method.config(), keep_states=True, initial=psi0)
        table = track_eigenstate_overlaps(evo.states, spec)
        for step, row in enumerate(table):
            for lvl, v in enumerate(row):
                tab.add(init, step, lvl, spec.eigenvalues[lvl], v)


def run_asp_fidelity(exp: ASPFidelityExperiment, run: Run):
    fam = exp.model.build()
    axes = list(fam.axes)
    tab = run.table("ramp", ["T_max", "step", *axes, "quantity", "value"])
    for T in exp.T_max:
        cfg = exp.method.config(T)
        path = cfg.path()
        with run.stage(f"T={T}"):
            evo = run_asp(fam, cfg, keep_states=True)
            specs = run.map(lambda t: _exact(fam, t), path)
        for step, (theta, psi, s) in enumerate(zip(path, evo.states[1:], specs), start=1):
            tab.add(T, step, *theta, "energy", expectation(psi, fam.instantiate(theta)))
            tab.add(T, step, *theta, "exact_energy", s.ground_energy)
            tab.add(T, step, *theta, "fidelity", fidelity(psi, s.ground_state))


def run_basis_overlap(exp: BasisOverlapExperiment, run: Run):
    fam = exp.model.build()
    spec = fam.spectrum(exp.theta)
    train = exp.training.grid(fam.axes)
    cfg = exp.method.config()
    F_tab = run.table("overlaps", ["basis", "sigma", "level", "energy", "F"])
    summary = run.table("summary", ["basis", "sigma", "quantity", "value"])
    kb = krylov_basis(fam.instantiate(exp.theta), uniform_state(fam.nsites), exp.k_p)
    bases = [("krylov", 0.0, basis_eigenstate_overlap(kb, spec))]
    for s in exp.sigmas:
        with run.stage(f"asp:{s}"):
            noise = NoiseConfig(s, exp.n_trajectories, exp.seed, mechanism=exp.mechanism)
            ens = np.stack([noisy_asp_ensemble(fam, cfg, noise, target=t, point=i)[0]
                            for i, t in enumerate(train.points)], axis=1)  # (traj, k_p, dim)
            # F is linear in each |phi><phi|, so averaging F over trajectories averages the basis projector
            F = np.mean([basis_eigenstate_overlap(v, spec) for v in ens], axis=0)
        bases.append(("truncated_asp", s, F))
    for name, s, F in bases:
        for lvl, v in enumerate(F):
            F_tab.add(name, s, lvl, spec.eigenvalues[lvl], v)
        summary.add(name, s, "sum_F", F.sum())
        summary.add(name, s, "low_energy_weight", low_energy_weight(F, exp.low_fraction))


RUNNERS = {
    ECExperiment: run_ec,
    ScalingExperiment: run_scaling,
    NoiseExperiment: run_noise,
    GapExperiment: run_gap,
    ITEOverlapExperiment: run_ite_overlaps,
    ASPFidelityExperiment: run_asp_fidelity,
    BasisOverlapExperiment: run_basis_overlap,
}


def run_experiment(exp, out_dir, workers: int = 1) -> Path:
    """Run ``exp`` and write its tables under ``out_dir/<name>``.  Returns that directory."""
    run = Run(workers)
    t0 = time.perf_counter()
    RUNNERS[type(exp)](exp, run)
    total = time.perf_counter() - t0
    directory = Path(out_dir) / exp.name
    directory.mkdir(parents=True, exist_ok=True)
    for tab in run.tables.values():
        tab.write(directory)
    meta = {
        "name": exp.name,
        "figure": exp.figure,
        "kind": exp.kind,
        "seed": exp.seed,
        "library": "ecprep",
        "version": __version__,
        "config": exp.model_dump(mode="json"),
        "tables": {t.name: {"columns": t.columns, "rows": len(t.rows)} for t in run.tables.values()},
    }
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(directory / "timing.json", "w") as fh:
        json.dump({"total_seconds": total, "stages": run.timing, "workers": workers}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return directory


# --------------------------------------------------------------------------
# command line


def list_experiments() -> list[tuple[str, str, str]]:
    out = []
    for name, path in bundled_configs().items():
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        out.append((name, data.get("figure", ""), data.get("description", "")))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecprep", description="Run eigenvector-continuation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="show bundled configs and the figure each one reproduces")
    v = sub.add_parser("validate", help="check a config without computing anything")
    v.add_argument("config")
    r = sub.add_parser("run", help="run a config and write its tables")
    r.add_argument("config")
    r.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
    r.add_argument("--workers", type=int, default=1, help="threads for independent points")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, figure, desc in list_experiments():
                print(f"{name:<22} {figure:<12} {desc}")
            return EXIT_OK
        exp = load_config(args.config, getattr(args, "seed", None))
        if args.command == "validate":
            print(f"{exp.name}: ok ({exp.kind}, {exp.figure})")
            return EXIT_OK
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        out = args.out or os.environ.get(ENV_OUT) or DEFAULT_OUT
        directory = run_experiment(exp, out, args.workers)
        print(f"{exp.name}: wrote {directory}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConditioningError, PreparationError, VariationalBoundError, FloatingPointError,
            np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
