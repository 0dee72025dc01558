"""Seeded experiment drivers: rise/decay sweep, constrained timing,
noise robustness and geometry-perturbation Monte Carlo.

Every driver returns an :class:`ExperimentReport`.  Per-trial seeds are
derived from ``(master seed, trial index)`` and per-channel noise seeds from
``(trial seed, channel index)``, so reruns with the same config are
bit-identical apart from the ``timing`` block.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .analysis import (
    SUBSYSTEMS,
    BlochTrajectory,
    FidelityReport,
    average_gate_fidelity,
    bloch_trajectory,
    conditional_phase,
    predicted_phases,
    rotation_axis,
    solid_angle,
    winding_number,
    wrap_angle,
)
from .cphase import (
    ConfigurationError,
    GateParams,
    build_cphase_timeline,
    build_step2_timeline,
    gate_report,
    select_gate_params,
    time_unit_ps,
)
from .model import QUBIT_INDICES, DeviceModel, Geometry3D, ideal_device
from .propagate import project_qubit_subspace, propagate_timeline
from .schedule import ControlTimeline, NoiseSpec

log = logging.getLogger(__name__)

KINDS = ("ideal", "sweep-rise", "constrained", "noise", "geometry", "bloch", "timeline")

#: Reporting convention: one dimensionless time unit is taken as 1 ps
PS_PER_UNIT = 1.0

_SLOW = (0.25, 2 * math.pi, 1.0)
_FAST = (1.0, math.pi / 2, 0.0)

#: (swap_rate, tau4, tau_s) used when a config leaves them unset.  Slow local
#: steps keep rise/decay times up to 1.5 below half of every pulse length;
#: ideal and geometry runs use short square steps.
GATE_DEFAULTS = {
    "ideal": _FAST,
    "sweep-rise": _SLOW,
    "constrained": _SLOW,
    "noise": _SLOW,
    "geometry": _FAST,
    "bloch": _FAST,
    "timeline": _SLOW,
}

AXES = ("x", "y", "z")


@dataclass
class ExperimentConfig:
    """All knobs of the experiment drivers.

    ``swap_rate``, ``tau4`` and ``tau_s`` default per kind (see
    ``GATE_DEFAULTS``).  ``unit_axis`` is the lattice axis along which the
    two units are separated in the geometry Monte Carlo.
    """

    kind: str = "ideal"
    n: int = 1
    k: int = 1
    swap_rate: float | None = None
    tau4: float | None = None
    tau_s: float | None = None
    corrected: bool = True
    dt: float = 0.005
    seed: int = 0
    trials: int = 10
    taus: list[float] = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0, 1.25, 1.5])
    eta0s: list[float] = field(default_factory=lambda: [0.0, 0.02, 0.05, 0.1, 0.2])
    omega0s: list[float] = field(default_factory=lambda: [50.0])
    geometries: list[list[float]] = field(default_factory=lambda: [[20.0, 100.0, 10.0]])
    eps_r: float = 11.8
    lattice_nm: float = 0.3
    unit_axis: str = "z"
    tau_min_ps: float | None = None
    mu_max_radps: float | None = None
    gamma_eff_mev: float = 0.718
    out: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")
        for name, value in zip(("swap_rate", "tau4", "tau_s"), GATE_DEFAULTS[self.kind]):
            if getattr(self, name) is None:
                setattr(self, name, value)
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")
        if self.unit_axis not in AXES:
            raise ConfigurationError(f"unit_axis must be one of {AXES}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not (self.swap_rate > 0 and self.tau4 > 0 and self.tau_s >= 0):
            raise ConfigurationError("need swap_rate > 0, tau4 > 0 and tau_s >= 0")
        if any(ts < 0 for ts in self.taus):
            raise ConfigurationError("rise/decay times must be non-negative")
        grids = {"sweep-rise": "taus", "noise": "eta0s", "geometry": "geometries"}
        if self.kind in grids and not getattr(self, grids[self.kind]):
            raise ConfigurationError(f"{grids[self.kind]} must be non-empty")
        if self.kind == "noise" and not self.omega0s:
            raise ConfigurationError("omega0s must be non-empty")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def gate_params(self, tau_s: float | None = None, corrected: bool | None = None) -> GateParams:
        return GateParams(
            self.n,
            self.k,
            self.swap_rate,
            self.tau4,
            self.tau_s if tau_s is None else tau_s,
            self.corrected if corrected is None else corrected,
        )


def summarize(values: Sequence[float]) -> dict[str, float]:
    """mean/min/max/std (sample)/standard error over the finite entries."""
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=float)
    if v.size == 0:
        return {"count": 0, "mean": math.nan, "min": math.nan, "max": math.nan, "std": math.nan, "se": math.nan}
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return {
        "count": int(v.size),
        "mean": float(np.mean(v)),
        "min": float(np.min(v)),
        "max": float(np.max(v)),
        "std": std,
        "se": std / math.sqrt(v.size),
    }


@dataclass
class ExperimentReport:
    kind: str
    config: dict[str, Any]
    records: list[dict[str, Any]]
    aggregates: list[dict[str, Any]] = field(default_factory=list)
    timing: dict[str, Any] = field(default_factory=dict)

    def canonical(self) -> dict[str, Any]:
        """Everything except wall-clock timing; equal for identical reruns."""
        return {"kind": self.kind, "config": self.config, "records": self.records, "aggregates": self.aggregates}

    def to_json(self, path) -> None:
        payload = dict(self.canonical(), timing=self.timing)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, default=_json_default)
            fh.write("\n")

    def to_csv(self, path, columns: Sequence[str]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for rec in self.records:
                w.writerow([_fmt(rec.get(c)) for c in columns])


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trial_seed(master: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, trial]).generate_state(1)[0])


def simulate_gate(
    tl: ControlTimeline, dev: DeviceModel | None = None, dt: float = 0.005
) -> tuple[FidelityReport, np.ndarray]:
    dev = ideal_device() if dev is None else dev
    u = propagate_timeline(tl, dev, dt).unitary
    return average_gate_fidelity(u), u


def basis_population_deviation(u: np.ndarray) -> float:
    """Max change of final-state populations relative to the ideal diagonal gate."""
    cols = np.abs(np.asarray(u)[:, list(QUBIT_INDICES)]) ** 2
    ideal = np.zeros_like(cols)
    ideal[list(QUBIT_INDICES), range(4)] = 1.0
    return float(np.max(np.abs(cols - ideal)))


# --- drivers ----------------------------------------------------------------


def run_ideal(cfg: ExperimentConfig) -> ExperimentReport:
    """Piecewise-constant gate with no rise time."""
    p = cfg.gate_params(tau_s=0.0, corrected=False)
    start = time.perf_counter()
    tl = build_cphase_timeline(p)
    rep, u = simulate_gate(tl, dt=cfg.dt)
    proj = project_qubit_subspace(u)
    diag = np.diag(proj)
    rel = np.angle(diag / diag[0])
    rec = {
        "n": p.n,
        "k": p.k,
        "F": rep.fidelity,
        "E": rep.error,
        "leakage": rep.leakage,
        "phase_11": float(rel[0]),
        "phase_12": float(rel[1]),
        "phase_21": float(rel[2]),
        "phase_22": float(rel[3]),
    }
    return ExperimentReport("ideal", cfg.to_dict(), [rec], timing={"wall_time": time.perf_counter() - start})


def run_rise_decay_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Uncorrected and corrected gate error for each rise/decay time."""
    records, timing = [], {}
    dev = ideal_device()
    for ts in cfg.taus:
        start = time.perf_counter()
        rec: dict[str, Any] = {"tau_s": float(ts)}
        try:
            for tag, corr in (("u", False), ("c", True)):
                tl = build_cphase_timeline(cfg.gate_params(tau_s=ts, corrected=corr))
                rep, _ = simulate_gate(tl, dev, cfg.dt)
                rec[f"E_{tag}"] = rep.error
                rec[f"leakage_{tag}"] = rep.leakage
        except ConfigurationError as exc:
            log.warning("tau_s=%s skipped: %s", ts, exc)
            rec.update(E_u=math.nan, E_c=math.nan, error=str(exc))
        records.append(rec)
        timing[f"tau_s={ts}"] = time.perf_counter() - start
    aggregates = [
        {"quantity": q, **summarize([r.get(q) for r in records])} for q in ("E_u", "E_c")
    ]
    return ExperimentReport("sweep-rise", cfg.to_dict(), records, aggregates, timing)


def run_constrained_scenarios(
    tau_min_ps: float | None,
    mu_max_radps: float | None,
    gamma_eff_mev: float = 0.718,
    tau_s: float = 0.5,
    dt: float = 0.005,
) -> ExperimentReport:
    """Pick ``(n, k)`` for physical constraints, simulate the corrected gate and report timing.

    Constraints are converted with 1 time unit = 1 ps and rates in units of
    1e12 rad/s; the exact ``hbar / gamma_eff`` conversion is reported alongside.
    """
    if not gamma_eff_mev > 0:
        raise ConfigurationError("gamma_eff_mev must be positive")
    tau_min = None if tau_min_ps is None else tau_min_ps / PS_PER_UNIT
    mu_max = None if mu_max_radps is None else mu_max_radps * PS_PER_UNIT * 1e-12
    p = select_gate_params(tau_min, mu_max, tau_s=tau_s, corrected=True)
    start = time.perf_counter()
    tl = build_cphase_timeline(p)
    rep, _ = simulate_gate(tl, ideal_device(), dt)
    info = gate_report(p, gamma_eff_mev, tl)
    rec = {
        "tau_min_ps": tau_min_ps,
        "mu_max_radps": mu_max_radps,
        "n": p.n,
        "k": p.k,
        "mu23_1": p.mu23_1,
        "mu23_1_radps": info["mu23_1_radps"],
        "mu23_1_radps_exact": info["mu23_1_radps_exact"],
        "tau2": p.tau2,
        "gate_time_ps": p.nominal_duration * PS_PER_UNIT,
        "gate_time_ps_exact": p.nominal_duration * time_unit_ps(gamma_eff_mev),
        "step2_time_ps": p.tau2 * PS_PER_UNIT,
        "timeline_duration_ps": tl.total_duration * PS_PER_UNIT,
        "tau_s": tau_s,
        "F": rep.fidelity,
        "E": rep.error,
        "leakage": rep.leakage,
    }
    cfg = {
        "kind": "constrained",
        "tau_min_ps": tau_min_ps,
        "mu_max_radps": mu_max_radps,
        "gamma_eff_mev": gamma_eff_mev,
        "tau_s": tau_s,
        "dt": dt,
    }
    return ExperimentReport("constrained", cfg, [rec], timing={"wall_time": time.perf_counter() - start})


def run_noise_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Gate error under multiplicative 1/f control noise, ``trials`` seeds per grid point.

    The same trial seeds are reused across the ``(eta0, omega0)`` grid, so
    each curve compares identical noise shapes at different strengths.
    """
    p = cfg.gate_params()
    base = build_cphase_timeline(p)
    dev = ideal_device()
    records, timing = [], {}
    for omega0 in cfg.omega0s:
        for eta0 in cfg.eta0s:
            start = time.perf_counter()
            for trial in range(cfg.trials):
                seed = trial_seed(cfg.seed, trial)
                tl = base.with_noise(NoiseSpec(eta0, omega0, seed), cfg.dt)
                rep, u = simulate_gate(tl, dev, cfg.dt)
                records.append(
                    {
                        "eta0": float(eta0),
                        "omega0": float(omega0),
                        "trial": trial,
                        "seed": seed,
                        "E": rep.error,
                        "leakage": rep.leakage,
                        "population_deviation": basis_population_deviation(u),
                    }
                )
            timing[f"eta0={eta0},omega0={omega0}"] = time.perf_counter() - start
    aggregates = []
    for omega0 in cfg.omega0s:
        for eta0 in cfg.eta0s:
            group = [r for r in records if r["eta0"] == eta0 and r["omega0"] == omega0]
            stats = summarize([r["E"] for r in group])
            aggregates.append(
                {
                    "eta0": float(eta0),
                    "omega0": float(omega0),
                    **{f"{k}_E": v for k, v in stats.items()},
                    "max_population_deviation": max(r["population_deviation"] for r in group),
                }
            )
    return ExperimentReport("noise", cfg.to_dict(), records, aggregates, timing)


def run_bloch(cfg: ExperimentConfig) -> tuple[ExperimentReport, dict[str, BlochTrajectory]]:
    """Step-2 Bloch loops of both subsystems with solid angles and conditional phases."""
    p = cfg.gate_params(tau_s=0.0, corrected=False)
    start = time.perf_counter()
    tl = build_step2_timeline(p)
    inputs = tuple(SUBSYSTEMS[s][0] for s in SUBSYSTEMS)
    result = propagate_timeline(tl, ideal_device(), cfg.dt, inputs)
    ph1, ph2, om1, om2 = predicted_phases(p.n, p.k)
    expected = {"S1": (ph1, om1), "S2": (ph2, om2)}
    records, trajectories = [], {}
    for name in SUBSYSTEMS:
        traj = bloch_trajectory(result, name)
        trajectories[name] = traj
        omega = solid_angle(traj)
        phase = conditional_phase(result.unitary, SUBSYSTEMS[name][0])
        records.append(
            {
                "subsystem": name,
                "n": p.n,
                "k": p.k,
                "solid_angle": omega,
                "solid_angle_predicted": expected[name][1],
                "phase": phase,
                "phase_predicted": expected[name][0] % (2 * math.pi),
                "phase_minus_half_angle": float(wrap_angle(phase - omega / 2)),
                "windings": winding_number(traj, rotation_axis(name, p.mu23_1)),
            }
        )
    diff = float(wrap_angle(records[1]["phase"] - records[0]["phase"]))
    aggregates = [{"branch_phase_difference": diff}]
    report = ExperimentReport("bloch", cfg.to_dict(), records, aggregates, {"wall_time": time.perf_counter() - start})
    return report, trajectories


def perturb_positions(positions: np.ndarray, rng: np.random.Generator, lattice: float = 0.3,
                      max_sites: int = 4, max_layers: int = 1) -> np.ndarray:
    """Random lattice displacement of every dot: up to ``max_sites`` in x/y, ``max_layers`` in z."""
    steps = np.empty(positions.shape)
    steps[..., :2] = rng.integers(-max_sites, max_sites + 1, size=positions.shape[:-1] + (2,))
    steps[..., 2] = rng.integers(-max_layers, max_layers + 1, size=positions.shape[:-1])
    return positions + lattice * steps


def orient_positions(positions: np.ndarray, unit_axis: str = "x") -> np.ndarray:
    """Rotate design coordinates so the unit-to-unit axis (x) lies along ``unit_axis``.

    A cyclic permutation of the axes, hence a proper rotation; it only matters
    because the lattice displacements are anisotropic.
    """
    shift = AXES.index(unit_axis)
    return np.roll(np.asarray(positions), shift, axis=-1)


def min_separation(positions: np.ndarray) -> float:
    pts = np.asarray(positions).reshape(-1, 3)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    return float(np.min(d[np.triu_indices(len(pts), 1)]))


def run_geometry_perturbation(cfg: ExperimentConfig) -> ExperimentReport:
    """Average gate fidelity of randomly perturbed symmetric 3D devices.

    Perturbed devices keep the design bias offsets and design ``gamma_eff``;
    only the Coulomb matrix follows the displaced dots.
    """
    tl = build_cphase_timeline(cfg.gate_params())
    records, aggregates, timing = [], [], {}
    for a, b, c in cfg.geometries:
        start = time.perf_counter()
        try:
            design = DeviceModel.symmetric_3d(Geometry3D(a, b, c), cfg.eps_r)
            design = design.with_positions(orient_positions(design.positions, cfg.unit_axis))
        except ValueError as exc:
            aggregates.append({"a": a, "b": b, "c": c, "error": str(exc)})
            continue
        baseline, _ = simulate_gate(tl, design, cfg.dt)
        group = []
        for trial in range(cfg.trials):
            seed = trial_seed(cfg.seed, trial)
            rng = np.random.default_rng(seed)
            rejected = 0
            while True:
                pos = perturb_positions(design.positions, rng, cfg.lattice_nm)
                if min_separation(pos) >= cfg.lattice_nm:
                    break
                rejected += 1
            rep, _ = simulate_gate(tl, design.with_positions(pos), cfg.dt)
            rec = {
                "a": float(a),
                "b": float(b),
                "c": float(c),
                "trial": trial,
                "seed": seed,
                "F": rep.fidelity,
                "leakage": rep.leakage,
                "rejected": rejected,
            }
            records.append(rec)
            group.append(rec)
        stats = summarize([r["F"] for r in group])
        aggregates.append(
            {
                "a": float(a),
                "b": float(b),
                "c": float(c),
                "gamma_eff_mev": float(design.gamma_eff),
                "baseline_F": baseline.fidelity,
                **{f"{k}_F": v for k, v in stats.items()},
                "rejected": sum(r["rejected"] for r in group),
            }
        )
        timing[f"a={a},b={b},c={c}"] = time.perf_counter() - start
    return ExperimentReport("geometry", cfg.to_dict(), records, aggregates, timing)


CSV_COLUMNS = {
    "sweep-rise": ("tau_s", "E_u", "E_c"),
    "noise": ("eta0", "omega0", "trial", "seed", "E"),
    "geometry": ("a", "b", "c", "trial", "seed", "F", "leakage"),
}


__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ExperimentReport",
    "GATE_DEFAULTS",
    "basis_population_deviation",
    "min_separation",
    "orient_positions",
    "perturb_positions",
    "run_bloch",
    "run_constrained_scenarios",
    "run_geometry_perturbation",
    "run_ideal",
    "run_noise_sweep",
    "run_rise_decay_sweep",
    "simulate_gate",
    "summarize",
    "trial_seed",
]
