"""Command-line entry point.

Every subcommand builds an :class:`ExperimentConfig` from an optional JSON
config file plus flags (flags win), runs one driver, prints a short summary
and, with ``--out DIR``, writes ``<kind>.json`` and a CSV where applicable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .cphase import ConfigurationError, build_cphase_timeline
from .experiments import (
    CSV_COLUMNS,
    KINDS,
    ExperimentConfig,
    ExperimentReport,
    run_bloch,
    run_constrained_scenarios,
    run_geometry_perturbation,
    run_ideal,
    run_noise_sweep,
    run_rise_decay_sweep,
)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with config keys; flags override it")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--dt", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--swap-rate", type=float, help="tunnelling rate of the first/third steps")
    common.add_argument("--tau4", type=float, help="duration of the local phase step")
    common.add_argument("--tau-s", type=float, help="rise/decay time")
    common.add_argument("--uncorrected", action="store_true", help="skip the phase correction")
    common.add_argument("--gamma-eff-mev", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="chargegate", description="Three-dot charge-qubit CPHASE simulator")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="{" + ",".join(KINDS) + "}")

    sub.add_parser("ideal", parents=[common], help="square-pulse gate, fidelity and phases")
    p = sub.add_parser("sweep-rise", parents=[common], help="gate error versus rise/decay time")
    p.add_argument("--taus", type=_floats, help="e.g. 0.25,0.5,1.0")
    p = sub.add_parser("constrained", parents=[common], help="gate parameters under physical limits")
    p.add_argument("--tau-min-ps", type=float)
    p.add_argument("--mu-max-radps", type=float)
    p = sub.add_parser("noise", parents=[common], help="1/f control-noise Monte Carlo")
    p.add_argument("--eta0", type=_floats, help="noise amplitudes, comma-separated")
    p.add_argument("--omega0", type=_floats, help="corner frequencies, comma-separated")
    p = sub.add_parser("geometry", parents=[common], help="dot-placement Monte Carlo")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--eps-r", type=float)
    p.add_argument("--unit-axis", choices=("x", "y", "z"))
    sub.add_parser("bloch", parents=[common], help="step-2 Bloch loops and solid angles")
    sub.add_parser("timeline", parents=[common], help="sampled control pulses")
    return parser


_FLAG_KEYS = {
    "dt": "dt",
    "seed": "seed",
    "trials": "trials",
    "n": "n",
    "k": "k",
    "swap_rate": "swap_rate",
    "tau4": "tau4",
    "tau_s": "tau_s",
    "gamma_eff_mev": "gamma_eff_mev",
    "taus": "taus",
    "eta0": "eta0s",
    "omega0": "omega0s",
    "tau_min_ps": "tau_min_ps",
    "mu_max_radps": "mu_max_radps",
    "eps_r": "eps_r",
    "unit_axis": "unit_axis",
}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict[str, Any] = {}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
    data["kind"] = args.kind
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    if args.uncorrected:
        data["corrected"] = False
    if any(getattr(args, x, None) is not None for x in ("a", "b", "c")):
        base = data.get("geometries", [[20.0, 100.0, 10.0]])[0]
        data["geometries"] = [[
            args.a if args.a is not None else base[0],
            args.b if args.b is not None else base[1],
            args.c if args.c is not None else base[2],
        ]]
    if args.out is not None:
        data["out"] = str(args.out)
    return ExperimentConfig.from_dict(data)


def _write(report: ExperimentReport, out: Path | None) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    report.to_json(out / f"{report.kind}.json")
    if report.kind in CSV_COLUMNS:
        report.to_csv(out / f"{report.kind}.csv", CSV_COLUMNS[report.kind])


def _g(x) -> str:
    return "nan" if x is None else f"{x:.6g}"


def run(cfg: ExperimentConfig, out: Path | None) -> None:
    kind = cfg.kind
    if kind == "ideal":
        rep = run_ideal(cfg)
        r = rep.records[0]
        print(f"F={r['F']:.6f} E={r['E']:.3e} leakage={r['leakage']:.3e}")
        print("phases: " + " ".join(f"{s}={r['phase_' + s]:+.6f}" for s in ("11", "12", "21", "22")))
    elif kind == "sweep-rise":
        rep = run_rise_decay_sweep(cfg)
        print("tau_s        E_u          E_c")
        for r in rep.records:
            print(f"{r['tau_s']:<12g} {_g(r.get('E_u')):<12} {_g(r.get('E_c'))}")
    elif kind == "constrained":
        rep = run_constrained_scenarios(cfg.tau_min_ps, cfg.mu_max_radps, cfg.gamma_eff_mev, cfg.tau_s, cfg.dt)
        r = rep.records[0]
        print(
            f"n={r['n']} k={r['k']} mu23_1={r['mu23_1_radps']:.4g} rad/s "
            f"gate_time={r['gate_time_ps']:.2f} ps (exact {r['gate_time_ps_exact']:.2f} ps) F={r['F']:.6f}"
        )
    elif kind == "noise":
        rep = run_noise_sweep(cfg)
        print("eta0     omega0   mean_E       se_E         max_pop_dev")
        for a in rep.aggregates:
            print(
                f"{a['eta0']:<8g} {a['omega0']:<8g} {a['mean_E']:<12.4e} {a['se_E']:<12.4e} "
                f"{a['max_population_deviation']:.3e}"
            )
    elif kind == "geometry":
        rep = run_geometry_perturbation(cfg)
        for a in rep.aggregates:
            if "error" in a:
                print(f"a={a['a']} b={a['b']} c={a['c']}: {a['error']}")
                continue
            print(
                f"a={a['a']:g} b={a['b']:g} c={a['c']:g}: mean F={a['mean_F']:.6f} "
                f"(std {a['std_F']:.2e}) min={a['min_F']:.6f} max={a['max_F']:.6f} "
                f"baseline={a['baseline_F']:.6f} trials={a['count_F']}"
            )
    elif kind == "bloch":
        rep, trajectories = run_bloch(cfg)
        for r in rep.records:
            print(
                f"{r['subsystem']}: solid_angle={r['solid_angle']:.6f} (predicted {r['solid_angle_predicted']:.6f}) "
                f"phase={r['phase']:.6f} windings={r['windings']:.3f}"
            )
        print(f"branch phase difference={rep.aggregates[0]['branch_phase_difference']:.6f}")
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            for name, traj in trajectories.items():
                traj.to_csv(out / f"bloch_{name}.csv")
    elif kind == "timeline":
        tl = build_cphase_timeline(cfg.gate_params())
        print(f"duration={tl.total_duration:.6f} pulses={len(tl.pulses)} dphi={tl.marks['dphi']:.6g}")
        for p in tl.pulses:
            print(f"  {p.channel.label:<9} t0={p.t0:<10.5g} tau={p.tau:<10.5g} A={p.A:.6g}")
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            tl.to_csv(out / "timeline.csv", cfg.dt)
            with open(out / "timeline.json", "w", encoding="utf-8") as fh:
                json.dump({"config": cfg.to_dict(), "marks": dict(tl.marks)}, fh, indent=2)
        return
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigurationError(f"unknown subcommand {kind!r}")
    _write(rep, out)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        run(cfg, args.out)
    except (ConfigurationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
