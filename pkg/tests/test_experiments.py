import csv
import json
import math

import numpy as np
import pytest

from chargegate.cphase import ConfigurationError, GateParams, build_cphase_timeline
from chargegate.experiments import (
    CSV_COLUMNS,
    GATE_DEFAULTS,
    ExperimentConfig,
    basis_population_deviation,
    min_separation,
    orient_positions,
    perturb_positions,
    run_bloch,
    run_constrained_scenarios,
    run_geometry_perturbation,
    run_ideal,
    run_noise_sweep,
    run_rise_decay_sweep,
    simulate_gate,
    summarize,
    trial_seed,
)
from chargegate.model import Geometry3D, dot_positions


class TestConfig:
    def test_per_kind_defaults(self):
        for kind, (rate, tau4, ts) in GATE_DEFAULTS.items():
            cfg = ExperimentConfig(kind=kind)
            assert (cfg.swap_rate, cfg.tau4, cfg.tau_s) == (rate, tau4, ts)

    def test_explicit_values_win(self):
        cfg = ExperimentConfig(kind="geometry", tau_s=0.3)
        assert cfg.tau_s == 0.3 and cfg.swap_rate == GATE_DEFAULTS["geometry"][0]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "nope"},
            {"trials": 0},
            {"dt": 0},
            {"kind": "noise", "eta0s": []},
            {"kind": "geometry", "geometries": []},
            {"unit_axis": "w"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**kwargs)

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict({"kind": "ideal", "bogus": 1})

    def test_json_roundtrip(self, tmp_path):
        cfg = ExperimentConfig(kind="noise", eta0s=[0.1], trials=2)
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.from_json(path) == cfg


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, math.nan])
    assert s["count"] == 3 and s["mean"] == 2.0 and s["min"] == 1.0 and s["max"] == 3.0
    assert s["std"] == pytest.approx(1.0) and s["se"] == pytest.approx(1 / math.sqrt(3))
    assert summarize([])["count"] == 0


def test_trial_seed():
    assert trial_seed(0, 1) == trial_seed(0, 1)
    assert len({trial_seed(0, t) for t in range(100)}) == 100
    assert trial_seed(0, 1) != trial_seed(1, 1)


def test_population_deviation():
    assert basis_population_deviation(np.eye(9)) == 0.0
    u = np.eye(9)
    u[[0, 2]] = u[[2, 0]]
    assert basis_population_deviation(u) == 1.0


class TestIdeal:
    def test_fidelity_and_phases(self):
        rec = run_ideal(ExperimentConfig()).records[0]
        assert rec["F"] >= 1 - 1e-9
        assert rec["leakage"] < 1e-9
        assert [rec[f"phase_{s}"] for s in ("12", "21")] == pytest.approx([0, 0], abs=1e-9)
        assert abs(abs(rec["phase_22"]) - math.pi) < 1e-9


class TestRiseSweep:
    def test_records_and_csv(self, tmp_path):
        rep = run_rise_decay_sweep(ExperimentConfig(kind="sweep-rise", taus=[0.25, 1.0]))
        assert [r["tau_s"] for r in rep.records] == [0.25, 1.0]
        assert rep.records[0]["E_u"] < rep.records[1]["E_u"]
        assert all(r["E_c"] <= 1e-4 for r in rep.records)
        path = tmp_path / "rise.csv"
        rep.to_csv(path, CSV_COLUMNS["sweep-rise"])
        rows = list(csv.reader(open(path, encoding="utf-8")))
        assert rows[0] == ["tau_s", "E_u", "E_c"]
        assert float(rows[2][1]) == rep.records[1]["E_u"]

    def test_infeasible_rise_recorded(self):
        rep = run_rise_decay_sweep(ExperimentConfig(kind="sweep-rise", taus=[0.5, 4.0]))
        bad = rep.records[1]
        assert "error" in bad and math.isnan(bad["E_u"])
        assert rep.aggregates[0]["count"] == 1


class TestConstrained:
    def test_unconstrained_is_fast(self):
        rec = run_constrained_scenarios(None, None).records[0]
        assert (rec["n"], rec["k"]) == (1, 1)
        assert rec["gate_time_ps"] < 20
        # with near-instant local steps only step 2 remains
        assert GateParams(mu23_2=8.0, tau4=0.1).nominal_duration < 7

    def test_scenarios(self):
        r1 = run_constrained_scenarios(50, None).records[0]
        r2 = run_constrained_scenarios(50, 1e11).records[0]
        assert (r1["n"], r1["k"], r2["n"], r2["k"]) == (5, 5, 7, 7)
        assert r1["gate_time_ps"] == pytest.approx(206.55, abs=0.5)
        assert r2["gate_time_ps"] == pytest.approx(231.68, abs=0.5)
        assert r1["gate_time_ps_exact"] < r1["gate_time_ps"]
        assert r2["mu23_1_radps"] <= 1e11
        assert min(r1["F"], r2["F"]) >= 0.999

    def test_bad_gamma(self):
        with pytest.raises(ConfigurationError):
            run_constrained_scenarios(None, None, gamma_eff_mev=0)


class TestNoise:
    def test_zero_noise_matches_noiseless(self):
        cfg = ExperimentConfig(kind="noise", eta0s=[0.0], trials=2)
        rep = run_noise_sweep(cfg)
        clean, _ = simulate_gate(build_cphase_timeline(cfg.gate_params()))
        assert all(r["E"] == pytest.approx(clean.error, abs=1e-12) for r in rep.records)
        assert clean.error < 1e-4

    def test_aggregates_match_records(self):
        rep = run_noise_sweep(ExperimentConfig(kind="noise", eta0s=[0.05, 0.1], trials=3, seed=5))
        for agg in rep.aggregates:
            es = [r["E"] for r in rep.records if r["eta0"] == agg["eta0"]]
            assert agg["mean_E"] == float(np.mean(es))
            assert agg["max_E"] == max(es) and agg["min_E"] == min(es)
        # identical noise shapes across amplitudes
        seeds = {(r["trial"], r["seed"]) for r in rep.records}
        assert len(seeds) == 3


class TestGeometry:
    def test_perturbation_lattice(self, rng):
        pos = dot_positions(Geometry3D(20, 100, 10))
        steps = (perturb_positions(pos, rng, 0.3) - pos) / 0.3
        assert np.allclose(steps, np.round(steps))
        steps = np.round(steps)
        assert np.max(np.abs(steps[..., :2])) <= 4 and np.max(np.abs(steps[..., 2])) <= 1

    def test_orientation_is_rotation(self):
        pos = dot_positions(Geometry3D(20, 100, 10))
        for axis in ("x", "y", "z"):
            rot = orient_positions(pos, axis)
            d0 = np.linalg.norm(pos.reshape(-1, 1, 3) - pos.reshape(1, -1, 3), axis=-1)
            d1 = np.linalg.norm(rot.reshape(-1, 1, 3) - rot.reshape(1, -1, 3), axis=-1)
            assert np.allclose(d0, d1)
        assert np.allclose(orient_positions(pos, "z")[1, 2], [0, 0, 20])
        assert np.array_equal(orient_positions(pos, "x"), pos)

    def test_min_separation(self):
        pos = dot_positions(Geometry3D(20, 100, 10))
        assert min_separation(pos) == pytest.approx(20.0)

    def test_zero_perturbation_baseline(self):
        cfg = ExperimentConfig(kind="geometry", trials=2, lattice_nm=0.0)
        rep = run_geometry_perturbation(cfg)
        assert rep.aggregates[0]["baseline_F"] >= 0.99995
        assert all(r["F"] == rep.aggregates[0]["baseline_F"] for r in rep.records)

    def test_invalid_geometry_reported(self):
        rep = run_geometry_perturbation(ExperimentConfig(kind="geometry", trials=1, geometries=[[0, 10, 1]]))
        assert "error" in rep.aggregates[0] and rep.records == []

    def test_csv_and_json(self, tmp_path):
        rep = run_geometry_perturbation(ExperimentConfig(kind="geometry", trials=2, seed=3))
        rep.to_csv(tmp_path / "g.csv", CSV_COLUMNS["geometry"])
        rows = list(csv.reader(open(tmp_path / "g.csv", encoding="utf-8")))
        assert rows[0] == ["a", "b", "c", "trial", "seed", "F", "leakage"]
        assert len(rows) == 3
        rep.to_json(tmp_path / "g.json")
        data = json.load(open(tmp_path / "g.json", encoding="utf-8"))
        assert data["config"]["seed"] == 3 and len(data["records"]) == 2


class TestDeterminism:
    @pytest.mark.parametrize(
        "run, cfg",
        [
            (run_ideal, ExperimentConfig()),
            (run_rise_decay_sweep, ExperimentConfig(kind="sweep-rise", taus=[0.5])),
            (run_noise_sweep, ExperimentConfig(kind="noise", eta0s=[0.1], trials=2, seed=11)),
            (run_geometry_perturbation, ExperimentConfig(kind="geometry", trials=3, seed=11)),
        ],
    )
    def test_bit_identical(self, run, cfg):
        assert run(cfg).canonical() == run(cfg).canonical()

    def test_constrained_and_bloch(self):
        assert run_constrained_scenarios(50, None).canonical() == run_constrained_scenarios(50, None).canonical()
        cfg = ExperimentConfig(kind="bloch")
        assert run_bloch(cfg)[0].canonical() == run_bloch(cfg)[0].canonical()

    def test_seed_changes_geometry(self):
        a = run_geometry_perturbation(ExperimentConfig(kind="geometry", trials=2, seed=1))
        b = run_geometry_perturbation(ExperimentConfig(kind="geometry", trials=2, seed=2))
        assert a.records != b.records


def test_bloch_report():
    rep, traj = run_bloch(ExperimentConfig(kind="bloch"))
    s1, s2 = rep.records
    assert s1["solid_angle"] == pytest.approx(math.pi, abs=1e-2)
    assert s2["solid_angle"] == pytest.approx(3 * math.pi, abs=1e-2)
    assert abs(rep.aggregates[0]["branch_phase_difference"]) == pytest.approx(math.pi, abs=1e-3)
    assert set(traj) == {"S1", "S2"}
