import json
from pathlib import Path

import numpy as np
import pytest

from vielab.cli import ConfigError, Scenario, config_hash, main, run_scenario, verify_suite
from vielab.presets import get_preset, preset_names


def write_config(tmp_path, cfg, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_report(out_dir):
    with open(Path(out_dir) / "report.json") as fh:
        return json.load(fh)


class TestConfigValidation:
    def test_negative_tolerance_exits_2_without_outputs(self, tmp_path):
        cfg = get_preset("disc-no-contrast-solve")
        cfg["solve"]["tol"] = -1.0
        out = tmp_path / "out"
        code = main(["solve", "--config", write_config(tmp_path, cfg),
                     "--out", str(out)])
        assert code == 2
        assert not (out / "report.json").exists()

    def test_unknown_registry_name_rejected(self, tmp_path):
        cfg = get_preset("disc-no-contrast-solve")
        cfg["coefficients"] = {"name": "nonsense"}
        assert main(["solve", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_task_mismatch_rejected(self, tmp_path):
        cfg = get_preset("disc-no-contrast-solve")
        assert main(["sweep", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["solve", "--config", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_scenario_rejects_bad_wave(self):
        cfg = get_preset("disc-no-contrast-solve")
        cfg["wave"]["k"] = [1.0, -2.0]  # decaying exterior wavenumber
        with pytest.raises(ConfigError):
            Scenario(cfg, "solve")


class TestSolveTask:
    def test_zero_contrast_field_equals_incident(self, tmp_path):
        cfg = get_preset("disc-no-contrast-solve")
        out = tmp_path / "out"
        assert run_scenario(cfg, "solve", str(out)) == 0
        report = read_report(out)
        assert report["status"] == "ok"
        assert report["results"]["gmres"]["iterations"] == 1
        data = np.loadtxt(out / "field.csv", delimiter=",", skiprows=2)
        x, re, im = data[:, 0], data[:, 2], data[:, 3]
        assert np.abs(re + 1j * im - np.exp(1j * x)).max() < 1e-9

    def test_divergent_solve_exits_3_with_incomplete_report(self, tmp_path):
        cfg = get_preset("disc-no-contrast-solve")
        cfg["coefficients"] = {"name": "constant-a", "a": -0.5}
        cfg["solve"]["maxiter"] = 15
        out = tmp_path / "out"
        assert run_scenario(cfg, "solve", str(out)) == 3
        report = read_report(out)
        assert report["status"] == "numerical-failure"
        assert report["incomplete"] is True


class TestSpectrumTask:
    def test_contrast_operator_clusters_at_zero(self, tmp_path):
        cfg = get_preset("beta-only-spectrum")
        cfg["spectrum"]["levels"] = [16, 24]
        out = tmp_path / "out"
        assert run_scenario(cfg, "spectrum", str(out)) == 0
        report = read_report(out)
        centers = report["results"]["clusters"]
        assert len(centers) == 1
        assert abs(complex(*centers[0])) < 0.05
        eig_file = out / "eigenvalues_16.csv"
        header = eig_file.read_text().splitlines()
        assert header[0].startswith("# vielab")
        assert header[1] == "re,im,residual"

    def test_levels_validated(self, tmp_path):
        cfg = get_preset("disc-a2-spectrum")
        cfg["spectrum"]["levels"] = [40]
        assert run_scenario(cfg, "spectrum", str(tmp_path / "o")) == 2


class TestSweepTask:
    def test_breakdown_sweep_outputs(self, tmp_path):
        cfg = get_preset("breakdown-sweep")
        cfg["sweep"]["a_values"] = [-1.4, -1.05]
        cfg["discretization"]["n_per_axis"] = 16
        cfg["discretization"]["boundary_nodes"] = 64
        out = tmp_path / "out"
        assert run_scenario(cfg, "sweep", str(out)) == 0
        report = read_report(out)
        conds = report["results"]["conditions"]
        assert conds[1] > conds[0]
        rows = np.loadtxt(out / "sweep.csv", delimiter=",", skiprows=2)
        assert rows.shape == (2, 3)


class TestVerifyTask:
    def test_default_suite_passes(self, tmp_path):
        cfg = get_preset("verify-default")
        cfg["discretization"]["n_per_axis"] = 24
        cfg["discretization"]["boundary_nodes"] = 96
        out = tmp_path / "out"
        assert run_scenario(cfg, "verify", str(out)) == 0
        report = read_report(out)
        assert report["results"]["failed"] == 0
        names = {c["name"] for c in report["results"]["checks"]}
        assert {"potential-residual-decay", "jump-relation", "trace-equivalence",
                "smooth-form-equivalence", "sigma-map-involution"} <= names

    def test_laplace_registry_skips_boundary_checks(self):
        cfg = get_preset("verify-laplace")
        cfg["discretization"]["n_per_axis"] = 24
        scenario = Scenario(cfg, "verify")
        results = verify_suite(scenario)
        by_name = {c["name"]: c for c in results["checks"]}
        assert by_name["compact-cluster-at-zero"]["applicable"]
        assert not by_name["jump-relation"]["applicable"]
        assert by_name["jump-relation"]["detail"] == "not applicable"
        assert not by_name["trace-equivalence"]["applicable"]


class TestDeterminism:
    def test_identical_config_and_seed_byte_identical_outputs(self, tmp_path):
        cfg = get_preset("breakdown-sweep")
        cfg["sweep"]["a_values"] = [-1.4, -1.05]
        cfg["discretization"]["n_per_axis"] = 16
        cfg["discretization"]["boundary_nodes"] = 64
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert run_scenario(cfg, "sweep", str(out), seed_override=42) == 0
            outs.append((out / "sweep.csv").read_bytes()
                        + (out / "report.json").read_bytes())
        assert outs[0] == outs[1]

    def test_hash_ignores_output_dir(self):
        cfg = get_preset("verify-default")
        h1 = config_hash(cfg)
        cfg2 = dict(cfg, output_dir="/somewhere/else")
        assert config_hash(cfg2) == h1
        cfg3 = dict(cfg, seed=99)
        assert config_hash(cfg3) != h1


class TestPresets:
    def test_all_presets_build_scenarios(self):
        for name in preset_names():
            cfg = get_preset(name)
            scenario = Scenario(cfg, cfg["task"])
            assert scenario.hash

    def test_presets_subcommand_writes_files(self, tmp_path):
        assert main(["presets", "--write", str(tmp_path / "p")]) == 0
        written = list((tmp_path / "p").glob("*.json"))
        assert len(written) == len(preset_names())
