"""CLI subcommands and pipeline orchestration."""

import json
from pathlib import Path

import numpy as np
import pytest

from phlab.cli import main
from phlab.errors import ConfigInvalid
from phlab.pipeline import (ExperimentConfig, bundled_config_path,
                            load_bundled, run)

LINEAR = bundled_config_path("linear_oracle")
PERTURBED = bundled_config_path("standard_perturbed")


class TestConfigValidation:
    def test_seed_mandatory(self):
        doc = json.loads(LINEAR.read_text())
        del doc["run"]["seed"]
        with pytest.raises(ConfigInvalid, match="seed"):
            ExperimentConfig.from_json(json.dumps(doc))

    def test_eps_prime_override_rejected_when_too_big(self):
        from phlab.pipeline import build_ledger
        doc = json.loads(PERTURBED.read_text())
        doc["ledger_overrides"] = {"eps_prime": 0.1}
        cfg = ExperimentConfig.from_json(json.dumps(doc))
        with pytest.raises(ConfigInvalid, match="slack bound"):
            build_ledger(cfg)

    def test_valid_override_accepted(self):
        from phlab.pipeline import build_ledger
        doc = json.loads(PERTURBED.read_text())
        doc["ledger_overrides"] = {"eps_prime": 0.005}
        cfg = ExperimentConfig.from_json(json.dumps(doc))
        assert build_ledger(cfg).eps_prime == 0.005

    def test_content_hash_stable(self):
        a = ExperimentConfig.from_json(LINEAR)
        b = ExperimentConfig.from_json(LINEAR)
        assert a.content_hash() == b.content_hash()

    def test_jobs_reduction_is_deterministic(self):
        from phlab.pipeline import criterion_manifolds
        cfg = load_bundled("standard_perturbed")
        seq1 = criterion_manifolds(cfg, jobs=1)
        seq2 = criterion_manifolds(cfg, jobs=3)
        assert seq1.passed == seq2.passed
        assert seq1.details.keys() == seq2.details.keys()
        for star in ("s", "c", "u"):
            assert seq1.details[star]["invariance_gap"] == \
                seq2.details[star]["invariance_gap"]


class TestRunPipeline:
    def test_manifest_and_reproducibility(self, tmp_path):
        cfg = load_bundled("linear_oracle")
        cfg.samples = 12
        cfg.n_max = 15
        m1 = run(cfg, tmp_path / "a")
        m2 = run(cfg, tmp_path / "b")
        assert (tmp_path / "a" / "manifest.json").exists()
        for name in m1.files:
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes(), name
        doc = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert doc["config_hash"] == cfg.content_hash()
        assert set(doc["stages"]) == {"certify", "ledger", "dynamics",
                                      "manifolds", "holonomy"}

    def test_csv_row_count(self, tmp_path):
        cfg = load_bundled("linear_oracle")
        cfg.samples = 12
        cfg.n_max = 15
        run(cfg, tmp_path / "c")
        rows = (tmp_path / "c" / "holonomy_diagnostics.csv").read_text()
        assert len(rows.splitlines()) == 1 + cfg.n_max

    def test_report_summary_and_missing_artifacts(self, tmp_path):
        from phlab.errors import MissingArtifacts
        from phlab.pipeline import report
        cfg = load_bundled("linear_oracle")
        cfg.samples = 12
        cfg.n_max = 15
        run(cfg, tmp_path / "d")
        lines = []
        out = report(tmp_path / "d", echo=lines.append)
        assert out["manifest"]["config_hash"] == cfg.content_hash()
        assert any("C0 decay slope" in ln for ln in lines)
        with pytest.raises(MissingArtifacts):
            report(tmp_path / "nowhere")


class TestCommands:
    def test_certify(self, capsys):
        assert main(["--config", str(LINEAR), "certify"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_ledger(self, capsys):
        assert main(["--config", str(PERTURBED), "ledger"]) == 0
        out = capsys.readouterr().out
        assert "theta_bar" in out and "PASS" in out

    def test_manifolds_single_star(self, tmp_path, capsys):
        code = main(["--config", str(LINEAR), "--out", str(tmp_path),
                     "manifolds", "--star", "s"])
        assert code == 0
        assert (tmp_path / "leaf_s.csv").exists()

    def test_audit_bunching_exit_codes(self):
        ok = main(["--config", str(bundled_config_path("bunching_pass")),
                   "audit-bunching"])
        bad = main(["--config", str(bundled_config_path("bunching_control")),
                    "audit-bunching"])
        assert ok == 0 and bad == 1

    def test_charts_with_export(self, tmp_path, capsys):
        export = tmp_path / "exported.json"
        code = main(["--out", str(tmp_path), "charts",
                     "--horizon", "2000",
                     "--export-sequence", str(export)])
        assert code == 0
        doc = json.loads(export.read_text())
        cfg = ExperimentConfig.from_json(json.dumps(doc))
        assert cfg.name == "exported-charts"
        # the exported config loads into a working dynamics
        from phlab.pipeline import build_dynamics
        seq = build_dynamics(cfg)
        assert seq.is_linear

    def test_holonomy_writes_report(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        doc = json.loads(LINEAR.read_text())
        doc["run"]["samples"] = 12
        doc["run"]["n_max"] = 12
        cfg_path.write_text(json.dumps(doc))
        code = main(["--config", str(cfg_path), "--out", str(tmp_path / "r"),
                     "holonomy"])
        assert code == 0
        assert (tmp_path / "r" / "holonomy_diagnostics.csv").exists()
        assert (tmp_path / "r" / "manifest.json").exists()
