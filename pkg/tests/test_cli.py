"""End-to-end tests of the command-line interface."""

import json
from importlib.resources import files
from pathlib import Path

import numpy as np
import pytest

from facetkit import FacetEstimates, RatingsTensor
from facetkit.cli import main

BUNDLED_STUDY = Path(str(files("facetkit") / "data" / "study.json"))
BUNDLED_CSV = Path(str(files("facetkit") / "data" / "paper_shaped.csv"))


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def tensor_json(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "tensor.json"
    assert run_cli("ingest", BUNDLED_CSV, "--scale-min", 0, "--scale-max", 6,
                   "--out", path) == 0
    return path


@pytest.fixture(scope="module")
def estimates_json(tensor_json, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli-est") / "estimates.json"
    assert run_cli("estimate", tensor_json, "--out", path) == 0
    return path


class TestIngest:
    def test_writes_canonical_json(self, tensor_json):
        tensor = RatingsTensor.read_json(tensor_json)
        assert tensor.n_cells == 1440
        assert tensor.connected

    def test_missing_file_is_reported(self, capsys):
        assert run_cli("ingest", "/nonexistent/ratings.csv") == 1
        err = json.loads(capsys.readouterr().err)
        assert "error" in err

    def test_bad_scale_is_reported(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("person_id,item_id,rater_id,score\np1,i1,r1,9\np2,i1,r1,3\n")
        assert run_cli("ingest", bad, "--scale-min", 0, "--scale-max", 6) == 1
        assert "out of range" in capsys.readouterr().err


class TestAgree:
    def test_per_item_table(self, tensor_json, tmp_path):
        out = tmp_path / "agree.csv"
        assert run_cli("agree", tensor_json, "--benchmarks", "R1,R2",
                       "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "candidate,benchmark,items,n_pairs,kappa,degenerate"
        assert len(lines) == 1 + 10 * 2 * 4

    def test_pooled(self, tensor_json, tmp_path):
        out = tmp_path / "agree.csv"
        assert run_cli("agree", tensor_json, "--benchmarks", "R1", "--candidates",
                       "A1,A2", "--pooled", "--out", out) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_json_output(self, tensor_json, tmp_path):
        out = tmp_path / "agree.json"
        assert run_cli("agree", tensor_json, "--benchmarks", "R1", "--json",
                       "--out", out) == 0
        rows = json.loads(out.read_text())
        assert all("kappa" in r for r in rows)


class TestAlpha:
    def test_groups(self, tensor_json, tmp_path):
        out = tmp_path / "alpha.csv"
        assert run_cli("alpha", tensor_json, "--groups",
                       "holistic:SN1,ER1,SN2,ER2", "sn:SN1,SN2",
                       "--out", out) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 12 * 2

    def test_bad_group_spec(self, tensor_json, capsys):
        assert run_cli("alpha", tensor_json, "--groups", "holistic") == 1
        assert "name:item1,item2" in capsys.readouterr().err


class TestEstimateFitReport:
    def test_estimates_json(self, estimates_json):
        est = FacetEstimates.read_json(estimates_json)
        assert est.converged
        assert abs(est.params.severity.sum()) < 1e-6

    def test_fit_table(self, estimates_json, tensor_json, tmp_path):
        out = tmp_path / "fit.csv"
        assert run_cli("fit", estimates_json, tensor_json, "--facet", "rater",
                       "--cuts", "0.7,1.3", "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("id,measure,se,infit_ms,outfit_ms")
        assert len(lines) == 13

    def test_report_directory(self, estimates_json, tensor_json, tmp_path):
        out = tmp_path / "report"
        assert run_cli("report", estimates_json, tensor_json, "--wright", "both",
                       "--out", out) == 0
        for name in ("wright.txt", "wright.svg", "raters.csv", "descriptives.csv",
                     "summary.json"):
            assert (out / name).exists()


class TestEnsembleAndPrune:
    def test_ensemble_roundtrip(self, tensor_json, tmp_path):
        out = tmp_path / "extended.json"
        members = ",".join(f"A{i}" for i in range(1, 11))
        assert run_cli("ensemble", tensor_json, "--members", members,
                       "--name", "AI11", "--round", "half-away", "--out", out) == 0
        tensor = RatingsTensor.read_json(out)
        assert tensor.ids.raters[-1] == "AI11"

    def test_prune_trace(self, tensor_json, tmp_path):
        out = tmp_path / "trace.csv"
        members = ",".join(f"A{i}" for i in range(1, 6))
        assert run_cli("prune", tensor_json, "--members", members,
                       "--benchmarks", "R1,R2", "--steps", "2",
                       "--trace", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "step,removed,members,benchmark,item,kappa,mean_qwk"
        assert len(lines) == 1 + 3 * 8  # three states x 2 benchmarks x 4 items


class TestSimulate:
    def test_simulate_csv_and_truth(self, tmp_path):
        spec = {
            "n_persons": 10, "n_items": 2, "n_raters": 3,
            "scale": {"min_score": 0, "max_score": 6}, "seed": 5,
            "severity": [0.5, -0.5, 0.0],
        }
        spec_path = tmp_path / "sim.json"
        spec_path.write_text(json.dumps(spec))
        out = tmp_path / "t.csv"
        truth = tmp_path / "truth.json"
        assert run_cli("simulate", "--spec", spec_path, "--out", out,
                       "--truth", truth) == 0
        assert len(out.read_text().splitlines()) == 61
        truth_params = json.loads(truth.read_text())
        assert truth_params["severity"] == [0.5, -0.5, 0.0]

    def test_seed_override_changes_data(self, tmp_path):
        spec = {
            "n_persons": 10, "n_items": 2, "n_raters": 3,
            "scale": {"min_score": 0, "max_score": 6}, "seed": 5,
        }
        spec_path = tmp_path / "sim.json"
        spec_path.write_text(json.dumps(spec))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("simulate", "--spec", spec_path, "--out", a)
        run_cli("simulate", "--spec", spec_path, "--seed", "6", "--out", b)
        assert a.read_text() != b.read_text()


class TestRun:
    def test_bundled_study_completes(self, tmp_path):
        out = tmp_path / "study"
        assert run_cli("run", BUNDLED_STUDY, "--out", out) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        names = {a["path"] for a in manifest["artifacts"]}
        assert names == {
            "tensor.json", "agreement.csv", "agreement.json", "alpha.csv",
            "ensemble_agreement.csv", "estimates.json", "raters.csv",
            "wright.txt", "wright.svg", "descriptives.csv", "summary.json",
        }

    def test_rerun_is_hash_identical(self, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        run_cli("run", BUNDLED_STUDY, "--out", out1)
        run_cli("run", BUNDLED_STUDY, "--out", out2)
        m1 = (out1 / "manifest.json").read_text()
        m2 = (out2 / "manifest.json").read_text()
        assert m1 == m2

    def test_unknown_rater_names_stage_and_id(self, tmp_path, capsys):
        config = json.loads(BUNDLED_STUDY.read_text())
        config["input"]["csv"] = str(BUNDLED_CSV)
        config["benchmarks"] = ["R1", "R99"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(config))
        assert run_cli("run", path, "--out", tmp_path / "out") == 2
        err = json.loads(capsys.readouterr().err)
        assert err["stage"] == "agreement"
        assert "R99" in err["error"]

    def test_output_dir_env_var(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("FACETKIT_OUTPUT_DIR", str(tmp_path / "env_out"))
        assert run_cli("run", BUNDLED_STUDY) == 0
        assert (tmp_path / "env_out" / "manifest.json").exists()

    def test_no_output_dir_errors(self, monkeypatch, capsys):
        monkeypatch.delenv("FACETKIT_OUTPUT_DIR", raising=False)
        assert run_cli("run", BUNDLED_STUDY) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["stage"] == "setup"
