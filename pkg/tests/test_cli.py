import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
import yaml

from ordce.cli import main
from ordce.classifiers import load_model
from ordce.feature_space import FeatureSpec, load_dataset
from ordce.interaction import load_interaction
from ordce.synthetic import DEMO_FEATURES

from conftest import DEMO_M


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    assert main(["demo", "--out", str(out), "--seed", "3", "--n-samples", "300"]) == 0
    cfg = yaml.safe_load((out / "config.yaml").read_text())
    cfg["instances"] = {"max": 3}
    (out / "config.yaml").write_text(yaml.safe_dump(cfg, sort_keys=False))
    return out


def run(*argv):
    return main([str(a) for a in argv])


class TestDemo:
    def test_files(self, demo_dir):
        assert {p.name for p in demo_dir.iterdir()} >= {"credit.csv", "dag.json", "model.json", "config.yaml"}
        header = (demo_dir / "credit.csv").read_text().splitlines()[0]
        assert header.split(",") == [*DEMO_FEATURES, "label"]

    def test_deterministic(self, demo_dir, tmp_path):
        assert run("demo", "--out", tmp_path, "--seed", 3, "--n-samples", 300) == 0
        for name in ("credit.csv", "dag.json", "model.json"):
            assert (tmp_path / name).read_bytes() == (demo_dir / name).read_bytes()

    def test_dag_reproduces_matrix(self, demo_dir):
        assert np.array_equal(load_interaction(demo_dir / "dag.json", list(DEMO_FEATURES)), DEMO_M)

    def test_model_accuracy(self, demo_dir):
        cfg = yaml.safe_load((demo_dir / "config.yaml").read_text())
        X, _ = load_dataset(demo_dir / "credit.csv", [FeatureSpec.from_dict(f) for f in cfg["features"]])
        with open(demo_dir / "credit.csv") as fh:
            y = np.array([int(r["label"]) for r in csv.DictReader(fh)])
        clf = load_model(demo_dir / "model.json")
        assert np.mean([clf.predict(x) == t for x, t in zip(X, y)]) > 0.75

    def test_bad_sample_count(self, tmp_path):
        assert run("demo", "--out", tmp_path, "--n-samples", 0) == 2


class TestExtract:
    def test_results_valid_and_reproducible(self, demo_dir, tmp_path):
        cfg = demo_dir / "config.yaml"
        assert run("extract", cfg, "--out", tmp_path / "a", "--export-mps", "--gamma", 1, "--k", 4) == 0
        assert run("extract", cfg, "--out", tmp_path / "b", "--gamma", 1, "--k", 4) == 0
        clf = load_model(demo_dir / "model.json")
        X, _ = load_dataset(demo_dir / "credit.csv",
                            [FeatureSpec.from_dict(f) for f in yaml.safe_load(cfg.read_text())["features"]])
        summary = json.loads((tmp_path / "a" / "summary.json").read_text())
        assert summary["n_instances"] == 3 and summary["n_solved"] == 3
        for item in summary["instances"]:
            r = item["instance"]
            name = f"instance_{r}_ordce.json"
            doc = json.loads((tmp_path / "a" / name).read_text())
            a = np.array([doc["action"].get(n, 0.0) for n in DEMO_FEATURES])
            assert clf.predict(X[r] + a) == 1
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
            assert (tmp_path / "a" / f"instance_{r}.mps").exists()
        assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
        assert (tmp_path / "a" / "timings.csv").exists()

    def test_greedy_tag(self, demo_dir, tmp_path):
        assert run("extract", demo_dir / "config.yaml", "--out", tmp_path, "--method", "greedy") == 0
        docs = [json.loads(p.read_text()) for p in tmp_path.glob("instance_*_greedy.json")]
        assert len(docs) == 3 and all(d["method"] == "greedy" for d in docs)

    def test_all_failed(self, demo_dir, tmp_path):
        cfg = yaml.safe_load((demo_dir / "config.yaml").read_text())
        for f in cfg["features"]:
            f["actionability"] = "fixed"
        for key in ("dataset", "model", "interaction"):
            cfg[key] = str(demo_dir / cfg[key])
        path = tmp_path / "fixed.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert run("extract", path, "--out", tmp_path / "r") == 3

    @pytest.mark.parametrize("extra", [["--gamma", "-1"], ["--k", "0"], ["--time-limit", "0"]])
    def test_bad_overrides(self, demo_dir, tmp_path, extra):
        assert run("extract", demo_dir / "config.yaml", "--out", tmp_path, *extra) == 2

    def test_missing_config(self, tmp_path):
        assert run("extract", tmp_path / "nope.yaml") == 2

    def test_malformed_config(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("dataset: x.csv\n")
        assert run("extract", path) == 2

    def test_table_cost_needs_table(self, demo_dir, tmp_path):
        assert run("extract", demo_dir / "config.yaml", "--out", tmp_path, "--cost", "table") == 2


class TestCompareAndSweep:
    def test_compare(self, demo_dir, tmp_path):
        assert run("compare", demo_dir / "config.yaml", "--out", tmp_path) == 0
        with open(tmp_path / "comparison_rows.csv") as fh:
            rows = list(csv.DictReader(fh))
        summary = json.loads((tmp_path / "comparison_summary.json").read_text())
        for method in ("ordce", "greedy"):
            vals = [float(r["cost_total"]) for r in rows if r["method"] == method]
            assert len(vals) == 3
            assert math.isclose(summary[method]["mean"]["cost_total"], float(np.mean(vals)), rel_tol=1e-12)
            assert math.isclose(summary[method]["std"]["cost_total"], float(np.std(vals)), rel_tol=1e-9, abs_tol=1e-12)
        by = {(r["instance"], r["method"]): float(r["cost_total"]) for r in rows}
        for (inst, m), v in by.items():
            if m == "ordce":
                assert v <= by[(inst, "greedy")] + 1e-9
        assert summary["ordce"]["mean"]["cost_total"] <= summary["greedy"]["mean"]["cost_total"]

    def test_sweep(self, demo_dir, tmp_path):
        assert run("sweep", demo_dir / "config.yaml", "--out", tmp_path, "--gammas", "0,1,4") == 0
        with open(tmp_path / "sweep.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["gamma"]) for r in rows] == [0.0, 1.0, 4.0]
        ords = [float(r["mean_cost_ord"]) for r in rows]
        dists = [float(r["mean_cost_dist"]) for r in rows]
        assert all(b <= a + 1e-6 for a, b in zip(ords, ords[1:]))
        assert all(b >= a - 1e-6 for a, b in zip(dists, dists[1:]))
        # gamma = 0 reduces to the plain counterfactual cost
        assert math.isclose(float(rows[0]["mean_cost_total"]), dists[0])

    def test_sweep_rejects_descending(self, demo_dir, tmp_path):
        assert run("sweep", demo_dir / "config.yaml", "--out", tmp_path, "--gammas", "1,0") == 2

    def test_export_mps(self, demo_dir, tmp_path):
        assert run("export-mps", demo_dir / "config.yaml", "--out", tmp_path) == 0
        files = sorted(tmp_path.glob("*.mps"))
        assert len(files) == 3
        assert all(f.read_text().endswith("ENDATA\n") for f in files)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ordce.cli", "demo", "--out", str(tmp_path), "--n-samples", "50"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "model training accuracy" in proc.stdout
