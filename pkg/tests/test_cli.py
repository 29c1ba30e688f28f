import json
import shutil
import subprocess
import sys

import pytest

from conftest import FIXTURES
from thermoforge import data as D
from thermoforge.cli import main
from thermoforge.suites import verify_manifest

FAST = {
    "regression": {"random_forest": {"n_trees": 5}, "extra_trees": {"n_trees": 5},
                   "second_order_boosting": {"n_stages": 5}, "ordered_boosting": {"n_stages": 5},
                   "gradient_boosting": {"n_stages": 5}, "adaboost": {"n_stages": 5}},
    "pinn": {"epochs": 15, "hidden": [6], "surface_grid": 5},
    "classification": {"random_forest": {"n_trees": 5}, "adaboost": {"n_stages": 5},
                       "gradient_boosting": {"n_stages": 5}, "stochastic_gradient_boosting": {"n_stages": 5},
                       "logistic": {"n_epochs": 50}, "sgd": {"n_epochs": 20}},
}


@pytest.fixture
def workdir(tmp_path):
    for name in ("regression.csv", "classification.csv"):
        shutil.copy(FIXTURES / name, tmp_path / name)
    return tmp_path


def write_config(workdir, **extra):
    cfg = {"data": {"regress": "regression.csv", "pinn": "regression.csv", "classify": "classification.csv"},
           "seed": 42, "output": "out"}
    cfg.update(FAST)
    cfg.update(extra)
    path = workdir / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def outputs(out_dir):
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir()) if not p.name.startswith("timings_")}


def test_all_writes_manifest_and_is_deterministic(workdir, capsys):
    cfg = write_config(workdir)
    assert main(["all", "--config", str(cfg), "--out", str(workdir / "a")]) == 0
    assert main(["all", "--config", str(cfg), "--out", str(workdir / "b"), "--parallel"]) == 0
    a, b = outputs(workdir / "a"), outputs(workdir / "b")
    assert a == b
    listed = verify_manifest(workdir / "a")
    assert sorted(listed + ["manifest.json"]) == sorted(p.name for p in (workdir / "a").iterdir())
    for suite in ("regress", "pinn", "classify"):
        assert f"report_{suite}.json" in listed and f"timings_{suite}.json" in listed
    assert "wrote" in capsys.readouterr().out


def test_report_contents(workdir):
    cfg = write_config(workdir)
    assert main(["classify", "--config", str(cfg)]) == 0
    report = json.loads((workdir / "out" / "report_classify.json").read_text())
    assert [r["slug"] for r in report["rows"]][:3] == ["logistic", "knn", "svc"]
    assert len(report["rows"]) == 9
    assert D.TOOL_DIAMETER in report["dropped_features"] and D.TOOL_DIAMETER not in report["features"]
    timings = json.loads((workdir / "out" / "timings_classify.json").read_text())
    assert set(timings["fit_seconds"]) == {r["slug"] for r in report["rows"]}


def test_seed_env_and_flag(workdir, monkeypatch):
    cfg = write_config(workdir, suite="regress")
    monkeypatch.setenv("THERMOFORGE_SEED", "7")
    assert main(["regress", "--config", str(cfg), "--out", str(workdir / "env")]) == 0
    assert main(["regress", "--config", str(cfg), "--out", str(workdir / "flag"), "--seed", "7"]) == 0
    monkeypatch.delenv("THERMOFORGE_SEED")
    assert main(["regress", "--config", str(cfg), "--out", str(workdir / "flag7"), "--seed", "7"]) == 0
    assert main(["regress", "--config", str(cfg), "--out", str(workdir / "cfg")]) == 0
    env, flag = outputs(workdir / "env"), outputs(workdir / "flag7")
    assert env == outputs(workdir / "flag") == flag
    assert env["report_regress.json"] != outputs(workdir / "cfg")["report_regress.json"]


def test_config_error_exit_1(workdir, capsys):
    cfg = write_config(workdir, pinn={"leerning_rate": 0.1})
    assert main(["pinn", "--config", str(cfg)]) == 1
    assert "leerning_rate" in capsys.readouterr().err
    assert main(["pinn", "--config", str(workdir / "missing.json")]) == 1


def test_data_error_exit_2(workdir, capsys):
    text = (workdir / "regression.csv").read_text().splitlines()
    cells = text[2].split(",")
    cells[0] = "fast"
    text[2] = ",".join(cells)
    (workdir / "regression.csv").write_text("\n".join(text) + "\n")
    cfg = write_config(workdir)
    assert main(["regress", "--config", str(cfg)]) == 2
    assert "row 3" in capsys.readouterr().err


def test_missing_data_file_is_config_error(workdir):
    cfg = write_config(workdir, data="nowhere.csv")
    assert main(["regress", "--config", str(cfg)]) == 1


def test_divergence_exit_3(workdir, capsys):
    cfg = write_config(workdir, pinn={"epochs": 5, "hidden": [4], "learning_rate": 1e300})
    with pytest.warns(RuntimeWarning):
        assert main(["pinn", "--config", str(cfg)]) == 3
    assert "epoch" in capsys.readouterr().err


def test_plots_command(workdir):
    cfg = write_config(workdir)
    assert main(["plots", "--config", str(cfg)]) == 0
    names = verify_manifest(workdir / "out")
    assert "plot_correlation_heatmap_regress_dataset.svg" in names


def test_console_script_usage():
    proc = subprocess.run([sys.executable, "-m", "thermoforge.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "--parallel" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "thermoforge.cli", "bogus", "--config", "x"],
                          capture_output=True, text=True)
    assert proc.returncode == 2  # argparse usage error
