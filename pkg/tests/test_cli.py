import json
import subprocess
import sys

import numpy as np
import pytest

from mnar import fileio as fio
from mnar.cli import main

SIM = {"n1": 10, "n2": 10, "horizon": 5, "b_rank": 2, "seed": 3}


def write_cfg(path, **sections):
    path.write_text(json.dumps(sections))
    return str(path)


def estimator(nu):
    return {"step1": {"nu1": nu, "nu2": nu}, "step2": {"nu3": 1.0, "nu4": 2.0, "mix_alpha": 1.0}}


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = write_cfg(root / "cfg.json", simulate=SIM)
    assert main(["simulate", "--config", cfg, "--out", str(root / "data")]) == 0
    return root


def test_simulate_writes_long_panel(dataset):
    lines = (dataset / "data" / fio.PANEL_FILE).read_text().splitlines()
    assert len(lines) == 1 + 10 * 10 * 5
    panel, nets, cov = fio.read_dataset(dataset / "data")
    assert panel.shape == (5, 10, 10)
    assert nets.w1.shape == (10, 10) and cov.x.shape[0] == 10
    truth = fio.read_json(dataset / "data" / fio.TRUTH_FILE)
    assert len(truth["lambda"]) == 10 and truth["config"]["seed"] == 3


def test_simulate_is_byte_identical(dataset, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", simulate=SIM)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "again")]) == 0
    for name in (fio.PANEL_FILE, fio.COV_FILE, fio.ROW_NET_FILE, fio.COL_NET_FILE, fio.TRUTH_FILE):
        assert (tmp_path / "again" / name).read_bytes() == (dataset / "data" / name).read_bytes()


def test_seed_flag_overrides(dataset, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", simulate=SIM)
    main(["simulate", "--config", cfg, "--seed", "4", "--out", str(tmp_path / "s4")])
    assert (tmp_path / "s4" / fio.PANEL_FILE).read_bytes() != (dataset / "data" / fio.PANEL_FILE).read_bytes()


def test_estimate_and_complete(dataset, tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json", estimator=estimator(500.0))
    data = str(dataset / "data")
    assert main(["estimate", "--config", cfg, "--data", data, "--out", str(tmp_path / "a")]) == 0
    assert main(["estimate", "--config", cfg, "--data", data, "--out", str(tmp_path / "b")]) == 0
    fa = fio.read_json(tmp_path / "a" / fio.FIT_FILE)
    fb = fio.read_json(tmp_path / "b" / fio.FIT_FILE)
    assert len(fa["adjusted"]["lambda"]) == 10 and len(fa["adjusted"]["gamma"]) == 10
    fa.pop("timings"), fb.pop("timings")
    assert fa == fb

    out = tmp_path / "done"
    assert main(["complete", "--data", data, "--fit", str(tmp_path / "a" / fio.FIT_FILE), "--out", str(out)]) == 0
    panel, _, _ = fio.read_dataset(dataset / "data")
    filled = fio.read_values(out / "completed.csv")
    obs = panel.mask == 1
    np.testing.assert_array_equal(filled[obs], panel.responses[obs])
    assert np.all(np.isfinite(filled))
    assert len((out / "recovered.csv").read_text().splitlines()) == 1 + 500


def test_numeric_failure_exits_two(dataset, tmp_path, capsys):
    cfg = write_cfg(tmp_path / "cfg.json", estimator=estimator(50.0))
    code = main(["estimate", "--config", cfg, "--data", str(dataset / "data"), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "mnar" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["estimate", "--out", "x"],
    ["nonsense"],
    ["estimate", "--data", "/nonexistent/dir", "--out", "x"],
])
def test_usage_errors_exit_one(argv, tmp_path):
    argv = [a if a != "x" else str(tmp_path / "x") for a in argv]
    assert main(argv) == 1


def test_bad_config_exits_one(tmp_path):
    (tmp_path / "cfg.json").write_text("[1, 2]")
    assert main(["simulate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path)]) == 1


def test_benchmark_smoke(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.json",
                    benchmark={"cells": [{"n": 20, "horizon": 10}], "reps": 1, "seed": 2},
                    estimator=estimator(3e3))
    assert main(["benchmark", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    table = (tmp_path / "b" / "results.txt").read_text()
    assert "TestErr" in table and "ADJ" in table
    assert (tmp_path / "b" / "results.csv").read_text().count("\n") > 1


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "mnar", "estimate"], capture_output=True, text=True)
    assert out.returncode == 1
