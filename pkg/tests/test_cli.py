import json
import shutil
from pathlib import Path

import pytest

from incinterp.cli import RunConfig, dumps, main

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"


def run(tmp_path, config, *extra, name="out"):
    out = tmp_path / name
    code = main(["--config", str(config), "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


def test_golden_interpolate(tmp_path):
    code, rep, _ = run(tmp_path, CONFIGS / "golden_interpolate.json", "--series", str(CONFIGS / "golden_series.csv"))
    assert code == 0 and rep["status"] == "ok"
    res = rep["result"]
    assert res["exact"]["mse"] == "616/85"
    assert res["exact"]["time_weights"] == {"-2": "106/85", "-1": "149/85", "2": "4/85", "3": "-4/85"}
    assert res["estimate"] == pytest.approx(3.9)
    cmp = rep["reference_comparison"]
    assert cmp["mse"]["match"] is False and cmp["time_weights"]["match"] is True


def test_verify_task(tmp_path):
    code, rep, _ = run(tmp_path, CONFIGS / "golden_verify.json")
    assert code == 0
    orc = rep["result"]["oracle"]
    assert orc["max_weight_delta"] < 1e-6 and orc["mse_delta"] < 1e-6


@pytest.mark.parametrize("cfg", ["golden_point.json", "coint_beta2.json"])
def test_other_tasks_run(tmp_path, cfg):
    code, rep, _ = run(tmp_path, CONFIGS / cfg)
    assert code == 0 and rep["result"]["mse"] > 0


def test_grid_csv(tmp_path):
    code, _, out = run(tmp_path, CONFIGS / "golden_interpolate.json", "--grid-out")
    lines = (out / "grid.csv").read_text().splitlines()
    assert code == 0
    assert lines[0] == "lambda,f,g,abs_h,arg_h"
    assert len(lines) == 1025


def test_config_round_trip(tmp_path):
    _, rep, _ = run(tmp_path, CONFIGS / "golden_interpolate.json", name="a")
    echoed = tmp_path / "echo.json"
    echoed.write_text(json.dumps(rep["config"]))
    _, rep2, _ = run(tmp_path, echoed, name="b")
    assert rep2["result"] == rep["result"]


@pytest.mark.parametrize("patch,code", [
    ({"functional": []}, 2),
    ({"task": "extrapolate"}, 2),
    ({"spec": {"n": 0, "mu": 1, "N": 1}}, 2),
    ({"functional": [1, 2, 3]}, 2),
    ({"f": {"kind": "nonsense"}}, 2),
])
def test_validation_errors(tmp_path, patch, code):
    cfg = json.loads((CONFIGS / "golden_interpolate.json").read_text())
    cfg.update(patch)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    got, rep, _ = run(tmp_path, path)
    assert got == code
    assert rep["status"] == "error" and rep["error"]["exit_code"] == code


def test_missing_config_is_io_error(tmp_path):
    assert main(["--config", str(tmp_path / "nope.json")]) == 4


def test_numerical_failure_code(tmp_path):
    cfg = json.loads((CONFIGS / "golden_interpolate.json").read_text())
    cfg["f"] = {"kind": "rational", "num": [1, -1], "n": 1}  # minimality fails
    path = tmp_path / "div.json"
    path.write_text(json.dumps(cfg))
    assert main(["--config", str(path)]) == 3


def test_missing_observation(tmp_path):
    series = tmp_path / "short.csv"
    series.write_text("t,value\n-1,1.0\n2,1.0\n")
    code, rep, _ = run(tmp_path, CONFIGS / "golden_interpolate.json", "--series", str(series))
    assert code == 2 and rep["error"]["type"] == "MissingObservationError"


def test_task_requirements():
    with pytest.raises(ValueError, match="requires"):
        RunConfig.from_dict({"task": "point", "spec": {"n": 1, "mu": 1, "N": 1}, "functional": [1, 0],
                             "f": {"kind": "zero"}})


@pytest.mark.parametrize("value,text", [(0.1, "0.10000000000000001"), (float("inf"), '"inf"'), (3, "3")])
def test_float_format(value, text):
    assert dumps({"x": value}) == '{\n  "x": ' + text + "\n}\n"
