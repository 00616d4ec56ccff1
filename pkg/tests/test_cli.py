import json
from importlib import resources

import numpy as np
import pytest

from nlfreg.cli import main
from nlfreg.simulate import MpeReport

DATA = resources.files("nlfreg").joinpath("data")
PRED = str(DATA / "mortality_covariates.csv")
RESP = str(DATA / "mortality_binned.csv")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fit_json(capsys):
    code, out, _ = run(capsys, "fit", "--predictors", PRED, "--responses", RESP)
    assert code == 0
    summary = json.loads(out)
    assert summary["n"] == 40 and summary["kernel"] == "gaussian"
    assert len(summary["gcv_table"]) == 6


def test_fixed_epsilon_and_kernel(capsys):
    code, out, _ = run(capsys, "fit", "--predictors", PRED, "--responses", RESP,
                       "--epsilon", "0.01", "--kernel", "laplacian")
    assert code == 0
    summary = json.loads(out)
    assert summary["epsilon"] == 0.01 and summary["gcv_table"] == []


def test_tune_rows(capsys):
    code, out, _ = run(capsys, "tune", "--predictors", PRED, "--responses", RESP)
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("epsilon,")
    eps = [float(l.split(",")[0]) for l in lines[1:]]
    assert len(eps) == 6 and eps == sorted(eps)
    assert sum(int(l.split(",")[-1]) for l in lines[1:]) == 1


def test_predict(tmp_path, capsys):
    new = tmp_path / "new.csv"
    new.write_text("id,a,b,c,d\nq1,0,0,0,0\nq2,0.5,-0.5,0.1,0.2\n")
    code, out, _ = run(capsys, "predict", "--predictors", PRED, "--responses", RESP,
                       "--new", str(new), "--grid-size", "20")
    assert code == 0
    rows = out.strip().splitlines()
    assert len(rows) == 3 and len(rows[1].split(",")) == 21
    vals = np.array([float(v) for v in rows[1].split(",")[1:]])
    assert np.all(np.diff(vals) >= 0)


def test_samples_response_format(tmp_path, capsys):
    rng = np.random.default_rng(0)
    p = tmp_path / "x.csv"
    y = tmp_path / "y.csv"
    p.write_text("id,x\n" + "".join(f"s{i},{i / 10}\n" for i in range(8)))
    y.write_text("".join(f"s{i}," + ",".join(map(str, rng.normal(i, 1, 15))) + "\n" for i in range(8)))
    code, out, _ = run(capsys, "fit", "--predictors", str(p), "--responses", str(y),
                       "--response-format", "samples")
    assert code == 0 and json.loads(out)["n"] == 8


def test_simulate_bundled(capsys):
    code, out, _ = run(capsys, "simulate", "--replicates", "2")
    assert code == 0
    rep = MpeReport.from_csv(out)
    assert np.isfinite(rep.mean) and np.isfinite(rep.stderr)


def test_simulate_reproducible(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("model_id = IV1\nn = 20\nr = 3\nB = 2\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(cfg), "--seed", "3", "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(cfg), "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_residuals(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["residuals", "--predictors", PRED, "--responses", RESP, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["abscissa", "identity", "mean_map"]
    assert len(lines) == 201


@pytest.mark.parametrize(
    "argv",
    [
        ["fit", "--bogus"],
        ["nosuch"],
        ["fit", "--predictors", "missing.csv", "--responses", RESP],
        ["fit", "--predictors", PRED, "--responses", "missing.csv"],
        ["fit", "--predictors", PRED, "--responses", RESP, "--epsilon", "-1"],
        ["simulate", "--config", "missing.cfg"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_malformed_input_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("edges,0,1\nS000,1,2\n")
    code, _, err = run(capsys, "fit", "--predictors", PRED, "--responses", str(bad))
    assert code == 2 and "line 2" in err


def test_numerical_failure_exit_1(tmp_path, capsys):
    p = tmp_path / "x.csv"
    y = tmp_path / "y.csv"
    p.write_text("id,x\na,1\nb,1\nc,1\n")
    y.write_text("a,1,2\nb,1,2\nc,1,2\n")
    code, _, err = run(capsys, "fit", "--predictors", str(p), "--responses", str(y),
                       "--response-format", "samples")
    assert code == 1 and "numerical" in err
