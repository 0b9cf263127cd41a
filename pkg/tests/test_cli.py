import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from consensus_lab.cli import main
from consensus_lab.scenarios import build_builtin


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return str(path)


def test_list(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0 and "opinion-dt-linear" in out and "alias: rendezvous" in out
    code, out, _ = run(["list", "--show", "cs-dt2"], capsys)
    assert code == 0 and yaml.safe_load(out)["protocol"]["k3"] == 0.14


def test_run_opinion_ct_pass(tmp_path, capsys):
    code, out, _ = run(["run", "opinion-ct-pass", "--output", str(tmp_path)], capsys)
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["verdict"] == "consensus"
    assert abs(summary["observed"][0] - 0.475) < 1e-6 and summary["abs_error"] < 1e-6
    rows = read_csv(tmp_path / "trajectory.csv")
    header = rows[0]
    assert header[:2] == ["time", "x_0_0"] and header[-2:] == ["W_staircase", "max_pairwise_dist"]
    assert all(len(r) == 1 + 20 + 2 for r in rows)
    assert float(rows[1][0]) == 0.0 and float(rows[-1][0]) == pytest.approx(50.0)


def test_run_opinion_ct_fail(tmp_path, capsys):
    code, out, _ = run(["run", "opinion-ct-fail", "--output", str(tmp_path)], capsys)
    assert code == 0 and "verdict: clustered" in out


def test_run_second_order_columns_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["run", "rendezvous-dt", "--output", str(d), "--horizon", "200"], capsys)[0] == 0
    rows = read_csv(a / "trajectory.csv")
    assert len(rows[0]) == 1 + 6 * 2 * 2 + 3
    assert rows[0][13] == "v_0_0"
    for name in ("trajectory.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_csv_round_trips_floats(tmp_path, capsys):
    run(["run", "opinion-dt-fail", "--output", str(tmp_path), "--horizon", "3"], capsys)
    rows = read_csv(tmp_path / "trajectory.csv")
    inst = build_builtin("opinion-dt-fail").build()
    assert [float(c) for c in rows[1][1:16]] == inst.initial.x[:, 0].tolist()


def test_run_single_agent(tmp_path, capsys):
    path = write_yaml(
        tmp_path / "one.yaml",
        {
            "name": "solo", "graph": {"kind": "complete"}, "weight": {"family": "constant", "c": 1.0},
            "protocol": {"law": "CT1-fixed", "dt": 0.01}, "initial": {"kind": "explicit", "x": [[0.3, -2.0]]},
            "horizon": 1.0, "sample_every": 0.5,
        },
    )
    code, out, _ = run(["run", path, "--output", str(tmp_path / "out")], capsys)
    assert code == 0 and "verdict: consensus" in out


def test_run_blowup_is_a_verdict(tmp_path, capsys):
    path = write_yaml(
        tmp_path / "boom.yaml",
        {
            "name": "boom", "graph": {"kind": "complete"}, "weight": {"family": "constant", "c": 1.0},
            "protocol": {"law": "DT1-fixed", "h": 5.0}, "initial": {"kind": "explicit", "x": [[0.0], [1.0]]},
            "horizon": 100, "sample_every": 1,
        },
    )
    code, out, _ = run(["run", path, "--output", str(tmp_path)], capsys)
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["verdict"] == "diverged" and summary["blowup_time"] is not None


def test_run_bad_inputs(tmp_path, capsys):
    code, _, err = run(["run", str(tmp_path / "missing.yaml")], capsys)
    assert code != 0 and "error" in err
    (tmp_path / "bad.yaml").write_text("name: [unclosed\n")
    assert run(["run", str(tmp_path / "bad.yaml")], capsys)[0] != 0
    (tmp_path / "list.yaml").write_text("- 1\n- 2\n")
    assert run(["run", str(tmp_path / "list.yaml")], capsys)[0] != 0
    assert run(["run", "opinion-dt-pass", "--seed", "3"], capsys)[0] != 0


def test_env_var_output(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CONSENSUS_LAB_OUTPUT", str(tmp_path / "env"))
    assert run(["run", "opinion-dt-pass", "--horizon", "5"], capsys)[0] == 0
    assert (tmp_path / "env" / "trajectory.csv").exists()


def test_overrides(tmp_path, capsys):
    run(["run", "rendezvous-ct", "--output", str(tmp_path), "--dt", "0.05", "--horizon", "1", "--seed", "9"], capsys)
    rows = read_csv(tmp_path / "trajectory.csv")
    assert float(rows[-1][0]) == pytest.approx(1.0)
    assert float(rows[2][0]) == pytest.approx(0.1)  # sampled every 0.1 = 2 steps of 0.05


def test_check_linear(capsys):
    code, out, _ = run(["check", "opinion-dt-linear", "THM11", "--staircase-r", "0", "--staircase-r", "1.8"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 2
    assert lines[0].startswith("THM11 r=0:") and lines[0].split()[-1] == "fails"
    assert lines[1].startswith("THM11 r=1.8:") and lines[1].split()[-1] == "holds"


def test_check_cor1(capsys, tmp_path):
    code, out, _ = run(["check", "cs-ct2-dynamic-pass", "COR1", "--output", str(tmp_path)], capsys)
    assert code == 0 and "holds" in out
    report = json.loads((tmp_path / "check.json").read_text())
    assert report["reports"][0]["criterion"] == "COR1" and report["reports"][0]["holds"]


def test_check_vacuous_and_errors(tmp_path, capsys):
    cfg = build_builtin("cs-ct2-dynamic-pass").to_dict()
    cfg["weight"] = {"family": "cucker-smale", "H": 1.0, "beta": 1.0}
    path = write_yaml(tmp_path / "b1.yaml", cfg)
    code, out, _ = run(["check", path, "COR1", "THM4", "GAINS"], capsys)
    lines = out.strip().splitlines()
    assert code == 0
    assert "vacuously holds" in lines[0]
    assert lines[1].startswith("THM4: error:") and lines[2].startswith("GAINS: error:")


def test_check_gains_printed_once(capsys):
    _, out, _ = run(["check", "opinion-dt-pass", "GAINS", "THM11", "--staircase-r", "0", "--staircase-r", "0.1"], capsys)
    lines = out.strip().splitlines()
    assert [l.split(":")[0] for l in lines] == ["GAINS", "THM11 r=0", "THM11 r=0.1"]


def test_sweep_d(tmp_path, capsys):
    code, _, _ = run(["sweep", "opinion-ct", "d", "0.2", "0.05", "--output", str(tmp_path)], capsys)
    rows = read_csv(tmp_path / "sweep.csv")
    assert code == 0
    assert rows[0] == ["d", "THM4", "THM10", "verdict"]
    assert [r[0] for r in rows[1:]] == ["0.050000000000000003", "0.20000000000000001"]
    assert rows[1][2:] == ["holds", "consensus"] and rows[2][2:] == ["fails", "clustered"]


def test_sweep_staircase_r(tmp_path, capsys):
    code, _, _ = run(["sweep", "opinion-dt-linear", "staircase_r", "1.8", "0", "--output", str(tmp_path)], capsys)
    rows = read_csv(tmp_path / "sweep.csv")
    assert code == 0
    assert rows[0] == ["staircase_r", "GAINS", "THM11@r=0", "verdict", "THM11@r=1.8"]
    assert rows[1][2] == "fails" and rows[2][4] == "holds"


def test_sweep_empty_and_inapplicable(tmp_path, capsys):
    code, _, _ = run(["sweep", "opinion-ct", "d", "--output", str(tmp_path)], capsys)
    assert code == 0 and read_csv(tmp_path / "sweep.csv") == [["d"]]
    assert run(["sweep", "opinion-ct", "H", "1", "--output", str(tmp_path)], capsys)[0] != 0
    assert run(["sweep", "cs-dt2", "h", "0.1", "--output", str(tmp_path)], capsys)[0] != 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "consensus_lab", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "cs-dt2" in proc.stdout
