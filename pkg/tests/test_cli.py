import json
import subprocess
import sys
from fractions import Fraction as F
from pathlib import Path

import pytest

from misodof.cli import CURVE_HEADER, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, run

GOLDEN = Path(__file__).parent / "golden"


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bounds_json(capsys):
    code, out, _ = invoke(capsys, "bounds", "--m", "2", "--k", "3", "--alpha", "1/3,1/3,1/3")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["lambda"] == "3/2" and doc["gamma"] == "24/17"
    assert doc["outer_sum_dof"] == doc["inner_sum_dof"] == doc["optimal_sum_dof"] == "7/4"


def test_bounds_single_antenna(capsys):
    code, out, _ = invoke(capsys, "bounds", "--m", "1", "--k", "7", "--alpha", "0,0,0,0,0,0,0")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["lambda"] == "1" and doc["outer_sum_dof"] == "1"


def test_bounds_broadcast_alpha(capsys):
    _, a, _ = invoke(capsys, "bounds", "--m", "2", "--k", "3", "--alpha", "1/3")
    _, b, _ = invoke(capsys, "bounds", "--m", "2", "--k", "3", "--alpha", "1/3,1/3,1/3")
    assert a == b


def test_min_cost_target(capsys):
    code, out, _ = invoke(capsys, "min-cost", "--m", "2", "--k", "3", "--target", "7/4")
    assert code == EXIT_OK and json.loads(out) == {"cost": "1"}


def test_min_cost_max_dof(capsys):
    _, out, _ = invoke(capsys, "min-cost", "--m", "3", "--k", "5")
    doc = json.loads(out)
    assert doc["cost"] == "3" and doc["min_perfect_users"] == 3 and "note" not in doc
    _, out, _ = invoke(capsys, "min-cost", "--m", "1", "--k", "3")
    assert json.loads(out)["cost"] == "0"


def test_min_cost_target_only_for_2_3(capsys):
    code, _, err = invoke(capsys, "min-cost", "--m", "2", "--k", "4", "--target", "7/4")
    assert code == EXIT_DOMAIN and "M = 2, K = 3" in err


def test_schedule_golden(capsys):
    code, out, _ = invoke(capsys, "schedule", "--m", "2", "--k", "3", "--delta", "1/3,2/3,1")
    assert code == EXIT_OK and out == (GOLDEN / "schedule_m2k3_greedy.json").read_text()


@pytest.mark.parametrize(
    "argv, dof",
    [
        (["--scheme", "two-block", "--delta", "1/6,1/3,1/2"], "7/4"),
        (["--scheme", "delayed-4/3"], "4/3"),
        (["--scheme", "delayed-3/2"], "3/2"),
    ],
)
def test_schedule_schemes(capsys, argv, dof):
    code, out, _ = invoke(capsys, "schedule", "--m", "2", "--k", "3", *argv)
    assert code == EXIT_OK and json.loads(out)["audit"]["sum_dof"] == dof


def test_schedule_infeasible(capsys):
    code, _, err = invoke(capsys, "schedule", "--m", "2", "--k", "3", "--delta", "1/3,1/3,1/3")
    assert code == EXIT_DOMAIN and "min{M,K}" in err


def test_check_point(capsys):
    code, out, _ = invoke(capsys, "check-point", "--m", "2", "--k", "3", "--alpha", "1,1,0", "--dof", "1,1,1/10")
    assert code == EXIT_OK
    assert json.loads(out) == {"inside": False, "slack": "-1/10", "tightest_permutation": [3, 1, 2]}


def test_curve_alternating(capsys, tmp_path):
    target = tmp_path / "curve.csv"
    code, out, _ = invoke(capsys, "curve", "--m", "2", "--k", "3", "--grid", "96", "--out", str(target))
    lines = target.read_text().splitlines()
    assert code == EXIT_OK and out == ""
    assert lines[0] == CURVE_HEADER and len(lines) == 97
    for line in lines[1:]:
        delta, cost, outer, inner, optimal = line.split(",")
        assert F(cost) == 3 * F(delta)
        assert F(inner) == F(outer) == F(optimal)


def test_curve_delayed(capsys):
    code, out, _ = invoke(capsys, "curve", "--m", "2", "--k", "3", "--mode", "delayed", "--grid", "5")
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert code == EXIT_OK
    assert rows[0][:4] == ["0", "0", "3/2", "1"] and rows[0][4] == ""
    assert all(F(r[3]) <= F(r[2]) for r in rows)


def test_curve_rows_inner_below_outer(capsys):
    for m, k in [(1, 3), (2, 5), (3, 4), (4, 4)]:
        _, out, _ = invoke(capsys, "curve", "--m", str(m), "--k", str(k), "--grid", "17")
        for line in out.splitlines()[1:]:
            _, _, outer, inner, optimal = line.split(",")
            assert F(inner) <= F(outer)
            if m >= k:
                assert optimal != ""


def test_curve_delayed_needs_two_antennas(capsys):
    code, _, _ = invoke(capsys, "curve", "--m", "3", "--k", "4", "--mode", "delayed")
    assert code == EXIT_DOMAIN


def test_simulate_outputs_csv_and_fit(capsys):
    argv = ["simulate", "zf", "--m", "2", "--k", "2", "--alpha", "1", "--snr", "30:70:10", "--trials", "300",
            "--seed", "5"]
    code, out, _ = invoke(capsys, *argv)
    csv, _, fit = out.partition("\n{")
    fit = json.loads("{" + fit)
    assert code == EXIT_OK
    assert csv.splitlines()[0] == "snr_db,mean_value,stderr" and len(csv.splitlines()) == 6
    assert abs(fit["slope"] - 2) < 0.15
    _, again, _ = invoke(capsys, *argv)
    assert again == out


def test_verify_lemma2(capsys):
    code, out, _ = invoke(capsys, "verify", "lemma2", "--trials", "40", "--seed", "3")
    assert code == EXIT_OK and json.loads(out)["pass"]


def test_verify_failure_exit_code(capsys, monkeypatch):
    from misodof import numerics

    monkeypatch.setattr(numerics, "verify_lemma3", lambda trials, seed: {"check": "lemma3", "pass": False})
    code, _, _ = invoke(capsys, "verify", "lemma3", "--trials", "1", "--seed", "1")
    assert code == EXIT_VERIFY


@pytest.mark.parametrize(
    "argv",
    [
        ["bounds", "--m", "2"],
        ["nonsense"],
        ["bounds", "--m", "two", "--k", "3", "--alpha", "0"],
        ["simulate", "zf", "--m", "2", "--k", "2", "--alpha", "1"],
    ],
)
def test_usage_errors(capsys, argv):
    assert invoke(capsys, *argv)[0] == EXIT_USAGE


@pytest.mark.parametrize(
    "argv",
    [
        ["bounds", "--m", "2", "--k", "3", "--alpha", "1/3,x,1"],
        ["bounds", "--m", "2", "--k", "3", "--alpha", "1/3,1/2"],
        ["bounds", "--m", "0", "--k", "3", "--alpha", "0"],
        ["min-cost", "--m", "2", "--k", "3", "--target", "5/2"],
    ],
)
def test_domain_errors(capsys, argv):
    code, _, err = invoke(capsys, *argv)
    assert code == EXIT_DOMAIN and err


def test_config_file(capsys, tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"m": 2, "k": 3, "alpha": ["1/3", "1/3", "1/3"]}))
    _, from_file, _ = invoke(capsys, "bounds", "--config", str(conf))
    _, direct, _ = invoke(capsys, "bounds", "--m", "2", "--k", "3", "--alpha", "1/3,1/3,1/3")
    assert from_file == direct
    _, override, _ = invoke(capsys, "bounds", "--config", str(conf), "--m", "3")
    assert json.loads(override)["m"] == 3
    conf.write_text(json.dumps({"m": 2, "bogus": 1}))
    assert invoke(capsys, "bounds", "--config", str(conf))[0] == EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "misodof", "min-cost", "--m", "2", "--k", "3", "--target", "3/2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout) == {"cost": "0"}
