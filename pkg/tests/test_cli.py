import csv
import hashlib
import json
import os

import numpy as np
import pytest

from erasim.cli import (
    CSV_HEADER,
    ConfigError,
    cell_seed,
    main,
    make_placement,
    parse_config,
    read_rows,
    run_cell,
    write_rows,
)
from erasim.placement import erasure_budget, max_full_lines


GOOD_CONFIG = """\
# capacity-model smoke sweep
model = capacity
distances = 3
erasure_fractions = 0, 1
strategies = optimized
physical_error_rates = 0.02, 0.04
shots = 2000
seed = 7
output_path = {out}
"""


def write_config(tmp_path, text):
    path = tmp_path / "sweep.cfg"
    path.write_text(text)
    return str(path)


def md5(path):
    with open(path, "rb") as fh:
        return hashlib.md5(fh.read()).hexdigest()


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def test_parse_good_config(tmp_path):
    out = str(tmp_path / "r.csv")
    cfg = parse_config(write_config(tmp_path, GOOD_CONFIG.format(out=out)))
    assert cfg.distances == [3]
    assert cfg.erasure_fractions == [0.0, 1.0]
    assert cfg.strategies == ["optimized"]
    assert cfg.physical_error_rates == [0.02, 0.04]
    assert cfg.shots == 2000
    assert cfg.rounds == "auto"
    assert cfg.model == "capacity"
    assert cfg.seed == 7
    assert cfg.output_path == out


def test_parse_missing_file():
    with pytest.raises(ConfigError):
        parse_config("/nonexistent/sweep.cfg")


@pytest.mark.parametrize(
    "mutation,needle",
    [
        ("distances = 4", "distances"),
        ("distances = ", "distances"),
        ("erasure_fractions = 1.5", "erasure_fractions"),
        ("strategies = bogus", "strategies"),
        ("physical_error_rates = 0.7", "physical_error_rates"),
        ("shots = 0", "shots"),
        ("rounds = never", "invalid literal"),
        ("model = classical", "model"),
        ("basis = Y", "basis"),
        ("defect_rate = 1.0", "defect_rate"),
        ("nonsense = 1", "unknown config field"),
        ("just a line with no equals", "expected key = value"),
    ],
)
def test_parse_rejects_bad_configs(tmp_path, mutation, needle):
    text = GOOD_CONFIG.format(out=str(tmp_path / "r.csv")) + mutation + "\n"
    with pytest.raises(ConfigError, match=needle):
        parse_config(write_config(tmp_path, text))


def test_env_overrides(tmp_path, monkeypatch):
    out = str(tmp_path / "r.csv")
    path = write_config(tmp_path, GOOD_CONFIG.format(out=out))
    monkeypatch.setenv("ERASIM_SEED", "99")
    monkeypatch.setenv("ERASIM_OUTPUT_PATH", str(tmp_path / "env.csv"))
    cfg = parse_config(path)
    assert cfg.seed == 99
    assert cfg.output_path == str(tmp_path / "env.csv")


# ---------------------------------------------------------------------------
# Placement construction per strategy
# ---------------------------------------------------------------------------


def test_make_placement_strategies():
    d, f_e = 7, 0.57
    budget = erasure_budget(d, f_e)
    for strategy in ("optimized", "random", "rows", "cols", "diagonals",
                     "cross", "alternating_lines", "consecutive_lines"):
        spec = make_placement(d, f_e, strategy, seed=5)
        assert spec.d == d
        assert len(spec.placement) <= budget
    # Line strategies fit whole lines into the budget.
    rows = make_placement(d, f_e, "rows", seed=0)
    assert len(rows.placement) == (budget // d) * d
    cross = make_placement(d, f_e, "cross", seed=0)
    c = max_full_lines(d, budget)
    assert len(cross.placement) == 2 * c * d - c * c


def test_make_placement_rejects_empty_line_budget():
    with pytest.raises(ConfigError):
        make_placement(3, 0.1, "rows", seed=0)


def test_cell_seed_is_deterministic_and_decorrelated():
    k1 = ("circuit", 3, 0.5, "optimized", 1e-3, 3)
    k2 = ("circuit", 3, 0.5, "optimized", 2e-3, 3)
    assert cell_seed(7, k1) == cell_seed(7, k1)
    assert cell_seed(7, k1) != cell_seed(7, k2)
    assert cell_seed(8, k1) != cell_seed(7, k1)
    assert 0 <= cell_seed(7, k1) < 2**31 - 1


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def test_write_read_rows_sorted_and_atomic(tmp_path):
    path = str(tmp_path / "rows.csv")
    r1 = dict(zip(CSV_HEADER, ["circuit", 5, 0.5, "optimized", 0, 0.002, 5,
                               1000, 1, 2, 3, 0.01]))
    r2 = dict(zip(CSV_HEADER, ["circuit", 3, 0.5, "optimized", 0, 0.002, 3,
                               1000, 4, 5, 6, 0.02]))
    write_rows(path, [r1, r2])
    back = read_rows(path)
    assert [r["d"] for r in back] == ["3", "5"]
    assert not os.path.exists(path + ".tmp")
    assert read_rows(str(tmp_path / "missing.csv")) == []


# ---------------------------------------------------------------------------
# run_cell
# ---------------------------------------------------------------------------


def test_run_cell_capacity_basic():
    row = run_cell("capacity", 3, 1.0, "optimized", 0.05, "auto", "both", 4000, 3)
    assert row["model"] == "capacity"
    assert row["rounds"] == 1
    assert 0 < row["shots"] <= 4000
    assert row["failures_combined"] >= max(row["failures_x"], row["failures_z"]) * 0.9
    assert row["flag_rate_mean"] == pytest.approx(0.05, abs=0.01)


def test_run_cell_circuit_deterministic():
    a = run_cell("circuit", 3, 0.5, "optimized", 4e-3, 2, "Z", 3000, 11)
    b = run_cell("circuit", 3, 0.5, "optimized", 4e-3, 2, "Z", 3000, 11)
    assert a == b
    assert a["rounds"] == 2
    assert a["failures_x"] == 0  # only the measured basis is simulated


def test_run_cell_early_stop():
    # Far above threshold every shot fails; one chunk suffices.
    row = run_cell("capacity", 3, 0.0, "optimized", 0.4, "auto", "both",
                   10**7, 0)
    assert row["shots"] < 10**7


# ---------------------------------------------------------------------------
# CLI end-to-end
# ---------------------------------------------------------------------------


def test_cli_run_and_resume(tmp_path, capsys):
    out = str(tmp_path / "sweep.csv")
    cfg = write_config(tmp_path, GOOD_CONFIG.format(out=out))
    assert main(["run", "--config", cfg]) == 0
    first = md5(out)
    rows = read_rows(out)
    assert len(rows) == 4  # 2 fractions x 2 rates
    assert set(CSV_HEADER) == set(rows[0])
    # Rerunning skips all cells and leaves the file byte-identical.
    assert main(["run", "--config", cfg]) == 0
    assert md5(out) == first
    # Truncating the file and rerunning regenerates the same bytes.
    write_rows(out, rows[:2])
    assert main(["run", "--config", cfg]) == 0
    assert md5(out) == first


def test_cli_run_bad_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, "model = classical\n")
    assert main(["run", "--config", cfg]) == 2


def test_cli_fit_missing_input_exit_code(capsys):
    assert main(["fit", "--in", "/nonexistent.csv"]) == 3


def test_cli_place(tmp_path, capsys):
    out = str(tmp_path / "place.json")
    assert main(["place", "--d", "7", "--fe", "0.57", "--strategy",
                 "optimized", "--out", out]) == 0
    obj = json.loads(open(out).read())
    assert obj["d"] == 7
    assert obj["strategy"] == "optimized"
    assert len(obj["erasures"]) == erasure_budget(7, 0.57)
    # The optimized placement at this budget fills central rows and columns.
    rows = {r for r, _ in obj["erasures"]}
    assert {2, 3} <= rows


def test_cli_paths_normalization(tmp_path):
    out = str(tmp_path / "paths.csv")
    assert main(["paths", "--d", "5", "--out", out]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 25
    total = sum(float(r["importance"]) for r in rows)
    assert total == pytest.approx(5.0)


def test_cli_capacity(capsys):
    assert main(["capacity", "--d", "5", "--fe", "1.0", "--p", "0.01"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["full_lines"] == 5
    assert obj["deff_lower_bound"] > 0
    assert obj["union_bound_exact"] > 0


def test_cli_sample_writes_csv(tmp_path, capsys):
    out = str(tmp_path / "one.csv")
    assert main(["sample", "--model", "capacity", "--d", "3", "--fe", "1",
                 "--p", "0.05", "--shots", "2000", "--seed", "1",
                 "--out", out]) == 0
    rows = read_rows(out)
    assert len(rows) == 1
    assert rows[0]["model"] == "capacity"
    # Writing the same cell again does not duplicate it.
    assert main(["sample", "--model", "capacity", "--d", "3", "--fe", "1",
                 "--p", "0.05", "--shots", "2000", "--seed", "1",
                 "--out", out]) == 0
    assert len(read_rows(out)) == 1


def test_cli_fit_end_to_end(tmp_path, capsys):
    out = str(tmp_path / "cap.csv")
    cfg_text = """\
model = capacity
distances = 3, 5
erasure_fractions = 0
strategies = optimized
physical_error_rates = 0.02, 0.03, 0.045
shots = 60000
seed = 2
output_path = {out}
""".format(out=out)
    cfg = write_config(tmp_path, cfg_text)
    assert main(["run", "--config", cfg]) == 0
    fit_out = str(tmp_path / "fit.json")
    assert main(["fit", "--in", out, "--model", "capacity", "--basis",
                 "combined", "--out", fit_out]) == 0
    results = json.loads(open(fit_out).read())
    by_d = {r["d"]: r for r in results}
    assert set(by_d) == {3, 5}
    # Effective distance grows with d below threshold.
    assert by_d[5]["d_eff"] > by_d[3]["d_eff"]
    assert by_d[3]["d_eff"] == pytest.approx(2.0, abs=0.6)


def test_cli_cost_output(capsys):
    assert main(["cost", "--d", "3,5", "--fe", "0,1", "--defect-rate", "0.01",
                 "--p", "0.001", "--p-th", "0.01"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "d,f_e,n_erasure,transmons,yield"
    body = [ln.split(",") for ln in lines[1:5]]
    # d=3 f_e=1: 9 erasure sites, 27 transmons.
    row = next(r for r in body if r[0] == "3" and r[1] == "1.0")
    assert row[2] == "9" and row[3] == "27"
    assert float(row[4]) == pytest.approx(0.99**27)
    assert "p_l_upper_estimate" in out


def test_cli_correlate_small(tmp_path):
    out = str(tmp_path / "corr.json")
    assert main(["correlate", "--d", "3", "--fe", "0.5", "--p", "0.08",
                 "--placements", "50", "--shots", "1500",
                 "--model", "capacity", "--seed", "4", "--out", out]) == 0
    obj = json.loads(open(out).read())
    assert obj["placements"] == 50
    mat = np.array(obj["correlation"]["combined"])
    assert mat.shape == (3, 3)
    assert np.all(np.abs(mat) <= 1.0)
    assert len(obj["placements_list"]) == 50
