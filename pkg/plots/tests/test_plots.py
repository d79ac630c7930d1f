import json
import os
import subprocess
import sys

import pytest

from qecplots.render import (
    PlotSpec,
    SchemaError,
    read_cost_csv,
    read_sweep_csv,
    render,
    wilson_interval,
)

GOLDEN = os.path.join(os.path.dirname(__file__), "..", "golden")

KIND_INPUTS = {
    "curves": "sweep_capacity.csv",
    "placement": "sweep_strategies.csv",
    "deff": "fits.json",
    "frontier": "cost.csv",
    "scaling": "cost.csv",
    "heatmap": "correlation.json",
}


def golden(name):
    return os.path.join(GOLDEN, name)


@pytest.mark.parametrize("kind", sorted(KIND_INPUTS))
def test_each_kind_renders_and_is_pixel_deterministic(kind, tmp_path):
    paths = [str(tmp_path / f"{kind}_{i}.png") for i in (1, 2)]
    for out in paths:
        render(PlotSpec(kind=kind, infile=golden(KIND_INPUTS[kind]), out=out))
        assert os.path.getsize(out) > 1000
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        assert a.read() == b.read()


def test_empty_csv_is_an_explicit_no_data_failure(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(
        "model,d,f_e,strategy,seed,p,rounds,shots,"
        "failures_x,failures_z,failures_combined,flag_rate_mean\n"
    )
    out = str(tmp_path / "x.png")
    with pytest.raises(SchemaError, match="no data"):
        render(PlotSpec(kind="curves", infile=str(empty), out=out))
    assert not os.path.exists(out)


def test_schema_mismatch_names_the_missing_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("d,p,shots\n3,0.01,100\n")
    with pytest.raises(SchemaError, match="f_e"):
        read_sweep_csv(str(bad))


def test_cost_without_projections_fails_frontier(tmp_path):
    cost_only = tmp_path / "cost.csv"
    cost_only.write_text("d,f_e,n_erasure,transmons,yield\n3,0,0,9,0.99\n")
    with pytest.raises(SchemaError, match="no data"):
        render(PlotSpec(kind="frontier", infile=str(cost_only),
                        out=str(tmp_path / "x.png")))
    # The cost-only section itself still parses.
    cost, proj = read_cost_csv(str(cost_only))
    assert len(cost) == 1 and proj == []


def test_heatmap_shape_mismatch_reported(tmp_path):
    bad = tmp_path / "corr.json"
    bad.write_text(json.dumps({
        "d": 3,
        "correlation": {b: [[0.0, 0.0], [0.0, 0.0]] for b in ("Z", "X", "combined")},
        "degenerate_sites": [[False] * 3 for _ in range(3)],
    }))
    with pytest.raises(SchemaError, match="shape"):
        render(PlotSpec(kind="heatmap", infile=str(bad), out=str(tmp_path / "x.png")))


def test_unknown_kind_rejected():
    with pytest.raises(SchemaError, match="unknown plot kind"):
        PlotSpec(kind="pie", infile="x.csv", out="x.png")


def test_wilson_interval_reference_values():
    lo, hi = wilson_interval(5, 100)
    assert lo == pytest.approx(0.0215, abs=2e-3)
    assert hi == pytest.approx(0.1118, abs=2e-3)
    lo0, hi0 = wilson_interval(0, 100)
    assert lo0 == pytest.approx(0.0, abs=1e-9)


def test_cli_end_to_end(tmp_path):
    out = str(tmp_path / "curves.png")
    proc = subprocess.run(
        [sys.executable, "-m", "qecplots.cli", "curves",
         "--in", golden("sweep_capacity.csv"), "--out", out],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert os.path.getsize(out) > 1000

    proc = subprocess.run(
        [sys.executable, "-m", "qecplots.cli", "curves",
         "--in", str(tmp_path / "missing.csv"), "--out", out],
        capture_output=True, text=True,
    )
    assert proc.returncode == 3
    assert "not found" in proc.stderr
