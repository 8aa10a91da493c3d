import csv
import json

import numpy as np
import pytest

from platoon_fdi.engine import run_scenario
from platoon_fdi.export import PLOT_STUB, ExportError, export_traces, trace_tables
from platoon_fdi.presets import get_preset

from conftest import shorten

CSVS = ["states.csv", "residuals.csv", "gains.csv", "controls.csv", "attacker.csv"]


@pytest.fixture(scope="module")
def short_result():
    return run_scenario(shorten(get_preset("scenario3"), horizon=2.0, sample_period=0.1))


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_files_and_manifest(tmp_path, short_result):
    man = export_traces(short_result, tmp_path, figures=True)
    names = [f["name"] for f in man["files"]]
    for n in CSVS + ["config.yaml", "metadata.json", PLOT_STUB, "positions.png", "residuals.png"]:
        assert n in names and (tmp_path / n).exists()
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["hash"] == short_result.digest
    assert on_disk["gains_provenance"]["K"] == "override"
    assert on_disk["gains"]["K"] == [-0.7, -1.2, -0.05]
    # manifest is written last
    last = (tmp_path / "manifest.json").stat().st_mtime_ns
    assert all(p.stat().st_mtime_ns <= last for p in tmp_path.iterdir())
    assert "manifest.json" not in names


def test_csv_schema(tmp_path, short_result):
    export_traces(short_result, tmp_path, figures=False)
    states = read(tmp_path / "states.csv")
    assert list(states[0]) == ["t", "vehicle", "p", "v", "a"]
    assert len(states) == len(short_result.t) * 5
    assert float(states[5]["t"]) == pytest.approx(0.1) and states[5]["vehicle"] == "0"
    res = read(tmp_path / "residuals.csv")
    assert {r["vehicle"] for r in res} == {"1", "2", "3", "4"}
    assert float(res[-1]["r"]) == short_result.residuals[-1, 3]
    assert list(read(tmp_path / "attacker.csv")[0]) == ["t", "p", "v", "a"]


def test_reexport_byte_identical(tmp_path, short_result):
    export_traces(short_result, tmp_path / "a", figures=True)
    export_traces(short_result, tmp_path / "b", figures=True)
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


def test_plot_stub_runs(tmp_path, short_result):
    import runpy
    import sys

    export_traces(short_result, tmp_path, figures=False)
    argv = sys.argv
    sys.argv = [PLOT_STUB, str(tmp_path)]
    try:
        runpy.run_path(str(tmp_path / PLOT_STUB), run_name="__main__")
    finally:
        sys.argv = argv
    assert (tmp_path / "velocities.png").stat().st_size > 0


def test_export_errors(tmp_path, short_result):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ExportError):
        export_traces(short_result, blocker / "sub", figures=False)


def test_scenario1_residual_tail(tmp_path, run_cache):
    res = run_cache.get("scenario1")
    export_traces(res, tmp_path, figures=False)
    rows = read(tmp_path / "residuals.csv")
    t_end = float(rows[-1]["t"])
    tail = [float(r["r"]) for r in rows if float(r["t"]) >= t_end - 20.0 - 1e-9]
    assert tail and max(tail) < 1e-3


def test_tables_use_round_trip_floats(short_result):
    tables = trace_tables(short_result)
    line = tables["gains.csv"].splitlines()[-1].split(",")
    assert float(line[2]) == short_result.e[-1, -1]
    assert np.isfinite(float(line[0]))
