import csv
import json

import pytest

from index_coding import config
from index_coding.data_manager import database
from index_coding.data_manager.scheduler import SimulationConfigError
from index_coding.modules.code_actions import ActionOptions
from index_coding.sweep_controller import (
    ExperimentConfig,
    SweepController,
    build_simulation,
    output_path,
    write_csv,
)


def test_from_dict_defaults():
    exp = ExperimentConfig.from_dict({"rates": [0.1, 0.2]})
    assert exp.workload == "three-user"
    assert exp.algorithms == ("mw2", "uncoded")
    assert exp.options == ActionOptions()
    assert exp.frames == config.DEFAULT_FRAMES


def test_from_dict_action_options():
    exp = ExperimentConfig.from_dict({"rates": [0.1], "action_kinds": "cycle", "max_cycle_len": 2, "relay_mode": True})
    assert exp.options.kinds == frozenset({"direct", "cycle"})
    assert exp.options.max_cycle_len == 2
    assert exp.options.relay_mode


@pytest.mark.parametrize("data", [
    {},
    {"rates": [0.2, 0.1]},
    {"rates": [0.1], "seeds": []},
    {"rates": [0.1], "frames": 0},
    {"rates": [0.1], "algorithms": ["mw9"]},
])
def test_invalid_experiments(data):
    with pytest.raises(SimulationConfigError):
        ExperimentConfig.from_dict(data)


def test_from_json_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SimulationConfigError):
        ExperimentConfig.from_json(bad)
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(SimulationConfigError):
        ExperimentConfig.from_json(listing)


def test_build_simulation_scales_per_user_rate():
    sim = build_simulation("three-user", 0.4, "mw2", 10, 0, ActionOptions())
    assert sim.spec.rates == pytest.approx([0.1] * 12)
    assert sim.action_set.has_templates
    assert sim.label == 0.4


def test_job_order_and_rho_grid():
    exp = ExperimentConfig(algorithms=("mw2", "uncoded"), rates=(0.1, 0.2), seeds=(0, 1), frames=10)
    jobs = SweepController(exp).jobs()
    assert [(j.algorithm, j.rate, j.seed) for j in jobs[:4]] == [
        ("mw2", 0.1, 0), ("mw2", 0.1, 1), ("mw2", 0.2, 0), ("mw2", 0.2, 1),
    ]
    assert len(jobs) == 8

    rho = SweepController(ExperimentConfig(rho_sweep=(0.5, 1.0), frames=10))
    grid = rho.rate_grid()
    assert grid[1] == pytest.approx(4 / 7, abs=2 * config.BISECTION_TOLERANCE)
    assert grid[0] == pytest.approx(grid[1] / 2)


def test_run_writes_csv_and_db(tmp_path):
    exp = ExperimentConfig(algorithms=("mw2", "uncoded"), rates=(0.1, 0.2), seeds=(0,), frames=200,
                           out=str(tmp_path / "sweep.csv"))
    db_file = tmp_path / "runs.db"
    controller = SweepController(exp, db_file=db_file)
    results = controller.run()
    assert len(results) == 4
    assert controller.get_results() == results

    path = write_csv(results, exp.out)
    lines = path.read_text().splitlines()
    assert lines[0] == config.CSV_HEADER
    assert len(lines) == 5
    assert lines[1].startswith("0.1,mw2,0,200,")

    write_csv(results[:1], exp.out)
    lines = path.read_text().splitlines()
    assert len(lines) == 6
    assert lines.count(config.CSV_HEADER) == 1
    assert len(database.get_runs(db_file)) == 4

    with path.open(newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == config.CSV_COLUMNS
    assert all(len(row) == len(config.CSV_COLUMNS) for row in rows)
    assert [row[5] for row in rows[1:5]] == [config.fmt_float(s.total_qr_ratio) for s in results]
    stored = database.get_runs(db_file, "mw2")
    assert [run["max_qr_ratio"] for run in stored] == [s.total_qr_ratio for s in results if s.algorithm == "mw2"]


def test_parallel_run_matches_serial(tmp_path):
    exp = ExperimentConfig(algorithms=("mw2",), rates=(0.2, 0.3), seeds=(1,), frames=300)
    serial = SweepController(exp).run()
    parallel = SweepController(exp, workers=2).run()
    assert [s.csv_row() for s in serial] == [p.csv_row() for p in parallel]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(config.OUTPUT_DIR_ENV, str(tmp_path))
    assert output_path("results/a.csv") == tmp_path / "results" / "a.csv"
    assert output_path(tmp_path / "b.csv") == tmp_path / "b.csv"


def test_from_json_round_trip(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"rates": [0.3], "algorithms": ["mw1"], "seeds": [4], "frames": 5}))
    exp = ExperimentConfig.from_json(path)
    assert exp.algorithms == ("mw1",) and exp.seeds == (4,) and exp.frames == 5
