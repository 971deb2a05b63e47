import json

import pandas as pd
import pytest

from core.yard import serialize_layout
from main import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main


def test_run_writes_results_and_events(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(
        [
            "run", "--layout", "small", "--controller", "isolated",
            "--demand", "3", "--seed", "42", "--window-hours", "0.5", "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    runs = pd.read_csv(out / "runs.csv")
    assert list(runs["seed"]) == [42]
    assert runs.loc[0, "controller"] == "isolated"
    events = (out / "events.ndjson").read_text(encoding="utf-8").splitlines()
    assert all(json.loads(line)["kind"] for line in events)
    assert not (out / "summary.csv").exists()
    assert "RUN 0" in capsys.readouterr().out


def test_run_with_replications(tmp_path):
    out = tmp_path / "reps"
    code = main(["run", "--layout", "small", "--demand", "0", "--seed", "5", "--reps", "2", "--out", str(out)])
    assert code == EXIT_OK
    runs = pd.read_csv(out / "runs.csv")
    assert list(runs["rep"]) == [0, 1]
    assert runs["seed"].nunique() == 2
    assert (out / "events_rep1.ndjson").exists()
    summary = pd.read_csv(out / "summary.csv")
    assert len(summary) == 1
    assert summary.loc[0, "runs"] == 2
    assert (out / "summary.json").exists()


def test_run_from_scenario_file(tmp_path, row_layout):
    layout_path = tmp_path / "row.txt"
    layout_path.write_text(serialize_layout(row_layout), encoding="utf-8")
    scenario = tmp_path / "scenario.json"
    scenario.write_text(
        json.dumps(
            {
                "layout": str(layout_path),
                "controller": "orchestrated",
                "arrival_times": [0.0],
                "prefilled_berths": {kind: 1 for kind in ("charging", "inspection", "cleaning", "loading", "parking")},
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "scripted"
    assert main(["run", "--config", str(scenario), "--out", str(out)]) == EXIT_OK
    runs = pd.read_csv(out / "runs.csv")
    assert runs.loc[0, "status"] == "FacilityFailure"
    assert runs.loc[0, "failure_time"] == 0.0


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--layout", "/nowhere/yard.txt"],
        ["run", "--layout", "small", "--demand", "-4"],
        ["matrix", "--config", "/nowhere/matrix.json"],
    ],
)
def test_configuration_errors_exit_2(argv):
    assert main(argv) == EXIT_CONFIG


def test_unknown_scenario_key_exits_2(tmp_path):
    config = tmp_path / "matrix.json"
    config.write_text(json.dumps({"sizes": ["small"], "turbo": True}), encoding="utf-8")
    assert main(["matrix", "--config", str(config), "--out", str(tmp_path / "m")]) == EXIT_CONFIG


def test_matrix_command(tmp_path, capsys):
    config = tmp_path / "matrix.json"
    config.write_text(
        json.dumps({"sizes": ["small"], "demands": {"small": [0]}, "window_hours": 0.5}),
        encoding="utf-8",
    )
    out = tmp_path / "matrix"
    code = main(["matrix", "--config", str(config), "--reps", "1", "--seed", "9", "--out", str(out)])
    assert code == EXIT_OK
    assert len(pd.read_csv(out / "runs.csv")) == 2
    assert (out / "summary.csv").exists() and (out / "summary.json").exists()
    assert "MATRIX SUMMARY" in capsys.readouterr().out


def test_validate_command(tmp_path, row_layout):
    good = tmp_path / "good.txt"
    good.write_text(serialize_layout(row_layout), encoding="utf-8")
    assert main(["validate", "--layout", str(good)]) == EXIT_OK

    bad = tmp_path / "bad.txt"
    bad.write_text("#CIWLP#\nEciw#lpX\n", encoding="utf-8")
    assert main(["validate", "--layout", str(bad)]) == EXIT_FAILED

    assert main(["validate", "--layout", str(tmp_path / "missing.txt")]) == EXIT_CONFIG


def test_oracle_command(tmp_path):
    scenario = tmp_path / "oracle.json"
    scenario.write_text(
        json.dumps({"seed": 4, "exhaustive_assignment": False, "replan_cases": 20, "path_cases": 20}),
        encoding="utf-8",
    )
    assert main(["oracle", "--scenario", str(scenario)]) == EXIT_OK


def test_reps_must_be_positive():
    with pytest.raises(SystemExit) as info:
        main(["run", "--reps", "0"])
    assert info.value.code == 2
