import json

import numpy as np
import pandas as pd

from utils.helpers import format_duration, format_run_preview, format_summary_table, get_status_emoji
from utils.results_writer import RUN_COLUMNS, ResultsWriter, records_frame
from utils.run_store import RunStore, record_key


def record(rep=0, status="Completed", **extra):
    base = {
        "size": "small",
        "demand": 60,
        "controller": "orchestrated",
        "rep": rep,
        "seed": 11,
        "status": status,
        "arrivals": 3,
        "exits": 3,
        "throughput": 1.5,
        "failure_time": None,
        "window_throughput": 0.6,
        "exits_within_window": 3,
        "last_exit_time": 7200.0,
        "impounded": 0,
        "stranded": 0,
        "end_time": 7200.0,
        "error": None,
    }
    base.update(extra)
    return base


def test_run_store_round_trip(tmp_path):
    path = tmp_path / "journal" / "runs.jsonl"
    store = RunStore(str(path))
    store.append(record(1))
    store.append(record(0, status="FacilityFailure"))

    reopened = RunStore(str(path))
    assert [r["rep"] for r in reopened.all_records()] == [0, 1]
    assert reopened.has(record_key(record(1)))
    assert reopened.get_stats()["by_status"] == {"Completed": 1, "FacilityFailure": 1}


def test_run_store_skips_torn_lines(tmp_path):
    path = tmp_path / "runs.jsonl"
    path.write_text(json.dumps(record(0)) + "\n{\"size\": \"sm", encoding="utf-8")
    store = RunStore(str(path))
    assert store.get_stats()["total"] == 1
    store.clear()
    assert not path.exists()
    assert store.get_stats()["total"] == 0


def test_writer_keeps_column_order(tmp_path):
    writer = ResultsWriter(str(tmp_path))
    target = writer.write_runs(records_frame([record(0), record(1)]))
    header = open(target, encoding="utf-8").readline().strip().split(",")
    assert header == RUN_COLUMNS
    assert len(writer.read_runs()) == 2


def test_summary_json_uses_null_for_missing(tmp_path):
    writer = ResultsWriter(str(tmp_path))
    summary = pd.DataFrame([{"size": "small", "demand": np.int64(60), "throughput_sd": np.nan, "x": 1.23456789}])
    paths = writer.write_summary(summary)
    rows = json.loads(open(paths["json"], encoding="utf-8").read())
    assert rows == [{"demand": 60, "size": "small", "throughput_sd": None, "x": 1.234568}]


def test_events_file(tmp_path):
    writer = ResultsWriter(str(tmp_path))
    path = writer.write_events('{"kind":"spawned"}\n')
    assert open(path, encoding="utf-8").read() == '{"kind":"spawned"}\n'


def test_console_formatting():
    assert format_duration(3725) == "1:02:05"
    assert format_duration(None) == "-"
    assert get_status_emoji("FacilityFailure") == "🛑"
    preview = format_run_preview(record(0), "small")
    assert "COMPLETED" in preview and "1.50 veh/h" in preview
    table = format_summary_table(
        pd.DataFrame(
            [
                {
                    "size": "small",
                    "demand": 60,
                    "controller": "isolated",
                    "runs": 2,
                    "failure_rate": 0.5,
                    "throughput_mean": 9.5,
                    "throughput_sd": np.nan,
                    "delta_mean": 1.25,
                }
            ]
        )
    )
    assert "MATRIX SUMMARY" in table and "50.0" in table and "1.250" in table
