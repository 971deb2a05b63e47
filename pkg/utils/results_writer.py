import json
import math
import os
from typing import Dict, List, Optional

import pandas as pd

from utils.logger import logger

RUN_COLUMNS = [
    "size",
    "demand",
    "controller",
    "rep",
    "seed",
    "status",
    "arrivals",
    "exits",
    "throughput",
    "failure_time",
    "window_throughput",
    "exits_within_window",
    "last_exit_time",
    "impounded",
    "stranded",
    "end_time",
    "error",
]

FLOAT_FORMAT = "%.6f"


class ResultsWriter:
    """Writes run tables and summaries as CSV/JSON under one output directory"""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def write_runs(self, runs: pd.DataFrame, name: str = "runs.csv") -> str:
        """One row per run, canonical column order"""
        frame = runs.reindex(columns=RUN_COLUMNS)
        target = self.path(name)
        frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info(f"Wrote {len(frame)} runs to {target}")
        return target

    def write_summary(self, summary: pd.DataFrame, name: str = "summary") -> Dict[str, str]:
        """summary.csv for spreadsheets plus summary.json for scripts"""
        csv_path = self.path(f"{name}.csv")
        json_path = self.path(f"{name}.json")
        summary.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

        rows = [
            {key: _plain(value) for key, value in row.items()}
            for row in summary.to_dict(orient="records")
        ]
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(rows, f, indent=2, sort_keys=True)
            f.write("\n")

        logger.info(f"Wrote summary of {len(summary)} cells to {csv_path}")
        return {"csv": csv_path, "json": json_path}

    def write_events(self, ndjson: str, name: str = "events.ndjson") -> str:
        target = self.path(name)
        with open(target, "w", encoding="utf-8") as f:
            f.write(ndjson)
        return target

    def read_runs(self, name: str = "runs.csv") -> pd.DataFrame:
        return pd.read_csv(self.path(name))


def records_frame(records: List[Dict]) -> pd.DataFrame:
    return pd.DataFrame.from_records(records, columns=RUN_COLUMNS)


def _plain(value) -> Optional[object]:
    """JSON-safe scalar: numpy types unwrapped, NaN as null, floats rounded like the CSV"""
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float):
        if math.isnan(value):
            return None
        return round(value, 6)
    return value
