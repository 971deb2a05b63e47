import json
import os
from typing import Dict, List, Tuple

from utils.logger import logger

RunKey = Tuple[str, int, str, int, int]


def record_key(record: Dict) -> RunKey:
    return (
        str(record["size"]),
        int(record["demand"]),
        str(record["controller"]),
        int(record["rep"]),
        int(record["seed"]),
    )


class RunStore:
    """Append-only JSON-lines journal of finished runs, so a matrix can resume"""

    def __init__(self, storage_path: str):
        self.storage_path = storage_path
        os.makedirs(os.path.dirname(storage_path) or ".", exist_ok=True)
        self.records = self._load_records()
        logger.info(f"Run store at {storage_path} ({len(self.records)} records)")

    def _load_records(self) -> Dict[RunKey, Dict]:
        """Load finished runs from storage"""
        records: Dict[RunKey, Dict] = {}
        if not os.path.exists(self.storage_path):
            return records

        with open(self.storage_path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    records[record_key(record)] = record
                except Exception as e:
                    # a run killed mid-write leaves a torn last line
                    logger.error(f"Skipping unreadable run record on line {number}: {e}")
        return records

    def append(self, record: Dict) -> None:
        """Journal one run as soon as it finishes"""
        try:
            with open(self.storage_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record, sort_keys=True) + "\n")
                f.flush()
            self.records[record_key(record)] = record
        except Exception as e:
            logger.error(f"Error saving run record: {e}")
            raise

    def has(self, key: RunKey) -> bool:
        return key in self.records

    def clear(self) -> None:
        if os.path.exists(self.storage_path):
            os.remove(self.storage_path)
        self.records = {}
        logger.info(f"Cleared run store {self.storage_path}")

    def all_records(self) -> List[Dict]:
        return [self.records[key] for key in sorted(self.records)]

    def get_stats(self) -> Dict:
        """Counts of journaled runs by status"""
        by_status: Dict[str, int] = {}
        for record in self.records.values():
            by_status[record["status"]] = by_status.get(record["status"], 0) + 1
        return {"total": len(self.records), "by_status": by_status}
