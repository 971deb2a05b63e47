import os
import zlib
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from core.config import ScenarioMatrix, SimConfig
from core.engine import RunOutcome, RunStatus, run
from utils.logger import logger
from utils.results_writer import ResultsWriter, records_frame
from utils.run_store import RunStore, record_key

CELL_KEY = ["size", "demand", "controller"]


@dataclass(frozen=True)
class RunTask:
    size: str
    layout: str
    demand: int
    controller: str
    rep: int
    seed: int
    window_seconds: float
    sim: Dict[str, Any]

    @property
    def key(self):
        return (self.size, self.demand, self.controller, self.rep, self.seed)


@dataclass
class RunRecord:
    size: str
    demand: int
    controller: str
    rep: int
    seed: int
    status: str
    arrivals: int = 0
    exits: int = 0
    throughput: Optional[float] = None
    failure_time: Optional[float] = None
    window_throughput: Optional[float] = None
    exits_within_window: int = 0
    last_exit_time: Optional[float] = None
    impounded: int = 0
    stranded: int = 0
    end_time: Optional[float] = None
    error: Optional[str] = None


def throughput(outcome: RunOutcome) -> float:
    """Vehicles per hour up to the last exit; only defined for completed runs"""
    if outcome.status != RunStatus.COMPLETED:
        raise ValueError(f"throughput is undefined for a {outcome.status.value} run")
    if outcome.exited_count == 0 or not outcome.last_exit_time:
        return 0.0
    return outcome.exited_count / (outcome.last_exit_time / 3600.0)


def window_throughput(outcome: RunOutcome) -> float:
    """Exits inside the arrival window per window hour"""
    if outcome.window_seconds <= 0:
        raise ValueError("outcome carries no arrival window")
    return outcome.exits_within_window / (outcome.window_seconds / 3600.0)


def failure_rate(outcomes: Sequence[Any]) -> float:
    """Share of runs that ended in a facility failure; accepts outcomes, records or statuses"""
    if not outcomes:
        raise ValueError("failure_rate needs at least one run")
    failed = sum(1 for o in outcomes if _status_of(o) == RunStatus.FACILITY_FAILURE.value)
    return failed / len(outcomes)


def _status_of(item: Any) -> str:
    status = getattr(item, "status", item)
    if isinstance(item, dict):
        status = item["status"]
    return status.value if isinstance(status, RunStatus) else str(status)


def derive_run_seed(base_seed: int, size: str, demand: int, rep: int) -> int:
    """Seed shared by both controllers of one (size, demand, replication)"""
    sequence = np.random.SeedSequence(
        int(base_seed), spawn_key=(zlib.crc32(str(size).encode("utf-8")), int(demand), int(rep))
    )
    # kept below 2**63 so the seed column stays a plain int64
    return int(sequence.generate_state(1, dtype=np.uint64)[0]) & ((1 << 63) - 1)


def matrix_tasks(matrix: ScenarioMatrix) -> List[RunTask]:
    tasks = []
    for size in matrix.sizes:
        for demand in matrix.demands[size]:
            for rep in range(matrix.replications):
                seed = derive_run_seed(matrix.base_seed, size, demand, rep)
                for controller in matrix.controllers:
                    tasks.append(
                        RunTask(
                            size=size,
                            layout=matrix.layout_ref(size),
                            demand=demand,
                            controller=controller,
                            rep=rep,
                            seed=seed,
                            window_seconds=matrix.window_hours * 3600.0,
                            sim=dict(matrix.sim),
                        )
                    )
    return sorted(tasks, key=lambda task: task.key)


def fill_record(record: RunRecord, outcome: RunOutcome) -> RunRecord:
    """Copy an outcome into its run record, deriving the throughput columns"""
    record.status = outcome.status.value
    record.arrivals = outcome.arrivals
    record.exits = outcome.exited_count
    record.failure_time = outcome.failure_time
    record.exits_within_window = outcome.exits_within_window
    record.last_exit_time = outcome.last_exit_time
    record.impounded = outcome.impounded_count
    record.stranded = outcome.stranded_count
    record.end_time = outcome.end_time
    if outcome.status == RunStatus.COMPLETED:
        record.throughput = throughput(outcome)
        record.window_throughput = window_throughput(outcome)
    return record


def run_task(task: RunTask) -> Dict[str, Any]:
    """Run one matrix cell replication; any exception becomes an Error record"""
    record = RunRecord(
        size=task.size,
        demand=task.demand,
        controller=task.controller,
        rep=task.rep,
        seed=task.seed,
        status=RunStatus.ERROR.value,
    )
    try:
        config = SimConfig(
            layout=task.layout,
            controller=task.controller,
            demand=task.demand,
            seed=task.seed,
            window_seconds=task.window_seconds,
            **task.sim,
        )
        fill_record(record, run(config))
    except Exception as e:
        logger.error(
            f"Run {task.size}/{task.demand}/{task.controller}/rep {task.rep} failed: {e!r}"
        )
        record.error = f"{type(e).__name__}: {e}"
    return asdict(record)


def aggregate(runs: pd.DataFrame) -> pd.DataFrame:
    """
    Per (size, demand, controller) statistics.

    Throughput means and sds use completed runs only. The paired delta
    (orchestrated - isolated, same seed) is computed over replications where
    both controllers completed and is repeated on both controller rows.
    """
    columns = [
        "size", "demand", "controller", "runs", "completed", "failures", "timecaps", "errors",
        "failure_rate", "throughput_mean", "throughput_sd", "window_throughput_mean",
        "delta_mean", "delta_sd", "delta_n",
    ]
    if runs.empty:
        return pd.DataFrame(columns=columns)

    rows = []
    for (size, demand, controller), cell in runs.groupby(CELL_KEY, sort=True):
        done = cell[cell["status"] == RunStatus.COMPLETED.value]
        rows.append(
            {
                "size": size,
                "demand": int(demand),
                "controller": controller,
                "runs": len(cell),
                "completed": len(done),
                "failures": int((cell["status"] == RunStatus.FACILITY_FAILURE.value).sum()),
                "timecaps": int((cell["status"] == RunStatus.TIME_CAP.value).sum()),
                "errors": int((cell["status"] == RunStatus.ERROR.value).sum()),
                "failure_rate": failure_rate(cell["status"].tolist()),
                "throughput_mean": done["throughput"].astype(float).mean() if len(done) else np.nan,
                "throughput_sd": done["throughput"].astype(float).std() if len(done) > 1 else np.nan,
                "window_throughput_mean": (
                    done["window_throughput"].astype(float).mean() if len(done) else np.nan
                ),
            }
        )
    summary = pd.DataFrame(rows)

    deltas = paired_deltas(runs)
    if deltas.empty:
        summary = summary.assign(delta_mean=np.nan, delta_sd=np.nan, delta_n=0)
    else:
        summary = summary.merge(deltas, on=["size", "demand"], how="left")
    summary["delta_n"] = summary["delta_n"].fillna(0).astype(int)
    return summary.reindex(columns=columns)


def paired_deltas(runs: pd.DataFrame) -> pd.DataFrame:
    done = runs[runs["status"] == RunStatus.COMPLETED.value]
    columns = ["size", "demand", "delta_mean", "delta_sd", "delta_n"]
    if done.empty:
        return pd.DataFrame(columns=columns)
    done = done.assign(throughput=done["throughput"].astype(float))
    pivot = done.pivot_table(
        index=["size", "demand", "rep"], columns="controller", values="throughput", aggfunc="first"
    )
    rows = []
    if {"orchestrated", "isolated"} <= set(pivot.columns):
        paired = (pivot["orchestrated"] - pivot["isolated"]).dropna()
        for (size, demand), delta in paired.groupby(level=["size", "demand"], sort=True):
            rows.append(
                {
                    "size": size,
                    "demand": int(demand),
                    "delta_mean": float(delta.mean()),
                    "delta_sd": float(delta.std()) if len(delta) > 1 else np.nan,
                    "delta_n": int(len(delta)),
                }
            )
    return pd.DataFrame(rows, columns=columns)


@dataclass
class MatrixResult:
    runs: pd.DataFrame
    summary: pd.DataFrame
    paths: Dict[str, str]


def run_matrix(
    matrix: ScenarioMatrix, out_dir: str, resume: bool = True, journal: str = "runs.jsonl"
) -> MatrixResult:
    """
    Execute every (size, demand, controller, replication) run.

    Finished runs are journaled one by one so an interrupted matrix keeps its work and
    resumes where it stopped. runs.csv and summary.csv are rewritten in canonical order.
    """
    writer = ResultsWriter(out_dir)
    store = RunStore(os.path.join(out_dir, journal))
    if not resume:
        store.clear()

    tasks = matrix_tasks(matrix)
    pending = [task for task in tasks if not store.has(task.key)]
    logger.info(
        f"Matrix: {len(tasks)} runs, {len(tasks) - len(pending)} already journaled, "
        f"{matrix.workers} worker(s)"
    )

    for done, record in enumerate(_execute(pending, matrix.workers), start=1):
        store.append(record)
        if done % 10 == 0 or done == len(pending):
            logger.info(f"Matrix progress: {done}/{len(pending)}")

    wanted = {task.key for task in tasks}
    records = [r for r in store.all_records() if record_key(r) in wanted]
    runs = records_frame(records).sort_values(["size", "demand", "controller", "rep"], kind="mergesort")
    runs = runs.reset_index(drop=True)
    summary = aggregate(runs)

    paths = {"runs": writer.write_runs(runs)}
    paths.update(writer.write_summary(summary))
    paths["journal"] = store.storage_path
    return MatrixResult(runs=runs, summary=summary, paths=paths)


def _execute(tasks: List[RunTask], workers: int) -> Iterable[Dict[str, Any]]:
    if workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            yield run_task(task)
        return

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(run_task, task): task for task in tasks}
        for future in as_completed(futures):
            task = futures[future]
            try:
                yield future.result()
            except Exception as e:
                logger.error(f"Worker crashed on {task.key}: {e!r}")
                yield asdict(
                    RunRecord(
                        size=task.size,
                        demand=task.demand,
                        controller=task.controller,
                        rep=task.rep,
                        seed=task.seed,
                        status=RunStatus.ERROR.value,
                        error=repr(e),
                    )
                )


@dataclass(frozen=True)
class TargetCheck:
    name: str
    passed: bool
    detail: str


def check_directional_targets(summary: pd.DataFrame) -> List[TargetCheck]:
    """Qualitative comparisons between the controllers; magnitudes are reported, not enforced"""
    checks: List[TargetCheck] = []
    orchestrated = summary[summary["controller"] == "orchestrated"]

    for _, row in orchestrated.iterrows():
        delta = row["delta_mean"]
        passed = bool(pd.notna(delta) and delta > 0)
        checks.append(
            TargetCheck(
                name=f"throughput {row['size']}/{row['demand']}",
                passed=passed,
                detail=f"paired delta {delta:.3f} veh/h over {row['delta_n']} pairs"
                if pd.notna(delta)
                else "no paired completed runs",
            )
        )

    for size, cells in summary.groupby("size", sort=True):
        demands = sorted(cells["demand"].unique())
        if len(demands) < 2:
            continue
        medium, high = demands[-2], demands[-1]
        rise = {}
        for controller in ("orchestrated", "isolated"):
            rates = cells[cells["controller"] == controller].set_index("demand")["failure_rate"]
            if medium in rates.index and high in rates.index:
                rise[controller] = float(rates[high] - rates[medium])
        if len(rise) == 2:
            checks.append(
                TargetCheck(
                    name=f"failure curve {size}",
                    passed=rise["isolated"] > rise["orchestrated"],
                    detail=(
                        f"isolated +{rise['isolated'] * 100:.1f} pp vs "
                        f"orchestrated +{rise['orchestrated'] * 100:.1f} pp"
                    ),
                )
            )

    deltas = orchestrated["delta_mean"].dropna()
    if len(deltas):
        overall = float(deltas.mean())
        checks.append(
            TargetCheck(
                name="throughput magnitude",
                passed=0 < overall <= 10,
                detail=f"mean paired delta {overall:.3f} veh/h",
            )
        )
    return checks
