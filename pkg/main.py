#!/usr/bin/env python3
"""
Marshaling Yard Simulator
Command-line entry point: single runs, the Monte Carlo matrix, layout validation and oracles
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from core.config import ScenarioMatrix, SimConfig, load_json_config, settings
from core.engine import run
from core.experiment import (
    RunRecord,
    aggregate,
    check_directional_targets,
    derive_run_seed,
    fill_record,
    run_matrix,
)
from core.oracle import OracleScenario, run_oracle
from core.yard import LayoutError, parse_layout
from utils.helpers import (
    format_checks,
    format_run_preview,
    format_summary_table,
    get_status_emoji,
    truncate_text,
)
from utils.logger import logger
from utils.results_writer import ResultsWriter, records_frame

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


class YardConsole:
    """Runs the subcommands and prints their results"""

    def run_single(self, args: argparse.Namespace) -> int:
        base: Dict[str, Any] = {}
        if args.config:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        overrides = {
            "layout": args.layout,
            "controller": args.controller,
            "demand": args.demand,
            "seed": args.seed,
            "window_seconds": args.window_hours * 3600 if args.window_hours is not None else None,
        }
        base.update({key: value for key, value in overrides.items() if value is not None})
        base.setdefault("layout", "small")
        config = SimConfig.model_validate(base)

        writer = ResultsWriter(args.out) if args.out else None
        records: List[Dict[str, Any]] = []
        for rep in range(args.reps):
            seed = config.seed
            if args.reps > 1:
                seed = derive_run_seed(config.seed, config.layout.name, int(config.demand), rep)
            rep_config = config.model_copy(update={"seed": seed})

            logger.info(
                f"Run {rep + 1}/{args.reps}: {config.controller} on {config.layout.name}, "
                f"demand {config.demand:g}, seed {seed}"
            )
            outcome = run(rep_config)
            record = asdict(
                fill_record(
                    RunRecord(
                        size=config.layout.name,
                        demand=int(config.demand),
                        controller=config.controller,
                        rep=rep,
                        seed=seed,
                        status=outcome.status.value,
                    ),
                    outcome,
                )
            )
            records.append(record)
            print(format_run_preview(record, config.layout.name))

            if writer:
                name = "events.ndjson" if args.reps == 1 else f"events_rep{rep}.ndjson"
                writer.write_events(outcome.events_ndjson(), name=name)

        if writer:
            frame = records_frame(records)
            path = writer.write_runs(frame)
            print(f"\n📄 Results written to {path}")
            if args.reps > 1:
                for label, summary_path in writer.write_summary(aggregate(frame)).items():
                    print(f"📄 {label}: {summary_path}")
        return EXIT_OK

    def run_matrix(self, args: argparse.Namespace) -> int:
        matrix = load_json_config(args.config, ScenarioMatrix) if args.config else ScenarioMatrix()
        updates = {
            "replications": args.reps,
            "base_seed": args.seed,
            "workers": args.workers,
        }
        updates = {key: value for key, value in updates.items() if value is not None}
        if updates:
            matrix = ScenarioMatrix.model_validate({**matrix.model_dump(), **updates})

        out_dir = args.out or settings.output_dir
        print(f"\n🧮 Running {matrix.run_count} simulations into {out_dir}")
        result = run_matrix(matrix, out_dir, resume=not args.fresh)

        print(format_summary_table(result.summary))
        print(format_checks("Directional checks", check_directional_targets(result.summary)))
        for label, path in result.paths.items():
            print(f"📄 {label}: {path}")
        return EXIT_OK

    def validate_layout(self, args: argparse.Namespace) -> int:
        text = Path(args.layout).read_text(encoding="utf-8")
        try:
            layout = parse_layout(text, name=Path(args.layout).stem)
        except LayoutError as e:
            print(f"\n❌ {args.layout} is not a valid yard")
            for violation in e.violations or [str(e)]:
                print(f"  - {violation}")
            return EXIT_FAILED

        print(f"\n✅ {layout.name}: {layout.width}x{layout.height}, {len(layout.road_cells())} road cells")
        for station in layout.stations:
            print(f"  • {station.kind.value:<11} gate {station.gate_cell}  berths {station.berth_count}")
        return EXIT_OK

    def run_oracle(self, args: argparse.Namespace) -> int:
        scenario = load_json_config(args.scenario, OracleScenario) if args.scenario else OracleScenario()
        report = run_oracle(scenario)

        print("\n" + "=" * 80)
        print("ORACLE REPORT")
        print("=" * 80)
        print(f"assign_one cases: {report.assignment_checked}")
        print(f"Replan cases: {report.replan_checked}")
        print(f"Path cases: {report.path_checked}")
        print(f"Mismatches: {len(report.mismatches)}")
        for mismatch in report.mismatches[:20]:
            print(f"  ❌ {truncate_text(mismatch, 200)}")
        print("=" * 80 + "\n")
        print(get_status_emoji("completed" if report.ok else "error"))
        return EXIT_OK if report.ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yard-sim", description="Marshaling yard controller comparison"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_cmd = sub.add_parser("run", help="simulate one configuration")
    run_cmd.add_argument("--layout", help="small, medium, large or a layout file")
    run_cmd.add_argument("--controller", choices=["orchestrated", "isolated"])
    run_cmd.add_argument("--demand", type=float)
    run_cmd.add_argument("--seed", type=int)
    run_cmd.add_argument("--window-hours", type=float)
    run_cmd.add_argument("--reps", type=int, default=1)
    run_cmd.add_argument("--config", help="JSON file with SimConfig fields")
    run_cmd.add_argument("--out", help="directory for runs.csv and the event log")

    matrix_cmd = sub.add_parser("matrix", help="run the size x demand x controller matrix")
    matrix_cmd.add_argument("--config", help="JSON file with ScenarioMatrix fields")
    matrix_cmd.add_argument("--reps", type=int)
    matrix_cmd.add_argument("--seed", type=int)
    matrix_cmd.add_argument("--workers", type=int)
    matrix_cmd.add_argument("--out")
    matrix_cmd.add_argument("--fresh", action="store_true", help="ignore an existing run journal")

    validate_cmd = sub.add_parser("validate", help="check a layout file")
    validate_cmd.add_argument("--layout", required=True)

    oracle_cmd = sub.add_parser("oracle", help="compare against the brute-force references")
    oracle_cmd.add_argument("--scenario", help="JSON file with OracleScenario fields")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run" and args.reps < 1:
        parser.error("--reps must be at least 1")
    console = YardConsole()
    commands = {
        "run": console.run_single,
        "matrix": console.run_matrix,
        "validate": console.validate_layout,
        "oracle": console.run_oracle,
    }

    try:
        return commands[args.command](args)
    except (ValidationError, LayoutError, FileNotFoundError, json.JSONDecodeError) as e:
        message = str(e).splitlines()[0] if str(e) else type(e).__name__
        logger.error(f"Configuration error: {message}")
        print(f"\n❌ {message}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        logger.info("Interrupted")
        print("\n👋 Stopped")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
