from typing import Iterable, Optional

import pandas as pd


def get_status_emoji(status: str) -> str:
    """Get emoji for a run status"""
    emojis = {
        "completed": "✅",
        "facilityfailure": "🛑",
        "timecap": "⏱️",
        "error": "❌",
    }
    return emojis.get(status.lower(), "⚪")


def get_controller_emoji(controller: str) -> str:
    emojis = {"orchestrated": "🤖", "isolated": "🚗"}
    return emojis.get(controller.lower(), "🚙")


def format_duration(seconds: Optional[float]) -> str:
    """Seconds as h:mm:ss, or a dash when missing"""
    if seconds is None or pd.isna(seconds):
        return "-"
    total = int(round(float(seconds)))
    hours, rest = divmod(total, 3600)
    minutes, secs = divmod(rest, 60)
    return f"{hours}:{minutes:02d}:{secs:02d}"


def format_rate(value: Optional[float], digits: int = 2) -> str:
    if value is None or pd.isna(value):
        return "-"
    return f"{float(value):.{digits}f}"


def format_run_preview(record: dict, layout_name: str) -> str:
    """Format one finished run for the console"""
    status = record["status"]
    preview = f"""
{'=' * 80}
RUN {record['rep']}  {get_controller_emoji(record['controller'])} {record['controller'].upper()}
{'=' * 80}

Layout: {layout_name}
Demand: {record['demand']} vehicles
Seed: {record['seed']}

Status: {get_status_emoji(status)} {status.upper()}
Arrivals: {record['arrivals']}
Exits: {record['exits']} ({record['exits_within_window']} inside the window)
Impounded: {record['impounded']}
Stranded: {record['stranded']}

Throughput: {format_rate(record['throughput'])} veh/h
Window throughput: {format_rate(record['window_throughput'])} veh/h
Last exit: {format_duration(record['last_exit_time'])}
Failure time: {format_duration(record['failure_time'])}

{'=' * 80}
"""
    return preview


def format_summary_table(summary: pd.DataFrame) -> str:
    """Framed per-cell summary: failure rate, throughput and the paired delta"""
    lines = ["", "=" * 80, "MATRIX SUMMARY", "=" * 80, ""]
    header = f"{'size':<8}{'demand':>7}  {'controller':<13}{'runs':>5}{'fail %':>9}{'veh/h':>9}{'sd':>8}{'delta':>9}"
    lines.append(header)
    lines.append("-" * 80)
    for _, row in summary.iterrows():
        lines.append(
            f"{row['size']:<8}{int(row['demand']):>7}  {row['controller']:<13}{int(row['runs']):>5}"
            f"{row['failure_rate'] * 100:>9.1f}{format_rate(row['throughput_mean']):>9}"
            f"{format_rate(row['throughput_sd']):>8}{format_rate(row['delta_mean'], 3):>9}"
        )
    lines += ["=" * 80, ""]
    return "\n".join(lines)


def format_checks(title: str, checks: Iterable) -> str:
    """Framed pass/fail list for objects with name, passed and detail"""
    lines = ["", "=" * 80, title.upper(), "=" * 80]
    for check in checks:
        mark = "✅" if check.passed else "❌"
        lines.append(f"{mark} {check.name}: {check.detail}")
    lines += ["=" * 80, ""]
    return "\n".join(lines)


def truncate_text(text: str, max_length: int = 100) -> str:
    """Truncate text to specified length"""
    if len(text) <= max_length:
        return text
    return text[: max_length - 3] + "..."
