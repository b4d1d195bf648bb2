"""Per-run metric aggregation and serialization.

Six headline metrics per run: SLA violations, mean response time, energy,
migration count, mean migration time and mean schedule time, plus raw
counters and per-interval series for the plotting frontend.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

CSV_HEADER = [
    "scheduler", "seed", "users", "tasks_released", "tasks_completed",
    "sla_violations", "avg_response_ms", "energy_j", "migrations",
    "avg_migration_time_ms", "avg_schedule_time_ms",
]

SUMMARY_METRICS = [
    "sla_violations", "avg_response_ms", "energy_j", "migrations",
    "avg_migration_time_ms", "avg_schedule_time_ms",
]


def _series_dict() -> dict[str, list]:
    return {
        "released": [], "completed": [], "sla_violations": [], "response_ms": [],
        "energy_j": [], "migrations": [], "migration_time_ms": [], "schedule_time_ms": [],
    }


@dataclass
class RunReport:
    """Aggregate outcome of one (scheduler, seed, users) run."""

    scheduler: str = ""
    seed: int = 0
    users: int = 0
    tasks_released: int = 0
    tasks_completed: int = 0
    sla_violations: int = 0
    energy_j: float = 0.0
    migrations: int = 0
    intervals: int = 0
    workflows_released: int = 0
    dropped: int = 0
    response_sum_s: float = 0.0
    migration_time_s: float = 0.0
    schedule_time_s: float = 0.0
    series: dict[str, list] = field(default_factory=_series_dict, repr=False)
    state: object = field(default=None, repr=False, compare=False)

    @property
    def avg_response_ms(self) -> float:
        return 1e3 * self.response_sum_s / self.tasks_completed if self.tasks_completed else 0.0

    @property
    def avg_migration_time_ms(self) -> float:
        return 1e3 * self.migration_time_s / self.migrations if self.migrations else 0.0

    @property
    def avg_schedule_time_ms(self) -> float:
        return 1e3 * self.schedule_time_s / self.intervals if self.intervals else 0.0

    def finalize(self, dropped: int = 0, dropped_sla: int = 0,
                 workflows_released: int = 0) -> None:
        """Close out a run: tasks still unfinished at the horizon count as
        dropped, and the ones not already past deadline become violations."""
        self.dropped = dropped
        self.sla_violations += dropped_sla
        self.workflows_released = workflows_released

    def row(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "seed": self.seed,
            "users": self.users,
            "tasks_released": self.tasks_released,
            "tasks_completed": self.tasks_completed,
            "sla_violations": self.sla_violations,
            "avg_response_ms": self.avg_response_ms,
            "energy_j": self.energy_j,
            "migrations": self.migrations,
            "avg_migration_time_ms": self.avg_migration_time_ms,
            "avg_schedule_time_ms": self.avg_schedule_time_ms,
        }


def accumulate(report: RunReport, interval, schedule_time_s: float) -> RunReport:
    """Fold one interval's accounting into the running report."""
    report.intervals += 1
    report.tasks_released += interval.released
    report.tasks_completed += interval.completed
    report.sla_violations += interval.misses
    report.migrations += interval.migrations
    report.migration_time_s += interval.migration_time_s
    report.energy_j += interval.energy_j
    report.response_sum_s += interval.response_sum_s
    report.schedule_time_s += schedule_time_s
    s = report.series
    s["released"].append(interval.released)
    s["completed"].append(interval.completed)
    s["sla_violations"].append(interval.misses)
    s["response_ms"].append(1e3 * interval.mean_response_s)
    s["energy_j"].append(interval.energy_j)
    s["migrations"].append(interval.migrations)
    s["migration_time_ms"].append(1e3 * interval.migration_time_s)
    s["schedule_time_ms"].append(1e3 * schedule_time_s)
    return report


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def export_csv(reports: Iterable[RunReport], path) -> None:
    """One row per run; floats rendered with 6 significant digits.

    Byte-deterministic for identical inputs.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in reports:
            row = r.row()
            w.writerow([_fmt(row[k]) for k in CSV_HEADER])


def export_json(reports: Iterable[RunReport], path) -> None:
    """JSON mirror of the CSV with identical field names."""
    data = []
    for r in reports:
        row = r.row()
        data.append({k: (float(f"{v:.6g}") if isinstance(v, float) else v)
                     for k, v in row.items()})
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=False)
        fh.write("\n")


def summarize(reports: Iterable[RunReport]) -> list[dict]:
    """Mean and population stddev per (scheduler, users) group.

    Aggregates the values at CSV precision (6 significant digits), so the
    summary of a run list equals the summary recomputed from its exported
    CSV.  Rows come back sorted by scheduler name then user count.
    """
    groups: dict[tuple[str, int], list[RunReport]] = {}
    for r in reports:
        groups.setdefault((r.scheduler, r.users), []).append(r)
    out = []
    for (sched, users) in sorted(groups):
        rs = groups[(sched, users)]
        row: dict = {"scheduler": sched, "users": users, "runs": len(rs)}
        for metric in SUMMARY_METRICS:
            vals = [float(f"{float(getattr(r, metric)):.6g}") for r in rs]
            mean = sum(vals) / len(vals)
            var = sum((v - mean) ** 2 for v in vals) / len(vals)
            row[f"{metric}_mean"] = mean
            row[f"{metric}_std"] = math.sqrt(var)
        out.append(row)
    return out


def export_summary_csv(rows: list[dict], path) -> None:
    header = ["scheduler", "users", "runs"]
    for metric in SUMMARY_METRICS:
        header += [f"{metric}_mean", f"{metric}_std"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in header])


def format_summary_table(rows: list[dict]) -> str:
    """Human-readable mean +- std table for the terminal."""
    if not rows:
        return "(no runs)"
    lines = []
    head = f"{'scheduler':<12}{'users':>6}{'runs':>5}"
    for metric in SUMMARY_METRICS:
        head += f"{metric:>24}"
    lines.append(head)
    for row in rows:
        line = f"{row['scheduler']:<12}{row['users']:>6}{row['runs']:>5}"
        for metric in SUMMARY_METRICS:
            cell = f"{row[f'{metric}_mean']:.6g} +- {row[f'{metric}_std']:.3g}"
            line += f"{cell:>24}"
        lines.append(line)
    return "\n".join(lines)
