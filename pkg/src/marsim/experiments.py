"""Glue between a validated config and the scenario driver."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from . import metrics, simcore, workflow
from .config import ExperimentConfig
from .schedulers import SchedulerKind, make_scheduler


def run_single(cfg: ExperimentConfig, kind: SchedulerKind | str, seed: int,
               users: int | None = None, impl=None,
               collect_log: bool = False) -> metrics.RunReport:
    """One full run of one scheduler at one seed (optionally overriding the
    user count, as the scalability sweep does)."""
    kind = SchedulerKind(kind)
    profile = cfg.profile(users)
    instances = workflow.generate_workload(profile, seed)
    cluster = cfg.cluster()
    scheduler = make_scheduler(kind, cfg.scheduler_config())
    report = simcore.run_scenario(
        instances, cluster, scheduler,
        horizon=cfg.horizon(profile.frames), seed=seed,
        net=cfg.network(), t_d=profile.t_d,
        renderer_local_s=profile.renderer_local_s,
        mobility=cfg.mobility(),
        reschedule_queued=cfg["sim.reschedule_queued"],
        collect_log=collect_log, collect_trace=cfg["sim.trace"],
        label=kind.value, users=profile.users, impl=impl,
    )
    return report


def _run_cell(args) -> metrics.RunReport:
    values, kind, users, seed = args
    cfg = ExperimentConfig(values=values)
    report = run_single(cfg, kind, seed, users=users)
    report.state = None  # keep worker results picklable and small
    return report


def run_grid(cfg: ExperimentConfig, schedulers: list[str], seeds: list[int],
             users_list: list[int] | None = None, workers: int | None = None,
             progress=None) -> list[metrics.RunReport]:
    """Cross product of schedulers x seeds (x user counts for sweeps).

    Cells are independent runs with their own seed-derived streams, so they
    may execute in parallel worker processes; results are sorted
    deterministically regardless of completion order.  Failures are
    collected per cell and re-raised together, naming the failing cells.
    """
    cells = []
    for kind in schedulers:
        for u in (users_list if users_list is not None else [None]):
            for seed in seeds:
                cells.append((kind, u, seed))
    if workers is None:
        workers = min(len(cells), os.cpu_count() or 1)
    reports: list[metrics.RunReport] = []
    failures: list[str] = []

    def _note(cell, exc):
        kind, u, seed = cell
        failures.append(f"({kind}, seed={seed}"
                        + (f", users={u})" if u is not None else ")")
                        + f": {exc}")

    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_cell, (cfg.values, k, u, s)): (k, u, s)
                       for (k, u, s) in cells}
            for fut, cell in futures.items():
                try:
                    reports.append(fut.result())
                    if progress:
                        progress(*cell)
                except Exception as exc:  # noqa: BLE001 - reported per cell
                    _note(cell, exc)
    else:
        for cell in cells:
            kind, u, seed = cell
            try:
                reports.append(run_single(cfg, kind, seed, users=u))
                if progress:
                    progress(*cell)
            except Exception as exc:  # noqa: BLE001 - reported per cell
                _note(cell, exc)
    if failures:
        raise RuntimeError("runs failed: " + "; ".join(failures))
    reports.sort(key=lambda r: (r.scheduler, r.users, r.seed))
    return reports
