"""Experiment driver CLI.

Subcommands: validate (check a config), run (one scenario), compare
(schedulers x seeds) and sweep (compare across user counts).  Results go
to CSV per the fixed schema; summaries print as mean +- std tables.  The
output directory honours the MARSIM_OUT environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import metrics
from .config import ConfigError, ExperimentConfig, validate_config
from .experiments import run_grid, run_single
from .schedulers import SchedulerKind

VALID = ", ".join(k.value for k in SchedulerKind)


def _load(args) -> ExperimentConfig:
    overrides = {}
    for item in getattr(args, "set", None) or []:
        try:
            import tomli as tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomllib  # type: ignore[no-redef]
        try:
            frag = tomllib.loads(item)
        except Exception as exc:
            raise SystemExit(f"bad --set '{item}': {exc}") from None
        for path, value in _flatten_fragment(frag).items():
            overrides[path] = value
    return validate_config(args.config, overrides=overrides or None)


def _flatten_fragment(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in tree.items():
        path = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten_fragment(v, f"{path}."))
        else:
            flat[path] = v
    return flat


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _check_kinds(kinds: list[str]) -> None:
    bad = [k for k in kinds if k not in {s.value for s in SchedulerKind}]
    if bad:
        raise SystemExit(f"unknown scheduler(s) {', '.join(bad)}; valid kinds: {VALID}")


def _out_path(cfg: ExperimentConfig, name: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    out_dir = cfg.out_dir()
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _finish(reports, cfg, default_name, args) -> None:
    path = _out_path(cfg, default_name, args.out)
    metrics.export_csv(reports, path)
    if getattr(args, "json", False):
        metrics.export_json(reports, path.rsplit(".", 1)[0] + ".json")
    summary = metrics.summarize(reports)
    if getattr(args, "summary_out", None):
        metrics.export_summary_csv(summary, args.summary_out)
    print(f"wrote {len(reports)} run(s) to {path}")
    print(metrics.format_summary_table(summary))


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"config ok ({len(cfg.values)} settings)")
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    kind = args.scheduler or cfg["run.schedulers"][0]
    _check_kinds([kind])
    seed = args.seed if args.seed is not None else cfg["run.seeds"][0]
    report = run_single(cfg, kind, seed)
    if cfg["sim.trace"] and report.state is not None:
        trace_path = _out_path(cfg, f"trace_{kind}_{seed}.log", None)
        n = report.state.write_trace(trace_path)
        print(f"wrote {n} trace records to {trace_path}")
    _finish([report], cfg, f"run_{kind}_{seed}.csv", args)
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    kinds = _str_list(args.schedulers) if args.schedulers else list(cfg["run.schedulers"])
    _check_kinds(kinds)
    seeds = _int_list(args.seeds) if args.seeds else list(cfg["run.seeds"])
    print(f"comparison set: {', '.join(kinds)} "
          "(externally published baselines without reproducible internals are excluded)")
    reports = run_grid(cfg, kinds, seeds)
    _finish(reports, cfg, "compare.csv", args)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    kinds = _str_list(args.schedulers) if args.schedulers else list(cfg["run.schedulers"])
    _check_kinds(kinds)
    seeds = _int_list(args.seeds) if args.seeds else list(cfg["run.seeds"])
    users = _int_list(args.users)
    if not users:
        raise SystemExit("sweep needs at least one user count")
    reports = run_grid(cfg, kinds, seeds, users_list=users)
    _finish(reports, cfg, "sweep.csv", args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="marsim",
                                description="edge-cloud offloading simulator")
    p.add_argument("-c", "--config", default=None, help="TOML config (dotted keys)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key (repeatable), e.g. --set mmct.c=0.3")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="parse and check the config")
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("run", help="single scenario run")
    sp.add_argument("--scheduler", help=f"one of: {VALID}")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="CSV output path")
    sp.add_argument("--json", action="store_true", help="also write a JSON mirror")
    sp.add_argument("--summary-out", dest="summary_out")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("compare", help="schedulers x seeds comparison")
    sp.add_argument("--schedulers", help="comma-separated kinds")
    sp.add_argument("--seeds", help="comma-separated seeds")
    sp.add_argument("--out")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--summary-out", dest="summary_out")
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("sweep", help="comparison across user counts")
    sp.add_argument("--users", required=True, help="comma-separated user counts")
    sp.add_argument("--schedulers")
    sp.add_argument("--seeds")
    sp.add_argument("--out")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--summary-out", dest="summary_out")
    sp.set_defaults(fn=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
