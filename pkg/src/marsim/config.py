"""Experiment configuration: a flat TOML file with dotted key paths.

An empty file is a valid experiment (pure defaults).  Unknown keys are
rejected, every violation is reported at once, and each error names the
offending key path.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

try:
    import tomllib  # type: ignore[import-not-found]
except ModuleNotFoundError:
    import tomli as tomllib

from . import infra
from .objective import NormalizationBounds, QosWeights
from .schedulers import GaParams, MmctParams, QosSpec, SchedulerConfig, SchedulerKind
from .workflow import ComponentKind, WorkloadProfile

KIND_KEYS = {
    "feature_extractor": ComponentKind.FEATURE_EXTRACTOR,
    "tracker": ComponentKind.TRACKER,
    "mapper": ComponentKind.MAPPER,
    "object_recognizer": ComponentKind.OBJECT_RECOGNIZER,
    "renderer": ComponentKind.RENDERER,
}

VALID_SCHEDULERS = [k.value for k in SchedulerKind]


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0.0 <= v <= 1.0


# path -> (type, default, predicate, description of the constraint)
_SCHEMA: dict[str, tuple] = {
    "workload.users": (int, 10, lambda v: v >= 1, "must be >= 1"),
    "workload.frames": (int, 200, lambda v: v >= 1, "must be >= 1"),
    "workload.fps": (float, 60.0, _pos, "must be > 0"),
    "workload.jitter": (float, 0.2, lambda v: 0.0 <= v < 1.0, "out of [0,1)"),
    "workload.renderer_local_ms": (float, 1.0, _pos, "must be > 0"),
    "run.task_count_unit": (str, "workflows", lambda v: v in ("workflows", "components"),
                            "must be 'workflows' or 'components'"),
    "cluster.edge_hosts": (int, 30, _nonneg, "must be >= 0"),
    "cluster.cloud_hosts": (int, 20, _nonneg, "must be >= 0"),
    "cluster.edge_cores": (int, 2, lambda v: v >= 1, "must be >= 1"),
    "cluster.edge_mips": (float, 4029.0, _pos, "must be > 0"),
    "cluster.edge_connect_ms": (float, 0.5, _nonneg, "must be >= 0"),
    "cluster.cloud_cores": (int, 8, lambda v: v >= 1, "must be >= 1"),
    "cluster.cloud_mips": (float, 1601.0, _pos, "must be > 0"),
    "cluster.cloud_connect_ms": (float, 5.0, _nonneg, "must be >= 0"),
    "network.user_edge_mbps": (float, 400.0, _pos, "must be > 0"),
    "network.edge_cloud_mbps": (float, 100.0, _pos, "must be > 0"),
    "network.tx_power_edge_w": (float, 0.5, _pos, "must be > 0"),
    "network.tx_power_cloud_w": (float, 1.5, _pos, "must be > 0"),
    "power.edge_busy_w": (float, 30.0, _pos, "must be > 0"),
    "power.edge_idle_w": (float, 10.0, _nonneg, "must be >= 0"),
    "power.cloud_busy_w": (float, 120.0, _pos, "must be > 0"),
    "power.cloud_idle_w": (float, 40.0, _nonneg, "must be >= 0"),
    "mobility.enabled": (bool, True, None, ""),
    "mobility.step_ms": (float, 1.0, _nonneg, "must be >= 0"),
    "mobility.max_extra_ms": (float, 20.0, _nonneg, "must be >= 0"),
    "mobility.handover_prob": (float, 0.001, _unit, "out of [0,1]"),
    "mobility.handover_penalty_ms": (float, 200.0, _nonneg, "must be >= 0"),
    "weights.alpha": (float, 0.3, _nonneg, "must be >= 0"),
    "weights.beta": (float, 0.2, _nonneg, "must be >= 0"),
    "weights.gamma": (float, 0.2, _nonneg, "must be >= 0"),
    "weights.delta": (float, 0.3, _nonneg, "must be >= 0"),
    "bounds.ars_max_ms": (float, 0.0, _nonneg, "must be >= 0 (0 selects 8 frame periods)"),
    "bounds.aec_max_w": (float, 0.0, _nonneg, "must be >= 0 (0 selects the fleet ceiling)"),
    "mmct.c": (float, 0.5, _unit, "out of [0,1]"),
    "mmct.n_rollout": (int, 7, lambda v: v >= 1, "must be >= 1"),
    "mmct.m_iter": (int, 10, lambda v: v >= 1, "must be >= 1"),
    "mmct.expansion_width": (int, 4, lambda v: v >= 1, "must be >= 1"),
    "mmct.discount": (float, 0.9, lambda v: 0.0 < v <= 1.0, "out of (0,1]"),
    "mmct.commit_random_root": (bool, False, None, ""),
    "ga.population": (int, 20, lambda v: v >= 2, "must be >= 2"),
    "ga.generations": (int, 10, lambda v: v >= 1, "must be >= 1"),
    "ga.tournament": (int, 3, lambda v: v >= 1, "must be >= 1"),
    "ga.crossover": (float, 0.5, _unit, "out of [0,1]"),
    "ga.mutation": (float, 0.1, _unit, "out of [0,1]"),
    "sim.reschedule_queued": (bool, False, None, ""),
    "sim.trace": (bool, False, None, ""),
    "run.schedulers": (list, VALID_SCHEDULERS, None, ""),
    "run.seeds": (list, [1], None, ""),
    "run.horizon": (int, 0, _nonneg, "must be >= 0 (0 selects frames + drain)"),
    "run.drain_intervals": (int, 12, _nonneg, "must be >= 0"),
    "run.out_dir": (str, "results", None, ""),
}

# per-component demand tables; values must be > 0 except data sizes >= 0
for _k in KIND_KEYS:
    _SCHEMA[f"workload.length_mi.{_k}"] = (float, None, _pos, "must be > 0")
    _SCHEMA[f"workload.input_mbit.{_k}"] = (float, None, _nonneg, "must be >= 0")
    _SCHEMA[f"workload.output_mbit.{_k}"] = (float, None, _nonneg, "must be >= 0")

_DEFAULT_PROFILE = WorkloadProfile()


def _flatten(tree: dict, prefix: str = "") -> dict[str, object]:
    flat: dict[str, object] = {}
    for k, v in tree.items():
        path = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, f"{path}."))
        else:
            flat[path] = v
    return flat


@dataclass
class ExperimentConfig:
    """Resolved experiment settings, addressable by dotted key path."""

    values: dict[str, object] = field(default_factory=dict)

    def __getitem__(self, path: str):
        return self.values[path]

    @property
    def t_d(self) -> float:
        return 1.0 / self.values["workload.fps"]

    def profile(self, users: int | None = None) -> WorkloadProfile:
        v = self.values
        return WorkloadProfile(
            users=users if users is not None else v["workload.users"],
            frames=v["workload.frames"],
            t_d=self.t_d,
            jitter=v["workload.jitter"],
            length_mi={kind: v[f"workload.length_mi.{key}"]
                       for key, kind in KIND_KEYS.items()},
            input_bits={kind: v[f"workload.input_mbit.{key}"] * 1e6
                        for key, kind in KIND_KEYS.items()},
            output_bits={kind: v[f"workload.output_mbit.{key}"] * 1e6
                         for key, kind in KIND_KEYS.items()},
            renderer_local_s=v["workload.renderer_local_ms"] * 1e-3,
        )

    def power(self) -> infra.PowerSpec:
        v = self.values
        return infra.PowerSpec(v["power.edge_busy_w"], v["power.edge_idle_w"],
                               v["power.cloud_busy_w"], v["power.cloud_idle_w"])

    def cluster(self) -> infra.ClusterState:
        v = self.values
        return infra.default_cluster(
            v["cluster.edge_hosts"], v["cluster.cloud_hosts"], power=self.power(),
            edge_cores=v["cluster.edge_cores"], edge_mips=v["cluster.edge_mips"],
            edge_connect_s=v["cluster.edge_connect_ms"] * 1e-3,
            cloud_cores=v["cluster.cloud_cores"], cloud_mips=v["cluster.cloud_mips"],
            cloud_connect_s=v["cluster.cloud_connect_ms"] * 1e-3,
        )

    def network(self) -> infra.NetworkSpec:
        v = self.values
        return infra.NetworkSpec(
            user_edge_bps=v["network.user_edge_mbps"] * 1e6,
            edge_cloud_bps=v["network.edge_cloud_mbps"] * 1e6,
            tx_power_edge_w=v["network.tx_power_edge_w"],
            tx_power_cloud_w=v["network.tx_power_cloud_w"],
            extra_latency_bounds=(0.0, v["mobility.max_extra_ms"] * 1e-3),
        )

    def mobility(self) -> infra.MobilityModel | None:
        v = self.values
        if not v["mobility.enabled"]:
            return None
        return infra.MobilityModel(
            step_s=v["mobility.step_ms"] * 1e-3,
            max_extra_s=v["mobility.max_extra_ms"] * 1e-3,
            handover_prob=v["mobility.handover_prob"],
            handover_penalty_s=v["mobility.handover_penalty_ms"] * 1e-3,
        )

    def weights(self) -> QosWeights:
        v = self.values
        return QosWeights(v["weights.alpha"], v["weights.beta"],
                          v["weights.gamma"], v["weights.delta"])

    def fleet_max_watts(self) -> float:
        return sum(h.idle_power + (h.busy_power - h.idle_power) * h.cores
                   for h in self.cluster().hosts)

    def bounds(self) -> NormalizationBounds:
        """Per-interval normalization window for the search objective."""
        v = self.values
        ars_max = v["bounds.ars_max_ms"] * 1e-3 if v["bounds.ars_max_ms"] > 0 \
            else 8.0 * self.t_d
        watts = v["bounds.aec_max_w"] if v["bounds.aec_max_w"] > 0 \
            else self.fleet_max_watts()
        return NormalizationBounds(0.0, ars_max, 0.0, watts * self.t_d)

    def qos_spec(self) -> QosSpec:
        return QosSpec(weights=self.weights(), bounds=self.bounds())

    def mmct(self) -> MmctParams:
        v = self.values
        return MmctParams(c=v["mmct.c"], n_rollout=v["mmct.n_rollout"],
                          m_iter=v["mmct.m_iter"],
                          expansion_width=v["mmct.expansion_width"],
                          discount=v["mmct.discount"],
                          commit_random_root=v["mmct.commit_random_root"])

    def ga(self) -> GaParams:
        v = self.values
        return GaParams(population=v["ga.population"], generations=v["ga.generations"],
                        tournament=v["ga.tournament"], crossover=v["ga.crossover"],
                        mutation=v["ga.mutation"])

    def scheduler_config(self) -> SchedulerConfig:
        return SchedulerConfig(qos=self.qos_spec(), mmct=self.mmct(), ga=self.ga())

    def horizon(self, frames: int | None = None) -> int:
        v = self.values
        if v["run.horizon"] > 0:
            return v["run.horizon"]
        f = frames if frames is not None else v["workload.frames"]
        return f + v["run.drain_intervals"]

    def out_dir(self) -> str:
        return os.environ.get("MARSIM_OUT", self.values["run.out_dir"])


def _coerce(path: str, value, want: type, errors: list[str]):
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{path}: expected number")
            return None
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{path}: expected integer")
            return None
        return value
    if want is bool:
        if not isinstance(value, bool):
            errors.append(f"{path}: expected boolean")
            return None
        return value
    if want is list:
        if not isinstance(value, list):
            errors.append(f"{path}: expected list")
            return None
        return value
    if not isinstance(value, str):
        errors.append(f"{path}: expected string")
        return None
    return value


def _profile_default(path: str):
    # demand-table defaults come from the workload profile
    section, key = path.rsplit(".", 1)
    kind = KIND_KEYS[key]
    if section.endswith("length_mi"):
        return _DEFAULT_PROFILE.length_mi[kind]
    if section.endswith("input_mbit"):
        return _DEFAULT_PROFILE.input_bits[kind] / 1e6
    return _DEFAULT_PROFILE.output_bits[kind] / 1e6


def validate_config(source: str | os.PathLike | None = None,
                    text: str | None = None,
                    overrides: dict[str, object] | None = None) -> ExperimentConfig:
    """Parse + validate a config file (or raw text); all errors at once.

    Defaults reproduce the reference constants: search c=0.5, roll-out
    N=7, budget M=10, edge/cloud connect 0.5/5 ms, edge 2x4029 MIPS,
    cloud 8x1601 MIPS, 60 frames per second.
    """
    if text is None and source is not None:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except FileNotFoundError:
            raise ConfigError([f"config file not found: {source}"]) from None
    try:
        raw = tomllib.loads(text or "")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"config parse error: {exc}"]) from None
    return _validate_tree(raw, overrides)


def _validate_tree(raw: dict, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    errors: list[str] = []
    flat = _flatten(raw)
    if overrides:
        flat.update(overrides)
    values: dict[str, object] = {}
    for path, spec in _SCHEMA.items():
        want, default, check, msg = spec
        if default is None:
            default = _profile_default(path)
        if path in flat:
            v = _coerce(path, flat.pop(path), want, errors)
            if v is None:
                continue
        else:
            v = default
        if check is not None and not check(v):
            errors.append(f"{path} {msg}" if msg.startswith("out") else f"{path}: {msg}")
            continue
        values[path] = v
    for path in sorted(flat):
        errors.append(f"unknown key {path}")

    if not errors:
        for s in values["run.schedulers"]:
            if s not in VALID_SCHEDULERS:
                errors.append(f"run.schedulers: unknown scheduler '{s}' "
                              f"(valid: {', '.join(VALID_SCHEDULERS)})")
        if not values["run.seeds"]:
            errors.append("run.seeds: must not be empty")
        for s in values["run.seeds"]:
            if isinstance(s, bool) or not isinstance(s, int):
                errors.append("run.seeds: expected integers")
                break
        if values["power.edge_busy_w"] < values["power.edge_idle_w"]:
            errors.append("power.edge_busy_w must be >= power.edge_idle_w")
        if values["power.cloud_busy_w"] < values["power.cloud_idle_w"]:
            errors.append("power.cloud_busy_w must be >= power.cloud_idle_w")
        if values["network.tx_power_cloud_w"] <= values["network.tx_power_edge_w"]:
            errors.append("network.tx_power_cloud_w must exceed network.tx_power_edge_w")
        if values["cluster.edge_hosts"] + values["cluster.cloud_hosts"] < 1:
            errors.append("cluster: empty cluster (need at least one host)")
        if values["ga.tournament"] > values["ga.population"]:
            errors.append("ga.tournament must be <= ga.population")
        a = values["weights.alpha"] + values["weights.beta"] + \
            values["weights.gamma"] + values["weights.delta"]
        if not a > 0 or math.isnan(a):
            errors.append("weights: must not all be zero")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(values=values)
