"""Hosts, network paths, energy and mobility for the edge-cloud fleet.

Edge hosts sit close to the base stations (fast connect, few cores); cloud
hosts are remote (slow connect, many but slower cores).  Users reach every
host through their serving base station, so per-user latency is a single
scalar that drifts with mobility.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class Tier(IntEnum):
    EDGE = 0
    CLOUD = 1


class Route(IntEnum):
    USER_TO_EDGE = 0
    USER_TO_CLOUD = 1
    EDGE_TO_CLOUD = 2
    EDGE_TO_USER = 3
    CLOUD_TO_USER = 4


# default machine shapes (B2s-like edge, B8ms-like cloud)
EDGE_CORES = 2
EDGE_MIPS = 4029.0
EDGE_CONNECT_S = 0.5e-3
CLOUD_CORES = 8
CLOUD_MIPS = 1601.0
CLOUD_CONNECT_S = 5e-3


class ClusterError(ValueError):
    pass


@dataclass(frozen=True)
class HostSpec:
    host_id: int
    tier: Tier
    cores: int
    mips_per_core: float
    connection_time: float  # seconds, paid per enqueue at this host
    busy_power: float  # watts at full-core load
    idle_power: float  # watts when idle

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError("cores must be >= 1")
        if self.mips_per_core <= 0:
            raise ValueError("mips_per_core must be > 0")
        if not self.busy_power >= self.idle_power >= 0:
            raise ValueError("need busy_power >= idle_power >= 0")

    @property
    def capacity_mips(self) -> float:
        return self.cores * self.mips_per_core


@dataclass
class NetworkSpec:
    """Link bandwidths and transmit powers.

    user_edge_bps covers both uplink and downlink of the access segment;
    user<->cloud paths chain the access segment with the edge-cloud
    backbone.  The backbone default models per-flow WAN throughput, which
    also prices cross-tier migration: moving a task's state is meant to
    hurt.
    """

    user_edge_bps: float = 400e6
    edge_cloud_bps: float = 100e6
    tx_power_edge_w: float = 0.5
    tx_power_cloud_w: float = 1.5
    extra_latency_bounds: tuple[float, float] = (0.0, 0.020)

    def __post_init__(self):
        if self.user_edge_bps <= 0 or self.edge_cloud_bps <= 0:
            raise ValueError("bandwidths must be > 0")
        if not self.tx_power_cloud_w > self.tx_power_edge_w:
            raise ValueError("tx_power_cloud_w must exceed tx_power_edge_w")


@dataclass
class PowerSpec:
    edge_busy_w: float = 30.0
    edge_idle_w: float = 10.0
    cloud_busy_w: float = 120.0
    cloud_idle_w: float = 40.0


@dataclass
class MobilityModel:
    """Bounded random walk on per-user extra latency, with rare handovers."""

    step_s: float = 1e-3
    max_extra_s: float = 20e-3
    handover_prob: float = 0.001
    handover_penalty_s: float = 200e-3


@dataclass
class ClusterState:
    """Static fleet description.

    The runtime embodiment (queues, occupancy, clock, in-flight transfers)
    lives in the simulation state, which is built from this value.
    """

    hosts: list[HostSpec] = field(default_factory=list)

    @property
    def total_capacity_mips(self) -> float:
        return sum(h.capacity_mips for h in self.hosts)

    def host(self, host_id: int) -> HostSpec:
        return self.hosts[host_id]


def default_cluster(
    n_edge: int,
    n_cloud: int,
    power: PowerSpec | None = None,
    edge_cores: int = EDGE_CORES,
    edge_mips: float = EDGE_MIPS,
    edge_connect_s: float = EDGE_CONNECT_S,
    cloud_cores: int = CLOUD_CORES,
    cloud_mips: float = CLOUD_MIPS,
    cloud_connect_s: float = CLOUD_CONNECT_S,
) -> ClusterState:
    """Fleet of n_edge + n_cloud hosts with the default machine shapes."""
    if n_edge + n_cloud < 1:
        raise ClusterError("empty cluster: need at least one host")
    power = power or PowerSpec()
    hosts = []
    for i in range(n_edge):
        hosts.append(
            HostSpec(i, Tier.EDGE, edge_cores, edge_mips, edge_connect_s,
                     power.edge_busy_w, power.edge_idle_w)
        )
    for j in range(n_cloud):
        hosts.append(
            HostSpec(n_edge + j, Tier.CLOUD, cloud_cores, cloud_mips, cloud_connect_s,
                     power.cloud_busy_w, power.cloud_idle_w)
        )
    return ClusterState(hosts=hosts)


def transfer_time(
    bits: float,
    route: Route,
    net: NetworkSpec,
    user_extra_latency: float = 0.0,
) -> float:
    """Seconds to move `bits` along a route.

    Routes touching the user pay that user's extra latency; user<->cloud
    chains the access and backbone segments.
    """
    if bits < 0:
        raise ValueError("bits must be >= 0")
    if route == Route.EDGE_TO_CLOUD:
        return bits / net.edge_cloud_bps
    t = bits / net.user_edge_bps
    if route in (Route.USER_TO_CLOUD, Route.CLOUD_TO_USER):
        t += bits / net.edge_cloud_bps
    return t + user_extra_latency


def migration_cost(
    task_state_bits: float,
    from_host: HostSpec,
    to_host: HostSpec,
    net: NetworkSpec,
) -> tuple[float, float]:
    """(seconds, joules) to move an unfinished task between hosts.

    Moves inside one tier are treated as free; crossing the edge-cloud
    boundary pays the backbone transfer plus the destination connect time,
    at cloud transmit power.
    """
    if from_host.tier == to_host.tier:
        return 0.0, 0.0
    duration = task_state_bits / net.edge_cloud_bps + to_host.connection_time
    return duration, net.tx_power_cloud_w * duration


def migration_payload_bits(
    input_bits: float, output_bits: float, progress: float, state_fraction: float = 0.5
) -> float:
    """Bits that must move with a task: its input plus part of the partial result."""
    return input_bits + state_fraction * progress * output_bits


def mobility_step(
    base_latency: np.ndarray,
    model: MobilityModel,
    gen: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """One mobility interval: returns (new base walk, effective latency).

    Each user's base latency takes a +-step_s step clamped to
    [0, max_extra_s]; with handover_prob the user additionally suffers a
    one-interval disconnection penalty on top of the walk.
    """
    k = len(base_latency)
    if k == 0:
        return base_latency.copy(), base_latency.copy()
    steps = np.where(gen.random(k) < 0.5, -model.step_s, model.step_s)
    handover = gen.random(k) < model.handover_prob
    base = np.clip(base_latency + steps, 0.0, model.max_extra_s)
    effective = base + np.where(handover, model.handover_penalty_s, 0.0)
    return base, effective
