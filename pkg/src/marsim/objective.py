"""Composite QoS objective shared by all schedulers.

The objective blends four normalized indicators -- mean response time,
energy, host characteristics (utilization spread plus migration churn) and
deadline violations -- into one score Y in [0,1], lower is better.  Searches
maximize the reward 1 - Y.
"""

from __future__ import annotations

from dataclasses import dataclass


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class QosWeights:
    """Trade-off coefficients; normalized to sum to 1 at construction."""

    alpha: float = 0.3  # response time
    beta: float = 0.2  # energy
    gamma: float = 0.2  # host characteristics
    delta: float = 0.3  # deadline violations

    def __post_init__(self):
        for name, v in self.as_dict().items():
            if v < 0:
                raise ValueError(f"weight {name} must be >= 0")
        s = self.alpha + self.beta + self.gamma + self.delta
        if s <= 0:
            raise ValueError("weights must not all be zero")
        object.__setattr__(self, "alpha", self.alpha / s)
        object.__setattr__(self, "beta", self.beta / s)
        object.__setattr__(self, "gamma", self.gamma / s)
        object.__setattr__(self, "delta", self.delta / s)

    def as_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta}


@dataclass(frozen=True)
class QosIndicators:
    """Raw indicator values over one evaluation window."""

    ars: float  # mean response time of tasks completed in the window, seconds
    aec: float  # energy consumed in the window, joules
    hc_util_variance: float  # variance of per-host core utilization, in [0, 0.25]
    hc_migrations: int  # host changes of previously placed tasks
    sla: int  # deadline violations first recorded in the window

    def __post_init__(self):
        if min(self.ars, self.aec, self.hc_util_variance) < 0 or min(self.hc_migrations, self.sla) < 0:
            raise ValueError("indicators must be >= 0")
        if self.hc_util_variance > 0.25 + 1e-12:
            raise ValueError("utilization variance cannot exceed 0.25")


@dataclass(frozen=True)
class NormalizationBounds:
    """Min-max scaling bounds for the dimensioned indicators."""

    ars_min: float = 0.0
    ars_max: float = 8.0 / 60.0  # eight frame periods
    aec_min: float = 0.0
    aec_max: float = 1.0  # joules per window; see for_window()

    def __post_init__(self):
        if not (self.ars_max > self.ars_min and self.aec_max > self.aec_min):
            raise BoundsError("bad bounds: max must exceed min")

    @classmethod
    def for_window(cls, window_s: float, fleet_max_watts: float, t_d: float = 1.0 / 60.0):
        """Bounds for a window: ARS capped at 8 frame periods, AEC at the
        fleet's all-cores-busy ceiling over the window."""
        return cls(0.0, 8.0 * t_d, 0.0, fleet_max_watts * window_s)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def normalize_values(
    ars: float, aec: float, util_variance: float, migrations: int, sla: int,
    bounds: NormalizationBounds, window_task_count: int,
) -> tuple[float, float, float, float]:
    """normalize_indicators on plain floats; the schedulers' hot path."""
    ars_n = _clamp01((ars - bounds.ars_min) / (bounds.ars_max - bounds.ars_min))
    aec_n = _clamp01((aec - bounds.aec_min) / (bounds.aec_max - bounds.aec_min))
    if window_task_count > 0:
        mig_term = migrations / window_task_count
        sla_n = _clamp01(sla / window_task_count)
    else:
        mig_term = 0.0
        sla_n = 0.0
    hc_n = _clamp01(0.5 * (util_variance / 0.25) + 0.5 * mig_term)
    return ars_n, aec_n, hc_n, sla_n


def normalize_indicators(
    ind: QosIndicators,
    bounds: NormalizationBounds,
    window_task_count: int,
) -> tuple[float, float, float, float]:
    """Map raw indicators to [0,1]^4.

    ARS and AEC are min-max scaled and clamped.  HC averages the utilization
    variance (against its 0.25 ceiling) with migrations per window task; SLA
    is violations per window task.  With an empty window the per-task terms
    are defined as 0.
    """
    if window_task_count < 0:
        raise ValueError("window_task_count must be >= 0")
    return normalize_values(ind.ars, ind.aec, ind.hc_util_variance,
                            ind.hc_migrations, ind.sla, bounds, window_task_count)


def score(normalized: tuple[float, float, float, float], weights: QosWeights) -> float:
    """Weighted sum Y of the normalized indicators, in [0,1]."""
    a, e, h, s = normalized
    return weights.alpha * a + weights.beta * e + weights.gamma * h + weights.delta * s


def reward(y: float) -> float:
    """Search reward: inverts the objective so better schedules score higher."""
    return 1.0 - y
