"""Deterministic discrete-event core: state, forking, interval execution.

A SimState owns two live-task matrices (floats and ints, rows sorted by
task id) plus per-user latency and a handful of scalars, so forking for
look-ahead rollouts is two array copies.  The static per-run tables
(task demands, DAG edges, host fleet, network constants) are shared by
every fork.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import infra, kernel, metrics, rng
from ._layout import (
    I_HOST, I_SLA, I_STATUS, I_TID, NF, NI,
    R_COMPLETED, R_COMP_SUM, R_CONN_SUM, R_E_COMP, R_E_TRANS, R_MIGRATIONS,
    R_MIG_TIME, R_MISSES, R_PENDING, R_QUEUE_SUM, R_RELEASED, R_RESP_SUM,
    R_TRANS_SUM, R_UTIL_VAR,
    S_APRED, S_MIGRATE, S_QUEUED, S_READY, S_RUNNING, S_UPLOAD, S_WPRED,
    TIME_EPS, TR_RELEASE, TRACE_NAMES,
)
from .objective import QosIndicators
from .workflow import WorkflowInstance

Assignment = Mapping[int, int]  # task_id -> host_id

_FORK_PAD = 64  # spare live rows so rollout releases rarely reallocate
_EMPTY_I64 = np.zeros(0, np.int64)


class SimulationError(RuntimeError):
    pass


class StaticData:
    """Immutable per-run tables plus cached engine-specific mirrors."""

    def __init__(self, instances: Sequence[WorkflowInstance],
                 cluster: infra.ClusterState, net: infra.NetworkSpec,
                 t_d: float, renderer_local_s: float = 0.001,
                 migration_state_fraction: float = 0.5):
        tasks = [t for inst in instances for t in inst.tasks]
        n = len(tasks)
        rel = {t.task_id: inst.release_time for inst in instances for t in inst.tasks}
        self.n_tasks = n
        self.t_d = t_d
        self.cluster = cluster
        self.net = net
        self.release = np.empty(n, np.float64)
        self.deadline = np.empty(n, np.float64)
        self.length = np.empty(n, np.float64)
        self.inbits = np.empty(n, np.float64)
        self.outbits = np.empty(n, np.float64)
        self.user = np.empty(n, np.int32)
        self.local = np.empty(n, np.int8)
        self.kind = np.empty(n, np.int8)
        self.instance = np.empty(n, np.int32)
        pred_lists: list[list[int]] = []
        succ_lists: dict[int, list[int]] = {}
        for inst in instances:
            for t in inst.tasks:
                i = t.task_id
                if i != len(pred_lists):
                    raise ValueError("task ids must be dense and release-ordered")
                self.release[i] = rel[i]
                self.deadline[i] = rel[i] + t.deadline
                self.length[i] = t.length
                self.inbits[i] = t.input_size
                self.outbits[i] = t.output_size
                self.user[i] = t.user_id
                self.local[i] = 1 if t.kind.local_only else 0
                self.kind[i] = int(t.kind)
                self.instance[i] = inst.instance_id
                pred_lists.append(sorted(t.predecessors))
                for p in t.predecessors:
                    succ_lists.setdefault(p, []).append(i)
        if n > 1 and np.any(np.diff(self.release) < -TIME_EPS):
            raise ValueError("instances must be ordered by release time")
        self.pred_count = np.array([len(p) for p in pred_lists], np.int32)
        self.succ_ptr = np.zeros(n + 1, np.int32)
        flat: list[int] = []
        for i in range(n):
            s = sorted(succ_lists.get(i, []))
            flat.extend(s)
            self.succ_ptr[i + 1] = len(flat)
        self.succ_idx = np.array(flat, np.int32) if flat else np.zeros(0, np.int32)

        hosts = cluster.hosts
        self.n_hosts = len(hosts)
        self.h_tier = np.array([int(h.tier) for h in hosts], np.int8)
        self.h_cores = np.array([h.cores for h in hosts], np.int32)
        self.h_mips = np.array([h.mips_per_core for h in hosts], np.float64)
        self.h_conn = np.array([h.connection_time for h in hosts], np.float64)
        self.h_busy_w = np.array([h.busy_power for h in hosts], np.float64)
        self.h_idle_w = np.array([h.idle_power for h in hosts], np.float64)
        self.renderer_local_s = renderer_local_s
        self.migration_state_fraction = migration_state_fraction
        self.n_users = int(self.user.max()) + 1 if n else 1
        self._tables: dict[int, object] = {}

    def tables_for(self, impl) -> object:
        key = id(impl)
        tab = self._tables.get(key)
        if tab is None:
            tab = impl.Tables(
                self.release, self.deadline, self.length, self.inbits,
                self.outbits, self.user, self.local,
                self.succ_ptr, self.succ_idx, self.pred_count,
                self.h_tier, self.h_cores, self.h_mips, self.h_conn,
                self.h_busy_w, self.h_idle_w,
                self.net.user_edge_bps, self.net.edge_cloud_bps,
                self.net.tx_power_edge_w, self.net.tx_power_cloud_w,
                self.renderer_local_s, self.migration_state_fraction,
            )
            self._tables[key] = tab
        return tab


@dataclass
class IntervalReport:
    """Accounting for one executed interval."""

    duration: float
    released: int
    completed: int
    misses: int
    migrations: int
    migration_time_s: float
    energy_comp_j: float
    energy_trans_j: float
    response_sum_s: float
    trans_sum_s: float
    conn_sum_s: float
    queue_sum_s: float
    comp_sum_s: float
    util_variance: float
    pending_after: int
    completed_rows: list | None = None

    @property
    def energy_j(self) -> float:
        return self.energy_comp_j + self.energy_trans_j

    @property
    def mean_response_s(self) -> float:
        return self.response_sum_s / self.completed if self.completed else 0.0

    def indicators(self) -> tuple[QosIndicators, int]:
        ind = QosIndicators(
            ars=self.mean_response_s,
            aec=self.energy_j,
            hc_util_variance=self.util_variance,
            hc_migrations=self.migrations,
            sla=self.misses,
        )
        return ind, self.released


class SimState:
    """Forkable runtime state of one simulation context."""

    __slots__ = ("st", "LF", "LI", "m", "cap", "user_lat_base", "user_lat",
                 "clock", "next_release", "interval_index", "_prereleased",
                 "released_total", "completed_total", "misses_total",
                 "migrations_total", "migration_time_total",
                 "collect_log", "collect_trace", "completed_log", "trace",
                 "_impl", "_scratchF", "_scratchI", "_due_cache")

    def __init__(self, st: StaticData, collect_log: bool = False,
                 collect_trace: bool = False, impl=None):
        self.st = st
        self.cap = _FORK_PAD
        self.LF = np.zeros((self.cap, NF), np.float64)
        self.LI = np.zeros((self.cap, NI), np.int64)
        self.m = 0
        self.user_lat_base = np.zeros(st.n_users, np.float64)
        self.user_lat = np.zeros(st.n_users, np.float64)
        self.clock = 0.0
        self.next_release = 0
        self.interval_index = 0
        self._prereleased = 0
        self.released_total = 0
        self.completed_total = 0
        self.misses_total = 0
        self.migrations_total = 0
        self.migration_time_total = 0.0
        self.collect_log = collect_log
        self.collect_trace = collect_trace
        self.completed_log: list = [] if collect_log else None
        self.trace: list = [] if collect_trace else None
        self._impl = impl if impl is not None else kernel.active
        self._scratchF = None
        self._scratchI = None
        self._due_cache = None

    # -- forking -----------------------------------------------------------

    def fork(self) -> "SimState":
        """Independent copy for look-ahead; never collects logs or traces."""
        new = SimState.__new__(SimState)
        new.st = self.st
        m = self.m
        new.cap = m + _FORK_PAD
        LF = np.empty((new.cap, NF), np.float64)
        LI = np.empty((new.cap, NI), np.int64)
        LF[:m] = self.LF[:m]
        LI[:m] = self.LI[:m]
        new.LF = LF
        new.LI = LI
        new.m = m
        new.user_lat_base = self.user_lat_base.copy()
        new.user_lat = self.user_lat.copy()
        new.clock = self.clock
        new.next_release = self.next_release
        new.interval_index = self.interval_index
        new._prereleased = self._prereleased
        new.released_total = self.released_total
        new.completed_total = self.completed_total
        new.misses_total = self.misses_total
        new.migrations_total = self.migrations_total
        new.migration_time_total = self.migration_time_total
        new.collect_log = False
        new.collect_trace = False
        new.completed_log = None
        new.trace = None
        new._impl = self._impl
        new._scratchF = None
        new._scratchI = None
        new._due_cache = None
        return new

    def _ensure_capacity(self, need: int) -> None:
        if need <= self.cap:
            return
        cap = max(need, self.cap * 2)
        LF = np.empty((cap, NF), np.float64)
        LI = np.empty((cap, NI), np.int64)
        LF[:self.m] = self.LF[:self.m]
        LI[:self.m] = self.LI[:self.m]
        self.LF, self.LI, self.cap = LF, LI, cap

    # -- releases ----------------------------------------------------------

    def _due_count(self) -> int:
        return int(np.searchsorted(self.st.release, self.clock + TIME_EPS,
                                   side="right")) - self.next_release

    def release_due(self) -> int:
        """Materialize all workflows whose release time has arrived.

        Mirrors the engine's internal release step exactly; the scenario
        driver calls this before scheduling so the broker sees the
        interval's fresh tasks.
        """
        from ._layout import F_QSINCE, F_QUEUE, F_READY, F_REM, I_PREDS
        st = self.st
        n_due = self._due_count()
        if n_due <= 0:
            return 0
        self._ensure_capacity(self.m + n_due)
        t0 = self.clock
        for _ in range(n_due):
            tid = self.next_release
            li = self.m
            self.LF[li, :] = 0.0
            self.LI[li, :] = 0
            self.LI[li, I_TID] = tid
            self.LI[li, I_HOST] = -1
            self.LI[li, I_PREDS] = st.pred_count[tid]
            self.LF[li, F_REM] = st.length[tid]
            self.LF[li, F_READY] = st.release[tid]
            if st.pred_count[tid] > 0:
                self.LI[li, I_STATUS] = S_WPRED
            else:
                self.LI[li, I_STATUS] = S_READY
                self.LF[li, F_QSINCE] = st.release[tid]
                d = t0 - st.release[tid]
                if d > 0.0:
                    self.LF[li, F_QUEUE] += d
            if self.collect_trace:
                self.trace.append((t0, TR_RELEASE, tid, -1))
            self.m += 1
            self.next_release += 1
        self._prereleased += n_due
        self.released_total += n_due
        return n_due

    def due_offloadable(self) -> list[int]:
        """Offloadable tasks that will release at the next interval entry."""
        end = int(np.searchsorted(self.st.release, self.clock + TIME_EPS, side="right"))
        return [t for t in range(self.next_release, end) if not self.st.local[t]]

    # -- scheduling views ----------------------------------------------------

    def pending_tasks(self, reschedule_queued: bool = False) -> list[int]:
        """Tasks the broker decides this interval: unassigned ones plus
        started-but-unfinished ones (whole in-flight set with the flag)."""
        li = self.LI[:self.m]
        status = li[:, I_STATUS]
        mask = (status == S_READY) | (status == S_WPRED) | (status == S_RUNNING)
        if reschedule_queued:
            mask |= (status == S_QUEUED) | (status == S_UPLOAD) | \
                    (status == S_MIGRATE) | (status == S_APRED)
        tids = li[mask, I_TID]
        tids = tids[self.st.local[tids] == 0]
        return [int(t) for t in tids]

    def unassigned_tasks(self) -> list[int]:
        li = self.LI[:self.m]
        status = li[:, I_STATUS]
        mask = (status == S_READY) | (status == S_WPRED)
        tids = li[mask, I_TID]
        tids = tids[self.st.local[tids] == 0]
        return [int(t) for t in tids]

    def task_row(self, tid: int) -> tuple[np.ndarray, np.ndarray] | None:
        idx = np.searchsorted(self.LI[:self.m, I_TID], tid)
        if idx < self.m and self.LI[idx, I_TID] == tid:
            return self.LF[idx], self.LI[idx]
        return None

    def host_of(self, tid: int) -> int:
        row = self.task_row(tid)
        return int(row[1][I_HOST]) if row else -1

    def unfinished_sla_count(self) -> int:
        return int(np.sum(self.LI[:self.m, I_SLA] == 0))

    # -- mobility ------------------------------------------------------------

    def apply_mobility(self, model: infra.MobilityModel, gen: np.random.Generator) -> None:
        base, eff = infra.mobility_step(self.user_lat_base, model, gen)
        self.user_lat_base[:] = base
        self.user_lat[:] = eff

    # -- execution -----------------------------------------------------------

    def _scratch(self, rows: int):
        if self._scratchF is None or self._scratchF.shape[0] < rows:
            cap = max(rows, 64)
            self._scratchF = np.empty((cap, NF), np.float64)
            self._scratchI = np.empty((cap, NI), np.int64)
        return self._scratchF, self._scratchI

    def due_within(self, n_steps: int) -> np.ndarray:
        """Offloadable tasks that will release within the next n_steps+1
        interval entries (look-ahead candidate pool extension).  Cached per
        (clock, n_steps): constant across one scheduling round."""
        key = (self.clock, self.next_release, n_steps)
        if self._due_cache is not None and self._due_cache[0] == key:
            return self._due_cache[1]
        horizon = self.clock + n_steps * self.st.t_d + TIME_EPS
        end = int(np.searchsorted(self.st.release, horizon, side="right"))
        nr = self.next_release
        window = np.arange(nr, end, dtype=np.int64)
        due = window[self.st.local[nr:end] == 0]
        self._due_cache = (key, due, end)
        return due

    def eval_rollout(self, tids: Sequence[int], hosts: Sequence[int],
                     n_steps: int, cand_tid: np.ndarray, cand_prio: np.ndarray,
                     exclude_tid: int, host_draws: np.ndarray,
                     qpack: tuple) -> list[float]:
        """Reward sequence of one candidate assignment evaluated on a
        throwaway copy: the assigned interval plus n_steps look-ahead
        intervals, each placing the highest-priority unpicked candidate on
        a drawn host.  The real state is untouched.  qpack carries the
        objective weights and normalization bounds as plain floats.
        """
        st = self.st
        dur = st.t_d
        if len(cand_prio) != len(cand_tid) or len(host_draws) < len(cand_tid):
            raise ValueError("candidate table needs one priority and one host draw per task")
        key = (self.clock, self.next_release, n_steps)
        if self._due_cache is not None and self._due_cache[0] == key:
            end = self._due_cache[2]
        else:
            horizon = self.clock + n_steps * dur + TIME_EPS
            end = int(np.searchsorted(st.release, horizon, side="right"))
        sF, sI = self._scratch(self.m + (end - self.next_release))
        a_tid = np.asarray(tids, np.int64) if len(tids) else _EMPTY_I64
        a_host = np.asarray(hosts, np.int64) if len(hosts) else _EMPTY_I64
        return self._impl.rollout_eval(
            st.tables_for(self._impl), self.LF, self.LI, self.m, self.user_lat,
            self.clock, self.next_release, dur, a_tid, a_host, n_steps,
            cand_tid, cand_prio, exclude_tid, host_draws,
            self._prereleased, *qpack, sF, sI,
        )

    def apply_assignment(self, assignment: Assignment) -> None:
        """Bake an assignment into the state without advancing time.

        A zero-length engine pass: releases due tasks and dispatches the
        placements (uploads, queue joins) exactly as the next interval
        would, so later evaluations only carry their own incremental
        decisions.  The interval's release count stays pending for the
        next real simulation's objective window.
        """
        items = sorted(assignment.items())
        if not items and self._due_count() <= 0:
            return
        self._ensure_capacity(self.m + max(self._due_count(), 0))
        a_tid = np.array([k for k, _ in items], np.int64)
        a_host = np.array([v for _, v in items], np.int64)
        tables = self.st.tables_for(self._impl)
        m, nr, rep, _, _, _ = self._impl.simulate(
            tables, self.LF, self.LI, self.m, self.user_lat,
            self.clock, self.next_release, 0.0, a_tid, a_host,
            False, False, False,
        )
        self.m = m
        self.next_release = nr
        self.released_total += rep[R_RELEASED]
        self._prereleased += rep[R_RELEASED]
        self.migrations_total += rep[R_MIGRATIONS]
        self.migration_time_total += rep[R_MIG_TIME]

    def sim_arrays(self, a_tid: np.ndarray, a_host: np.ndarray,
                   duration: float) -> tuple:
        """Hot path: run one interval with pre-packed assignment arrays."""
        self._ensure_capacity(self.m + max(self._due_count(), 0))
        tables = self.st.tables_for(self._impl)
        m, nr, rep, _, log_rows, trace_rows = self._impl.simulate(
            tables, self.LF, self.LI, self.m, self.user_lat,
            self.clock, self.next_release, duration, a_tid, a_host,
            self.collect_log, self.collect_trace, False,
        )
        released = rep[R_RELEASED] + self._prereleased
        self.released_total += rep[R_RELEASED]
        self._prereleased = 0
        self.m = m
        self.next_release = nr
        self.clock += duration
        self.interval_index += 1
        self.completed_total += rep[R_COMPLETED]
        self.misses_total += rep[R_MISSES]
        self.migrations_total += rep[R_MIGRATIONS]
        self.migration_time_total += rep[R_MIG_TIME]
        if log_rows is not None:
            self.completed_log.extend(log_rows)
        if trace_rows is not None:
            self.trace.extend(trace_rows)
        return (released,) + rep[1:], log_rows

    def simulate_interval(self, assignment: Assignment | None = None,
                          duration: float | None = None) -> IntervalReport:
        dur = self.st.t_d if duration is None else duration
        items = sorted(assignment.items()) if assignment else []
        a_tid = np.array([k for k, _ in items], np.int64)
        a_host = np.array([v for _, v in items], np.int64)
        rep, log_rows = self.sim_arrays(a_tid, a_host, dur)
        return IntervalReport(
            duration=dur,
            released=rep[R_RELEASED],
            completed=rep[R_COMPLETED],
            misses=rep[R_MISSES],
            migrations=rep[R_MIGRATIONS],
            migration_time_s=rep[R_MIG_TIME],
            energy_comp_j=rep[R_E_COMP],
            energy_trans_j=rep[R_E_TRANS],
            response_sum_s=rep[R_RESP_SUM],
            trans_sum_s=rep[R_TRANS_SUM],
            conn_sum_s=rep[R_CONN_SUM],
            queue_sum_s=rep[R_QUEUE_SUM],
            comp_sum_s=rep[R_COMP_SUM],
            util_variance=rep[R_UTIL_VAR],
            pending_after=rep[R_PENDING],
            completed_rows=log_rows,
        )

    def trace_rows(self) -> list[tuple]:
        """Readable event trace: (time, kind, task, host)."""
        if self.trace is None:
            return []
        return [(t, TRACE_NAMES[k], tid, host) for (t, k, tid, host) in self.trace]

    def write_trace(self, path) -> int:
        """Newline-delimited event records: time, event kind, task, host.

        Debugging output; the format is documented but not
        stability-guaranteed.  Returns the number of records written.
        """
        rows = self.trace_rows()
        with open(path, "w") as fh:
            for (t, kind, tid, host) in rows:
                fh.write(f"{t:.9f} {kind} {tid} {host}\n")
        return len(rows)


def fork_state(state: SimState) -> SimState:
    """Deep value copy; mutations of the copy never touch the original."""
    return state.fork()


def build_state(instances: Sequence[WorkflowInstance], cluster: infra.ClusterState,
                net: infra.NetworkSpec | None = None, t_d: float = 1.0 / 60.0,
                renderer_local_s: float = 0.001, collect_log: bool = False,
                collect_trace: bool = False, impl=None) -> SimState:
    static = StaticData(instances, cluster, net or infra.NetworkSpec(), t_d,
                        renderer_local_s=renderer_local_s)
    return SimState(static, collect_log=collect_log, collect_trace=collect_trace,
                    impl=impl)


Scheduler = Callable[[SimState, list[int], rng.Stream], Assignment]


def run_scenario(instances: Sequence[WorkflowInstance], cluster: infra.ClusterState,
                 scheduler: Scheduler, horizon: int, seed: int, *,
                 net: infra.NetworkSpec | None = None, t_d: float = 1.0 / 60.0,
                 renderer_local_s: float = 0.001,
                 mobility: infra.MobilityModel | None = None,
                 reschedule_queued: bool = False,
                 collect_log: bool = True, collect_trace: bool = False,
                 label: str = "", users: int = 0,
                 impl=None) -> metrics.RunReport:
    """Drive a full run: release, mobility, schedule, simulate, accumulate.

    Deterministic per (inputs, seed) apart from the measured wall-clock
    schedule times.
    """
    state = build_state(instances, cluster, net=net, t_d=t_d,
                        renderer_local_s=renderer_local_s,
                        collect_log=collect_log, collect_trace=collect_trace,
                        impl=impl)
    base = rng.Stream(seed)
    sched_stream = base.child(rng.SCHEDULE)
    mob_stream = base.child(rng.MOBILITY)
    report = metrics.RunReport(scheduler=label or getattr(scheduler, "__name__", "scheduler"),
                               seed=seed, users=users)
    for i in range(horizon):
        state.release_due()
        if mobility is not None:
            state.apply_mobility(mobility, mob_stream.child(i).generator())
        pending = state.pending_tasks(reschedule_queued)
        t_start = time.perf_counter()
        try:
            assignment = scheduler(state, pending, sched_stream.child(i))
        except Exception as exc:
            raise SimulationError(f"scheduler failed at interval {i}: {exc}") from exc
        elapsed = time.perf_counter() - t_start
        interval = state.simulate_interval(assignment)
        metrics.accumulate(report, interval, elapsed)
    report.finalize(dropped=state.m, dropped_sla=state.unfinished_sla_count(),
                    workflows_released=int(np.unique(
                        state.st.instance[:state.next_release]).size) if state.next_release else 0)
    report.state = state
    return report
