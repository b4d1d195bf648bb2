"""Offloading schedulers behind one interface.

The headline policy is a look-ahead Monte Carlo tree search (MMCT): per
pending task it grows a small search tree whose nodes are (task, host)
decisions, scores expansions with one simulated interval on a forked state,
estimates long-term effect with N-step random rollouts, backpropagates a
discount-weighted reward, and stops early once one first-level decision has
an unbeatable visit count.  Baselines: the same search without early
termination, a myopic per-task greedy, a genetic algorithm and uniform
random placement.
"""

from __future__ import annotations

import math
import time
from functools import cached_property
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import rng
from ._layout import (
    R_COMPLETED, R_E_COMP, R_E_TRANS, R_MIGRATIONS, R_MISSES, R_RELEASED,
    R_RESP_SUM, R_UTIL_VAR, TIME_EPS,
)
from .objective import (
    NormalizationBounds, QosWeights, normalize_values, reward, score,
)
from .simcore import SimState

_EMPTY = np.zeros(0, np.int64)


class SchedulingError(ValueError):
    pass


class SchedulerKind(str, Enum):
    MMCT = "mmct"
    MCTS_PLAIN = "mcts_plain"
    GREEDY = "greedy"
    RANDOM = "random"
    GENETIC = "genetic"


class Decision(NamedTuple):
    task_id: int
    host_id: int


@dataclass
class MmctParams:
    c: float = 0.5  # exploration constant
    n_rollout: int = 7  # look-ahead depth N
    m_iter: int = 10  # iteration budget M per tree
    expansion_width: int = 4
    discount: float = 0.9  # backpropagation decay per look-ahead step
    commit_random_root: bool = False  # literal random-root committing variant

    def validate(self) -> None:
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c out of [0,1]")
        if self.n_rollout < 1 or self.m_iter < 1 or self.expansion_width < 1:
            raise ValueError("n_rollout, m_iter and expansion_width must be >= 1")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount out of (0,1]")


@dataclass
class GaParams:
    population: int = 20
    generations: int = 10
    tournament: int = 3
    crossover: float = 0.5
    mutation: float = 0.1


@dataclass
class QosSpec:
    weights: QosWeights = field(default_factory=QosWeights)
    bounds: NormalizationBounds = field(default_factory=NormalizationBounds)

    @cached_property
    def packed(self) -> tuple:
        """Weights and bounds as plain floats for the engine's fused path."""
        w, b = self.weights, self.bounds
        return (w.alpha, w.beta, w.gamma, w.delta,
                b.ars_min, b.ars_max, b.aec_min, b.aec_max)


@dataclass
class SearchNode:
    """Tree node: a decision plus the running value statistics."""

    decision: Decision | None  # None at the root
    q: float  # immediate reward of the decision's interval
    v: float = 0.0  # long-term reward estimate
    n: int = 1  # visits, counting the zero-valued initialization
    parent: int = -1  # arena index
    children: list[int] = field(default_factory=list)
    tasks_left: tuple[int, ...] = ()


@dataclass
class TreeStats:
    iterations: int = 0
    discard_triggered: bool = False


class _Draws:
    """Cursor over batched uniform draws from one generator."""

    __slots__ = ("gen", "buf", "i")

    def __init__(self, gen: np.random.Generator, batch: int = 64):
        self.gen = gen
        self.buf = gen.random(batch)
        self.i = 0

    def ensure(self, k: int) -> None:
        while len(self.buf) - self.i < k:
            self.buf = np.concatenate([self.buf, self.gen.random(len(self.buf))])

    def next(self) -> float:
        if self.i >= len(self.buf):
            self.buf = np.concatenate([self.buf, self.gen.random(len(self.buf))])
        v = self.buf[self.i]
        self.i += 1
        return float(v)

    def index(self, n: int) -> int:
        return int(self.next() * n)

    def take(self, k: int) -> np.ndarray:
        self.ensure(k)
        view = self.buf[self.i:self.i + k]
        self.i += k
        return view


_NO_DRAWS = np.zeros(0, np.float64)
_NO_CAND = np.zeros(0, np.int64)


class RolloutBlock(NamedTuple):
    """Shared look-ahead randomness: one priority and one host draw per
    candidate task.

    Candidates evaluated with the same block place the same future tasks on
    the same hosts, so their reward difference isolates the decisions under
    comparison."""

    cand_tid: np.ndarray
    cand_prio: np.ndarray
    host_draws: np.ndarray


def make_rollout_block(state: SimState, pool: list[int], n_steps: int,
                       draws: _Draws) -> RolloutBlock:
    due = state.due_within(n_steps)
    if pool:
        pool_np = np.array(pool, np.int64)
        cand = np.concatenate((pool_np, due)) if len(due) else pool_np
    elif len(due):
        cand = due
    else:
        cand = _NO_CAND
    return RolloutBlock(
        cand_tid=cand,
        cand_prio=draws.take(len(cand)),
        host_draws=draws.take(len(cand)),
    )


def _eval_decision(state: SimState, tids: list[int], hosts: list[int],
                   n_steps: int, block: RolloutBlock | None, exclude_tid: int,
                   qos: QosSpec) -> list[float]:
    """Fused evaluation of one candidate assignment (see SimState.eval_rollout)."""
    if block is None:
        return state.eval_rollout(tids, hosts, n_steps, _NO_CAND, _NO_DRAWS,
                                  -1, _NO_DRAWS, qos.packed)
    return state.eval_rollout(tids, hosts, n_steps, block.cand_tid,
                              block.cand_prio, exclude_tid, block.host_draws,
                              qos.packed)


def reward_of_report(rep: tuple, qos: QosSpec) -> float:
    """Reward of one simulated interval from the raw engine report."""
    completed = rep[R_COMPLETED]
    ars = rep[R_RESP_SUM] / completed if completed else 0.0
    vec = normalize_values(ars, rep[R_E_COMP] + rep[R_E_TRANS], rep[R_UTIL_VAR],
                           rep[R_MIGRATIONS], rep[R_MISSES], qos.bounds,
                           rep[R_RELEASED])
    return reward(score(vec, qos.weights))


def objective_of_report(rep: tuple, qos: QosSpec) -> float:
    return 1.0 - reward_of_report(rep, qos)


def _sim_assignment(state: SimState, tids: list[int], hosts: list[int],
                    qos: QosSpec):
    """One forked interval under the given assignment.

    Returns (reward, fork after the interval, release watermark before it).
    """
    fork = state.fork()
    seen_nr = fork.next_release
    a_tid = np.array(tids, np.int64) if tids else _EMPTY
    a_host = np.array(hosts, np.int64) if hosts else _EMPTY
    rep, _ = fork.sim_arrays(a_tid, a_host, state.st.t_d)
    return reward_of_report(rep, qos), fork, seen_nr


def _step_reward(fork: SimState, tid: int, host: int, qos: QosSpec) -> float:
    """Advance a rollout fork one interval with at most one new decision."""
    if tid >= 0:
        a_tid = np.array([tid], np.int64)
        a_host = np.array([host], np.int64)
    else:
        a_tid = _EMPTY
        a_host = _EMPTY
    rep, _ = fork.sim_arrays(a_tid, a_host, fork.st.t_d)
    return reward_of_report(rep, qos)


def ucb(v: float, n_child: int, n_parent: int, c: float) -> float:
    """Upper confidence bound used during selection."""
    return v + math.sqrt(c * math.log(n_parent) / n_child)


def select_leaf(arena: list[SearchNode], params: MmctParams, n_hosts: int) -> int:
    """Descend from the root to the first node that can still expand.

    Fully expanded nodes are crossed via the UCB rule; ties keep the
    earliest-created child.  A childless exhausted node is returned as a
    terminal leaf (it gets re-rolled instead of expanded).
    """
    ni = 0
    while True:
        node = arena[ni]
        capacity = min(params.expansion_width, len(node.tasks_left) * n_hosts)
        if len(node.children) < capacity:
            return ni
        if not node.children:
            return ni
        best = -1
        best_u = -math.inf
        for ci in node.children:
            child = arena[ci]
            u = ucb(child.v, child.n, node.n, params.c)
            if u > best_u:
                best_u = u
                best = ci
        ni = best


def _path_assignment(arena: list[SearchNode], ni: int,
                     context_tids: list[int], context_hosts: list[int]):
    """Committed context plus the decisions from the root down to a node."""
    path_t = list(context_tids)
    path_h = list(context_hosts)
    walk = ni
    extra_t: list[int] = []
    extra_h: list[int] = []
    while walk >= 0:
        nd = arena[walk]
        if nd.decision is not None:
            extra_t.append(nd.decision.task_id)
            extra_h.append(nd.decision.host_id)
        walk = nd.parent
    path_t += extra_t[::-1]
    path_h += extra_h[::-1]
    return path_t, path_h


def expand_leaf(arena: list[SearchNode], ni: int, state: SimState,
                context_tids: list[int], context_hosts: list[int],
                params: MmctParams, qos: QosSpec, draws: _Draws,
                block: RolloutBlock):
    """Sample up to expansion_width distinct decisions below a node.

    Every child's immediate reward q comes from one forked interval under
    the path assignment plus its decision, and every child is then
    simulated for N look-ahead steps on that same fork: its long-term score
    v starts as the discount-weighted value of its own rollout.  All
    children share the iteration's rollout block, so their values are
    directly comparable.  Returns (new arena indexes, their rollout
    values); both empty when the node's decision space is exhausted.
    """
    node = arena[ni]
    n_hosts = state.st.n_hosts
    space = len(node.tasks_left) * n_hosts
    width = min(params.expansion_width, space)
    if width <= 0:
        return [], []
    path_t, path_h = _path_assignment(arena, ni, context_tids, context_hosts)

    chosen: list[int] = []
    while len(chosen) < width:
        idx = draws.index(space)
        if idx not in chosen:
            chosen.append(idx)
    created = []
    values = []
    buf_t = np.empty(len(path_t) + 1, np.int64)
    buf_h = np.empty(len(path_h) + 1, np.int64)
    buf_t[:-1] = path_t
    buf_h[:-1] = path_h
    for idx in chosen:
        task = node.tasks_left[idx // n_hosts]
        host = idx % n_hosts
        buf_t[-1] = task
        buf_h[-1] = host
        seq = _eval_decision(state, buf_t, buf_h,
                             params.n_rollout, block, task, qos)
        r = rollout_value(seq, params.discount)
        child = SearchNode(decision=Decision(task, host), q=seq[0], v=r,
                           parent=ni,
                           tasks_left=tuple(t for t in node.tasks_left if t != task))
        arena.append(child)
        ci = len(arena) - 1
        node.children.append(ci)
        created.append(ci)
        values.append(r)
    return created, values


def rollout(fork: SimState, q0: float, block: RolloutBlock, params: MmctParams,
            qos: QosSpec, exclude_tid: int = -1) -> list[float]:
    """Reward sequence q_0..q_N: the node's own interval plus N look-ahead
    intervals, each assigning one uniformly random still-unassigned,
    already-released task (or nothing once none remain).

    The pick is the highest-priority remaining candidate of the block,
    which is a uniform draw.  The fused engine path computes the identical
    sequence without the per-interval round trips."""
    qs = [q0]
    st = fork.st
    n_hosts = st.n_hosts
    picked = [False] * len(block.cand_tid)
    for d in range(params.n_rollout):
        best = -1
        for k in range(len(block.cand_tid)):
            if picked[k]:
                continue
            t = int(block.cand_tid[k])
            if t == exclude_tid or st.release[t] > fork.clock + TIME_EPS:
                continue
            if best < 0 or block.cand_prio[k] > block.cand_prio[best]:
                best = k
        if best >= 0:
            picked[best] = True
            task = int(block.cand_tid[best])
            host = int(block.host_draws[best] * n_hosts)
        else:
            task = -1
            host = -1
        qs.append(_step_reward(fork, task, host, qos))
    return qs


def rollout_value(q_seq: list[float], discount: float) -> float:
    """Normalized discount-weighted sum of a reward sequence: steps farther
    from the node weigh less."""
    num = 0.0
    den = 0.0
    w = 1.0
    for q in q_seq:
        num += w * q
        den += w
        w *= discount
    return num / den


def _update_path(arena: list[SearchNode], path: list[int], r: float) -> None:
    for ni in path:
        node = arena[ni]
        node.n += 1
        node.v += (r - node.v) / node.n


def backpropagate(arena: list[SearchNode], path: list[int],
                  q_seq: list[float], discount: float) -> float:
    """Discount-weighted rollout value folded into every node on the path.

    Each node's v moves by the incremental mean, so a fresh (v=0, n=1)
    node's initialization counts as one zero-valued visit."""
    r = rollout_value(q_seq, discount)
    _update_path(arena, path, r)
    return r


def discard_check(arena: list[SearchNode], m_iter: int) -> int | None:
    """First-level child whose real visit count is already unbeatable.

    With one first-level visit per iteration, real visits (n - 1) beyond
    floor(M/2) cannot be overtaken in the remaining budget."""
    threshold = m_iter // 2
    for ci in arena[0].children:
        if arena[ci].n - 1 > threshold:
            return ci
    return None


def _search_tree(state: SimState, pool: list[int], context_tids: list[int],
                 context_hosts: list[int], params: MmctParams, qos: QosSpec,
                 gen: np.random.Generator, use_discard: bool,
                 stats: TreeStats | None = None,
                 unassigned_root: frozenset[int] | None = None,
                 arena_out: list | None = None) -> Decision:
    """Grow one tree over the remaining decision space and commit the best
    first-level decision (most visits; ties by value, then lowest ids)."""
    if unassigned_root is None:
        unassigned_root = frozenset(state.unassigned_tasks())
    arena = [SearchNode(decision=None, q=0.0, tasks_left=tuple(pool))]
    if arena_out is not None:
        arena_out.append(arena)
    draws = _Draws(gen)
    chosen_ci: int | None = None
    for _ in range(params.m_iter):
        ni = select_leaf(arena, params, state.st.n_hosts)
        node = arena[ni]
        path = []
        walk = ni
        while walk >= 0:
            path.append(walk)
            walk = arena[walk].parent
        path.reverse()
        # one shared look-ahead block per iteration: only still-unassigned
        # tasks are placed during rollouts (running re-decisions stay put)
        pool = [t for t in node.tasks_left if t in unassigned_root]
        block = make_rollout_block(state, pool, params.n_rollout, draws)
        created, values = expand_leaf(arena, ni, state, context_tids,
                                      context_hosts, params, qos, draws, block)
        if created:
            # one tree update per iteration: the expanded node (and its
            # ancestors) absorb the best continuation found under it
            _update_path(arena, path, max(values))
        else:
            # terminal leaf: replay its interval and re-roll from there
            path_t, path_h = _path_assignment(arena, ni, context_tids, context_hosts)
            q_seq = _eval_decision(state, path_t, path_h, params.n_rollout,
                                   block, -1, qos)
            backpropagate(arena, path, q_seq, params.discount)
        if stats is not None:
            stats.iterations += 1
        if use_discard:
            ci = discard_check(arena, params.m_iter)
            if ci is not None:
                chosen_ci = ci
                if stats is not None:
                    stats.discard_triggered = True
                break
    if chosen_ci is None:
        best = None
        for ci in arena[0].children:
            child = arena[ci]
            key = (-child.n, -child.v, child.decision.task_id, child.decision.host_id)
            if best is None or key < best[0]:
                best = (key, ci)
        chosen_ci = best[1]
    return arena[chosen_ci].decision


def mmct_schedule(state: SimState, pending: list[int], params: MmctParams,
                  qos: QosSpec, stream: rng.Stream, *, use_discard: bool = True,
                  stats: list[TreeStats] | None = None) -> dict[int, int]:
    """Assign every pending task, one committed decision per search tree.

    Trees are built over the pending tasks that have no placement yet.
    Pending tasks already in flight are confirmed at their current host:
    the look-ahead placed them once with their future cost in view, so
    re-rolling them through sparse candidate sampling would only inject
    migrations the search itself rates as harmful.  The myopic baselines
    keep re-placing in-flight work each interval, which is exactly where
    their migration churn comes from.
    """
    if not pending:
        return {}
    n_hosts = state.st.n_hosts
    if n_hosts == 0:
        raise SchedulingError("no hosts")
    assignment: dict[int, int] = {}
    unassigned_root = frozenset(state.unassigned_tasks())
    remaining = []
    for t in sorted(pending):
        if t in unassigned_root:
            remaining.append(t)
        else:
            assignment[t] = state.host_of(t)  # confirm in place
    # committed decisions are baked into a working fork so every tree's
    # evaluations pay only for their own path, not the whole context
    base = state.fork()
    tree_index = 0
    while remaining:
        gen = stream.child(tree_index).generator()
        if params.commit_random_root:
            draws = _Draws(gen, batch=8)
            t = remaining.pop(draws.index(len(remaining)))
            h = draws.index(n_hosts)
            assignment[t] = h
            base.apply_assignment({t: h})
            if not remaining:
                break
        tree_stats = TreeStats() if stats is not None else None
        decision = _search_tree(base, remaining, [], [], params, qos,
                                gen, use_discard, tree_stats,
                                unassigned_root=unassigned_root)
        if stats is not None:
            stats.append(tree_stats)
        assignment[decision.task_id] = decision.host_id
        base.apply_assignment({decision.task_id: decision.host_id})
        remaining.remove(decision.task_id)
        tree_index += 1
    return assignment


def mcts_plain_schedule(state: SimState, pending: list[int], params: MmctParams,
                        qos: QosSpec, stream: rng.Stream,
                        stats: list[TreeStats] | None = None) -> dict[int, int]:
    """MMCT without the early-termination rule: always runs the full budget."""
    return mmct_schedule(state, pending, params, qos, stream,
                         use_discard=False, stats=stats)


def greedy_schedule(state: SimState, pending: list[int], qos: QosSpec) -> dict[int, int]:
    """Myopic baseline: per task (deadline order), the host minimizing the
    objective of one simulated interval under the partial assignment."""
    if not pending:
        return {}
    n_hosts = state.st.n_hosts
    if n_hosts == 0:
        raise SchedulingError("no hosts")
    order = sorted(pending, key=lambda t: (state.st.deadline[t], t))
    tids: list[int] = []
    hosts: list[int] = []
    for t in order:
        best_h = -1
        best_y = math.inf
        for h in range(n_hosts):
            seq = _eval_decision(state, tids + [t], hosts + [h], 0, None, -1, qos)
            y = 1.0 - seq[0]
            if y < best_y:
                best_y = y
                best_h = h
        tids.append(t)
        hosts.append(best_h)
    return dict(zip(tids, hosts))


def random_schedule(state: SimState, pending: list[int],
                    stream: rng.Stream) -> dict[int, int]:
    if not pending:
        return {}
    n_hosts = state.st.n_hosts
    if n_hosts == 0:
        raise SchedulingError("no hosts")
    gen = stream.generator()
    hosts = gen.integers(0, n_hosts, size=len(pending))
    return {t: int(h) for t, h in zip(sorted(pending), hosts)}


def ga_schedule(state: SimState, pending: list[int], ga: GaParams,
                qos: QosSpec, stream: rng.Stream) -> dict[int, int]:
    """Genetic baseline: chromosome = host index per pending task, fitness =
    reward of one simulated interval; tournament selection, uniform
    crossover, per-gene mutation.  Returns the best individual ever seen.

    The operator set and parameter defaults are this package's own baseline
    choices (uniform-random init, no elitism), deterministic per seed."""
    if not pending:
        return {}
    n_hosts = state.st.n_hosts
    if n_hosts == 0:
        raise SchedulingError("no hosts")
    genes = sorted(pending)
    L = len(genes)
    P = ga.population
    gen = stream.generator()
    pop = gen.integers(0, n_hosts, size=(P, L))
    rows = np.arange(P)

    def fitness(chrom) -> float:
        return _eval_decision(state, genes, chrom, 0, None, -1, qos)[0]

    fits = np.array([fitness(c) for c in pop])
    best_i = int(np.argmax(fits))
    best = pop[best_i].copy()
    best_fit = float(fits[best_i])
    for _ in range(ga.generations):
        # tournament picks for both parents, then uniform crossover + mutation
        cand_a = gen.integers(0, P, size=(P, ga.tournament))
        cand_b = gen.integers(0, P, size=(P, ga.tournament))
        pa = pop[cand_a[rows, np.argmax(fits[cand_a], axis=1)]]
        pb = pop[cand_b[rows, np.argmax(fits[cand_b], axis=1)]]
        take_b = gen.random((P, L)) < ga.crossover
        children = np.where(take_b, pb, pa)
        mut = gen.random((P, L)) < ga.mutation
        children = np.where(mut, gen.integers(0, n_hosts, size=(P, L)), children)
        pop = children
        fits = np.array([fitness(c) for c in pop])
        gen_best = int(np.argmax(fits))
        if float(fits[gen_best]) > best_fit:
            best_fit = float(fits[gen_best])
            best = pop[gen_best].copy()
    return {t: int(h) for t, h in zip(genes, best)}


@dataclass
class SchedulerConfig:
    qos: QosSpec = field(default_factory=QosSpec)
    mmct: MmctParams = field(default_factory=MmctParams)
    ga: GaParams = field(default_factory=GaParams)


def schedule(kind: SchedulerKind | str, state: SimState, pending: list[int],
             cfg: SchedulerConfig, stream: rng.Stream) -> tuple[dict[int, int], float]:
    """Dispatch one scheduling call; returns (assignment, wall seconds)."""
    kind = SchedulerKind(kind)
    if pending and state.st.n_hosts == 0:
        raise SchedulingError("no hosts")
    t_start = time.perf_counter()
    if kind == SchedulerKind.MMCT:
        out = mmct_schedule(state, pending, cfg.mmct, cfg.qos, stream)
    elif kind == SchedulerKind.MCTS_PLAIN:
        out = mcts_plain_schedule(state, pending, cfg.mmct, cfg.qos, stream)
    elif kind == SchedulerKind.GREEDY:
        out = greedy_schedule(state, pending, cfg.qos)
    elif kind == SchedulerKind.RANDOM:
        out = random_schedule(state, pending, stream)
    else:
        out = ga_schedule(state, pending, cfg.ga, cfg.qos, stream)
    return out, time.perf_counter() - t_start


def make_scheduler(kind: SchedulerKind | str, cfg: SchedulerConfig):
    """Scheduler callable for the scenario driver."""
    kind = SchedulerKind(kind)

    def _run(state: SimState, pending: list[int], stream: rng.Stream):
        assignment, _ = schedule(kind, state, pending, cfg, stream)
        return assignment

    _run.__name__ = f"{kind.value}_scheduler"
    return _run
