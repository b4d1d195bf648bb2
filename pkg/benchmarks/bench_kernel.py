#!/usr/bin/env python3
"""Benchmark the compiled interval engine against the pure-Python twin.

Runs the same interval workload and the same look-ahead evaluations through
both engines, asserts the outputs are bit-identical, and reports throughput.

    python benchmarks/bench_kernel.py [--users 10] [--frames 30] [--evals 2000]
"""

import argparse
import time

import numpy as np

from marsim import infra, kernel, rng, simcore, workflow
from marsim.schedulers import SchedulerConfig, make_scheduler

def build(users, frames, impl):
    prof = workflow.WorkloadProfile(users=users, frames=frames)
    wl = workflow.generate_workload(prof, seed=1)
    cluster = infra.default_cluster(6, 4)
    return simcore.build_state(wl, cluster, t_d=prof.t_d, impl=impl)


def warm_state(users, frames, impl, warm=10):
    state = build(users, frames, impl)
    sched = make_scheduler("random", SchedulerConfig())
    stream = rng.Stream(1).child(rng.SCHEDULE)
    for i in range(warm):
        state.release_due()
        state.simulate_interval(sched(state, state.pending_tasks(), stream.child(i)))
    state.release_due()
    return state


def bench_intervals(impl, users, frames):
    state = build(users, frames, impl)
    sched = make_scheduler("random", SchedulerConfig())
    stream = rng.Stream(1).child(rng.SCHEDULE)
    horizon = frames + 12
    t0 = time.perf_counter()
    for i in range(horizon):
        state.release_due()
        state.simulate_interval(sched(state, state.pending_tasks(), stream.child(i)))
    dt = time.perf_counter() - t0
    digest = (state.completed_total, state.misses_total, state.migrations_total,
              float(state.LF[:state.m].sum()))
    return horizon / dt, digest


def bench_rollouts(impl, users, frames, evals):
    state = warm_state(users, frames, impl)
    pend = sorted(state.unassigned_tasks())
    gen = np.random.Generator(np.random.PCG64(7))
    cand = np.array(pend, np.int64)
    prio = gen.random(len(cand))
    hd = gen.random(len(cand))
    qpack = (0.3, 0.2, 0.2, 0.3, 0.0, 8 / 60, 0.0, 50.0)
    t0 = time.perf_counter()
    acc = 0.0
    for k in range(evals):
        qs = state.eval_rollout([pend[k % len(pend)]], [k % state.st.n_hosts],
                                7, cand, prio, pend[k % len(pend)], hd, qpack)
        acc += qs[-1]
    dt = time.perf_counter() - t0
    return evals / dt, acc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--users", type=int, default=10)
    ap.add_argument("--frames", type=int, default=30)
    ap.add_argument("--evals", type=int, default=2000)
    args = ap.parse_args()

    if kernel.compiled is None:
        print("compiled engine not built; nothing to compare")
        return 1

    print(f"workload: {args.users} users x {args.frames} frames, fleet 6 edge + 4 cloud")
    rows = []
    digests = {}
    for name, impl in [("compiled", kernel.compiled), ("pure-python", kernel.pure_python)]:
        ips, digest = bench_intervals(impl, args.users, args.frames)
        eps, acc = bench_rollouts(impl, args.users, args.frames, args.evals)
        rows.append((name, ips, eps))
        digests[name] = (digest, acc)
    assert digests["compiled"] == digests["pure-python"], \
        "engines diverged; parity broken"
    print("engines agree bit for bit on all outputs\n")
    print(f"{'engine':<14}{'driver intervals/s':>20}{'look-ahead evals/s':>22}")
    for name, ips, eps in rows:
        print(f"{name:<14}{ips:>20.1f}{eps:>22.1f}")
    base = rows[1]
    fast = rows[0]
    print(f"\nspeedup: driver x{fast[1] / base[1]:.1f}, look-ahead x{fast[2] / base[2]:.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
