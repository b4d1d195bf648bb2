"""Acceptance gate: every release criterion with its stated tolerance.

Each test prints one PASS/FAIL line (visible with -s or on failure).
Criteria with wall-clock budgets use the documented desk-scale scenarios;
independent runs execute in parallel worker processes where the
concurrency contract allows it.
"""

import math
import time

import numpy as np

from marsim import infra, rng, simcore
from marsim.config import validate_config
from marsim.experiments import run_grid, run_single
from marsim.objective import NormalizationBounds, QosWeights
from marsim.schedulers import (
    Decision, MmctParams, QosSpec, SearchNode, TreeStats, backpropagate,
    discard_check, greedy_schedule, mmct_schedule, reward_of_report,
    rollout_value, ucb,
)
from marsim.workflow import ComponentKind, TaskSpec, WorkflowInstance

from conftest import random_snapshot

T_D = 1.0 / 60.0


def _verdict(n: int, ok: bool, desc: str, detail: str = "") -> None:
    state = "PASS" if ok else "FAIL"
    line = f"criterion {n}: {state} - {desc}"
    if detail:
        line += f" [{detail}]"
    print(line, flush=True)
    assert ok, line


# -- 1. reference constants come out of an empty config ----------------------

def test_criterion_1_reference_defaults():
    cfg = validate_config(text="")
    checks = {
        "search exploration c": (cfg["mmct.c"], 0.5),
        "roll-out steps N": (cfg["mmct.n_rollout"], 7),
        "iteration budget M": (cfg["mmct.m_iter"], 10),
        "edge connect ms": (cfg["cluster.edge_connect_ms"], 0.5),
        "cloud connect ms": (cfg["cluster.cloud_connect_ms"], 5.0),
        "edge cores": (cfg["cluster.edge_cores"], 2),
        "edge mips": (cfg["cluster.edge_mips"], 4029),
        "cloud cores": (cfg["cluster.cloud_cores"], 8),
        "cloud mips": (cfg["cluster.cloud_mips"], 1601),
        "frames per second": (cfg["workload.fps"], 60),
    }
    bad = [k for k, (got, want) in checks.items() if got != want]
    _verdict(1, not bad, "empty config reproduces the reference constants",
             f"mismatches: {bad}" if bad else "10/10 exact")


# -- 8. search-math hand oracles ----------------------------------------------

def test_criterion_8_search_math():
    ok = True
    detail = []
    u_hi = ucb(0.9, 3, 4, 0.5)
    u_lo = ucb(0.1, 1, 4, 0.5)
    if not (u_hi == 0.9 + math.sqrt(0.5 * math.log(4) / 3) and round(u_hi, 3) == 1.381):
        ok = False
        detail.append(f"ucb high {u_hi}")
    if not (u_lo == 0.1 + math.sqrt(0.5 * math.log(4) / 1) and round(u_lo, 3) == 0.933):
        ok = False
        detail.append(f"ucb low {u_lo}")
    r = rollout_value([1.0, 0.0], 0.5)
    if r != (1.0 + 0.0) / 1.5:
        ok = False
        detail.append(f"R {r} != 2/3")
    arena = [SearchNode(decision=None, q=0, v=0.0, n=1),
             SearchNode(decision=Decision(1, 0), q=0.0, v=0.0, n=1, parent=0)]
    backpropagate(arena, [0, 1], [0.8], 0.9)
    if not (arena[1].v == 0.4 and arena[1].n == 2):
        ok = False
        detail.append(f"leaf update {(arena[1].v, arena[1].n)}")

    def depth1(real):
        root = SearchNode(decision=None, q=0, n=1 + sum(real), tasks_left=(1,))
        arena = [root]
        for i, rv in enumerate(real):
            arena.append(SearchNode(decision=Decision(1, i), q=0, v=0.5,
                                    n=rv + 1, parent=0))
            root.children.append(len(arena) - 1)
        return arena

    if discard_check(depth1([6, 2]), 10) != 1 or discard_check(depth1([5, 3]), 10) is not None:
        ok = False
        detail.append("discard boundary")
    _verdict(8, ok, "UCB, backpropagation and discard match hand oracles",
             "; ".join(detail) if detail else "all exact")


# -- 3. greedy equals the exhaustive per-task argmin ---------------------------

def _two_task_instance(gen):
    kinds = [ComponentKind.FEATURE_EXTRACTOR, ComponentKind.TRACKER,
             ComponentKind.MAPPER, ComponentKind.OBJECT_RECOGNIZER]
    tasks = []
    for tid in range(2):
        tasks.append(TaskSpec(
            task_id=tid, user_id=0, frame_index=0,
            kind=kinds[int(gen.integers(0, 4))],
            length=float(gen.uniform(5.0, 120.0)),
            input_size=float(gen.uniform(0.05, 1.5)) * 1e6,
            output_size=float(gen.uniform(0.01, 0.3)) * 1e6,
            deadline=float(gen.uniform(1.0, 4.0)) * T_D,
            predecessors=frozenset()))
    return [WorkflowInstance(0, 0, 0, tuple(tasks), 0.0)]


def test_criterion_3_greedy_oracle_optimality():
    qos = QosSpec()
    mismatches = 0
    n = 1000
    t0 = time.time()
    for i in range(n):
        gen = np.random.Generator(np.random.PCG64(i))
        state = simcore.build_state(_two_task_instance(gen),
                                    infra.default_cluster(1, 1), t_d=T_D)
        state.release_due()
        pending = state.pending_tasks()
        got = greedy_schedule(state, pending, qos)
        # independent oracle: enumerate hosts per task, in deadline order
        order = sorted(pending, key=lambda t: (state.st.deadline[t], t))
        tids, hosts = [], []
        for t in order:
            ys = []
            for h in range(state.st.n_hosts):
                fork = state.fork()
                items = sorted(zip(tids + [t], hosts + [h]))
                rep, _ = fork.sim_arrays(
                    np.array([k for k, _ in items], np.int64),
                    np.array([v for _, v in items], np.int64), T_D)
                ys.append(1.0 - reward_of_report(rep, qos))
            best = min(range(len(ys)), key=lambda h: (ys[h], h))
            tids.append(t)
            hosts.append(best)
        if got != dict(zip(tids, hosts)):
            mismatches += 1
    _verdict(3, mismatches == 0,
             "greedy matches exhaustive per-task argmin on 1000 instances",
             f"{n - mismatches}/{n} exact in {time.time() - t0:.1f}s")


# -- 2. early termination never changes the committed schedule -----------------

def test_criterion_2_discard_equivalence():
    params = MmctParams(m_iter=10, n_rollout=3)
    qos = QosSpec()
    cases = 0
    identical = 0
    strictly_fewer = 0
    seed = 0
    t0 = time.time()
    while cases < 100:
        seed += 1
        state = random_snapshot(seed, max_users=2, max_frames=4,
                                max_edge=4, max_cloud=2)
        pending = state.pending_tasks()[:8]
        if not pending:
            continue
        cases += 1
        s_on: list[TreeStats] = []
        s_off: list[TreeStats] = []
        a_on = mmct_schedule(state, pending, params, qos, rng.Stream(seed),
                             use_discard=True, stats=s_on)
        a_off = mmct_schedule(state, pending, params, qos, rng.Stream(seed),
                              use_discard=False, stats=s_off)
        it_on = sum(s.iterations for s in s_on)
        it_off = sum(s.iterations for s in s_off)
        if a_on == a_off and it_on <= it_off:
            identical += 1
        if it_on < it_off:
            strictly_fewer += 1
    ok = identical == 100 and strictly_fewer >= 1
    _verdict(2, ok, "discard on/off commit identical schedules on 100 snapshots",
             f"identical {identical}/100, fewer iterations in {strictly_fewer} "
             f"({time.time() - t0:.1f}s)")


# -- 6. simulator invariants over randomized runs ------------------------------

def test_criterion_6_simulator_invariants():
    from marsim.schedulers import SchedulerConfig, make_scheduler
    from marsim.workflow import WorkloadProfile, generate_workload
    t0 = time.time()
    failures = []
    for seed in range(50):
        gen = np.random.Generator(np.random.PCG64(seed))
        users = int(gen.integers(1, 4))
        frames = int(gen.integers(3, 9))
        n_edge = int(gen.integers(1, 4))
        n_cloud = int(gen.integers(0, 3))
        if n_edge + n_cloud == 0:
            n_edge = 1
        prof = WorkloadProfile(users=users, frames=frames)
        wl = generate_workload(prof, seed=seed)
        cluster = infra.default_cluster(n_edge, n_cloud)

        def one_run():
            return simcore.run_scenario(
                wl, cluster, make_scheduler("random", SchedulerConfig()),
                horizon=frames + 6, seed=seed, t_d=prof.t_d,
                mobility=infra.MobilityModel(), collect_log=True,
                collect_trace=True, label="random", users=users)

        rep = one_run()
        st = rep.state
        # conservation: released = completed + still pending, exactly
        if rep.tasks_released != rep.tasks_completed + st.m:
            failures.append((seed, "conservation"))
        # exact response decomposition per completed task
        for row in st.completed_log:
            tid, ready, fin, host, tr, co, qu, cp = row[:8]
            if abs((fin - ready) - (tr + co + qu + cp)) > 1e-9:
                failures.append((seed, "decomposition"))
                break
        # precedence via the event trace
        completed_at = {}
        for (t, kind, tid, host) in st.trace_rows():
            if kind == "complete":
                completed_at[tid] = t
        preds = [[] for _ in range(st.st.n_tasks)]
        for p in range(st.st.n_tasks):
            for k in range(st.st.succ_ptr[p], st.st.succ_ptr[p + 1]):
                preds[st.st.succ_idx[k]].append(p)
        for (t, kind, tid, host) in st.trace_rows():
            if kind == "start":
                for p in preds[tid]:
                    if p not in completed_at or completed_at[p] > t + 1e-12:
                        failures.append((seed, "precedence"))
                        break
        # energy lower bound: strictly above the idle floor when work ran
        idle = sum(h.idle_power for h in cluster.hosts) * rep.intervals * prof.t_d
        if rep.energy_j < idle - 1e-9 or (rep.tasks_completed and rep.energy_j <= idle):
            failures.append((seed, "energy"))
        # bit-deterministic event logs per seed
        rep2 = one_run()
        if rep2.state.trace != st.trace or rep2.state.completed_log != st.completed_log:
            failures.append((seed, "determinism"))
    _verdict(6, not failures, "simulator invariants hold on 50 randomized runs",
             f"violations: {failures[:4]}" if failures
             else f"50/50 clean ({time.time() - t0:.1f}s)")


# -- 4. look-ahead beats the myopic choice on a crafted migration trap ---------

def _trap_instances():
    # one deadline-tight long task plus a ticker stream that keeps every
    # objective window populated
    insts = [WorkflowInstance(0, 0, 0, (TaskSpec(
        task_id=0, user_id=0, frame_index=0, kind=ComponentKind.MAPPER,
        length=160.0, input_size=0.5e6, output_size=0.1e6,
        deadline=3.75 * T_D, predecessors=frozenset()),), 0.0)]
    for f in range(1, 13):
        insts.append(WorkflowInstance(f, 0, f, (TaskSpec(
            task_id=f, user_id=0, frame_index=f, kind=ComponentKind.TRACKER,
            length=1.0, input_size=0.05e6, output_size=0.01e6,
            deadline=2 * T_D, predecessors=frozenset()),), f * T_D))
    return insts


def _trap_state():
    cluster = infra.default_cluster(1, 1, edge_cores=1)
    net = infra.NetworkSpec(user_edge_bps=400e6, edge_cloud_bps=100e6)
    return simcore.build_state(_trap_instances(), cluster, net=net, t_d=T_D)


def _trap_qos():
    fleet_w = (10 + 20 * 1) + (40 + 80 * 8)
    return QosSpec(QosWeights(), NormalizationBounds(0, 8 * T_D, 0, fleet_w * T_D))


def test_criterion_4_lookahead_beats_myopic_trap():
    qos = _trap_qos()

    def total_y(h0, h1):
        st = _trap_state()
        ys = []
        for step in range(12):
            st.release_due()
            assign = {}
            if step == 0:
                assign[0] = h0
            elif step == 1 and st.task_row(0) is not None:
                assign[0] = h1
            for t in st.pending_tasks():
                if t != 0 and st.host_of(t) < 0:
                    assign[t] = 1  # tickers pinned identically in every sequence
            items = sorted(assign.items())
            rep, _ = st.sim_arrays(np.array([k for k, _ in items], np.int64),
                                   np.array([v for _, v in items], np.int64), T_D)
            ys.append(1.0 - reward_of_report(rep, qos))
        return sum(ys), st.misses_total, st.migrations_total

    seq = {(h0, h1): total_y(h0, h1) for h0 in (0, 1) for h1 in (0, 1)}
    best_edge = min(v[0] for k, v in seq.items() if k[0] == 0)
    best_cloud_key = min(((v[0], k) for k, v in seq.items() if k[0] == 1))[1]
    best_cloud = seq[best_cloud_key][0]
    enumeration_ok = best_edge < best_cloud
    forced_migration = seq[best_cloud_key][2] >= 1

    # the myopic baseline walks into the trap
    st = _trap_state()
    st.release_due()
    greedy_pick = greedy_schedule(st, st.pending_tasks(), qos)[0]

    # the look-ahead scheduler must avoid it in >= 9/10 seeds
    params = MmctParams(n_rollout=3, m_iter=50)
    wins = 0
    for seed in range(10):
        st = _trap_state()
        st.release_due()
        choice = mmct_schedule(st, st.pending_tasks(), params, qos,
                               rng.Stream(seed))[0]
        wins += choice == 0
    ok = enumeration_ok and forced_migration and greedy_pick == 1 and wins >= 9
    _verdict(4, ok, "look-ahead avoids the migration trap the myopic choice forces",
             f"enumeration: edge {best_edge:.4f} < cloud {best_cloud:.4f}, "
             f"optimal cloud continuation migrates={forced_migration}, "
             f"greedy picks cloud={greedy_pick == 1}, look-ahead edge {wins}/10")


# -- 7. schedule-time scalability ----------------------------------------------

def test_criterion_7_schedule_time_scales_linearly():
    cfg = validate_config(text="""
workload.frames = 60
run.drain_intervals = 12
mobility.enabled = false
""")
    t0 = time.time()
    times = {}
    for users in [5, 10, 20, 40]:
        rep = run_single(cfg, "mmct", seed=1, users=users)
        times[users] = rep.avg_schedule_time_ms
    base = times[5] / 5.0
    ratios = {u: times[u] / (base * u) for u in [10, 20, 40]}
    ok = all(r <= 2.0 for r in ratios.values())
    _verdict(7, ok, "look-ahead schedule time grows at most 2x the linear trend",
             ", ".join(f"{u} users: {times[u]:.1f} ms/interval (x{ratios.get(u, 1):.2f})"
                       for u in [5, 10, 20, 40]) + f" ({time.time() - t0:.0f}s)")


# -- 9. [secondary] chart pipeline agrees with the CLI summary ------------------

FRONTEND = __import__("pathlib").Path(__file__).resolve().parent.parent / "frontend"


def _frontend_cli():
    import subprocess
    cli = FRONTEND / "dist" / "cli.js"
    if not cli.exists():
        if not (FRONTEND / "node_modules").exists():
            subprocess.run(["npm", "install", "--no-audit", "--no-fund"],
                           cwd=FRONTEND, check=True, capture_output=True)
        subprocess.run(["npm", "run", "build"], cwd=FRONTEND, check=True,
                       capture_output=True)
    return cli


def _check_sidecars(outdir, suffix, summary_rows):
    import csv as csvmod
    from marsim.metrics import SUMMARY_METRICS
    problems = []
    for metric in SUMMARY_METRICS:
        svg = outdir / f"{metric}_{suffix}.svg"
        png = outdir / f"{metric}_{suffix}.png"
        values = outdir / f"{metric}_{suffix}.values.txt"
        if not (svg.exists() and png.exists() and values.exists()):
            problems.append(f"{metric}: missing files")
            continue
        rows = list(csvmod.DictReader(open(values)))
        want = {(r["scheduler"], r["users"]): r for r in summary_rows}
        if len(rows) != len(summary_rows):
            problems.append(f"{metric}: {len(rows)} sidecar rows != {len(summary_rows)}")
            continue
        for row in rows:
            ref = want[(row["scheduler"], str(row["users"]))]
            for col, refcol in [("mean", f"{metric}_mean"), ("std", f"{metric}_std")]:
                got = float(row[col])
                exp = float(ref[refcol])
                if abs(got - exp) > abs(exp) * 1e-5 + 1e-9:
                    problems.append(f"{metric}/{row['scheduler']}: {got} != {exp}")
    return problems


def test_criterion_9_secondary_chart_pipeline(tmp_path):
    import csv as csvmod
    import subprocess
    from marsim.cli import main as cli_main

    cli = _frontend_cli()
    cfg_path = tmp_path / "exp.toml"
    cfg_path.write_text("""
workload.users = 2
workload.frames = 5
cluster.edge_hosts = 2
cluster.cloud_hosts = 1
run.drain_intervals = 6
""")
    problems = []

    # compare across the full scheduler set
    cmp_csv = tmp_path / "compare.csv"
    cmp_summary = tmp_path / "compare_summary.csv"
    rc = cli_main(["-c", str(cfg_path), "compare",
                   "--schedulers", "mmct,mcts_plain,greedy,random,genetic",
                   "--seeds", "1,2", "--out", str(cmp_csv),
                   "--summary-out", str(cmp_summary)])
    assert rc == 0
    out_cmp = tmp_path / "charts_compare"
    subprocess.run(["node", str(cli), "compare", str(cmp_csv), str(out_cmp)],
                   check=True, capture_output=True)
    problems += _check_sidecars(out_cmp, "compare",
                                list(csvmod.DictReader(open(cmp_summary))))

    # sweep over three user counts
    sw_csv = tmp_path / "sweep.csv"
    sw_summary = tmp_path / "sweep_summary.csv"
    rc = cli_main(["-c", str(cfg_path), "sweep", "--users", "1,2,3",
                   "--schedulers", "random,greedy", "--seeds", "1,2",
                   "--out", str(sw_csv), "--summary-out", str(sw_summary)])
    assert rc == 0
    out_sw = tmp_path / "charts_sweep"
    subprocess.run(["node", str(cli), "sweep", str(sw_csv), str(out_sw)],
                   check=True, capture_output=True)
    problems += _check_sidecars(out_sw, "sweep",
                                list(csvmod.DictReader(open(sw_summary))))
    _verdict(9, not problems, "chart sidecar values equal the CLI summary "
             "to six significant digits",
             f"problems: {problems[:4]}" if problems else
             "6 compare + 6 sweep charts in both formats, all values matched")


# -- 5. qualitative ordering at desk scale --------------------------------------

def test_criterion_5_desk_scale_ordering():
    cfg = validate_config(text="""
workload.users = 10
workload.frames = 600
cluster.edge_hosts = 6
cluster.cloud_hosts = 4
""")
    seeds = list(range(1, 11))
    t0 = time.time()
    reports = run_grid(cfg, ["mmct", "greedy", "genetic", "random"], seeds,
                       workers=2)
    by = {(r.scheduler, r.seed): r for r in reports}
    sla_vs_random = sum(by[("mmct", s)].sla_violations <= by[("random", s)].sla_violations
                        for s in seeds)
    sla_vs_greedy = sum(by[("mmct", s)].sla_violations <= by[("greedy", s)].sla_violations
                        for s in seeds)
    mig_vs_ga = sum(by[("mmct", s)].migrations <= by[("genetic", s)].migrations
                    for s in seeds)
    ok = sla_vs_random >= 8 and sla_vs_greedy >= 8 and mig_vs_ga >= 8
    _verdict(5, ok, "desk-scale ordering holds in >= 8/10 seeds per clause",
             f"sla<=random {sla_vs_random}/10, sla<=greedy {sla_vs_greedy}/10, "
             f"migrations<=genetic {mig_vs_ga}/10 ({time.time() - t0:.0f}s)")
