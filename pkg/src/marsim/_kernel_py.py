"""Pure-Python interval engine.

Reference implementation of one simulation interval: releases due
workflows, applies the interval's assignment (paying transfers, connects
and migrations), serves host queues FIFO one task per core, clears DAG
dependencies as outputs arrive back at the device, and accounts energy and
response components.

The compiled engine (_kernel.pyx) mirrors this file operation for
operation; numerical results must be bit-identical.  Keep arithmetic
expressions in the same order in both.
"""

from __future__ import annotations

import heapq

import numpy as np

from ._layout import (
    EV_ARRIVAL, EV_COMPUTE_DONE, EV_DOWNLOAD_DONE, EV_LOCAL_DONE,
    F_AVAIL, F_COMP, F_CONN, F_CSTART, F_PHEND, F_QSINCE, F_QUEUE, F_READY,
    F_REM, F_TRANS,
    I_HOST, I_NMIG, I_PREDS, I_SLA, I_STARTED, I_STATUS, I_TID,
    S_APRED, S_DONE, S_DOWNLOAD, S_LOCAL, S_MIGRATE, S_QUEUED, S_READY,
    S_RUNNING, S_UPLOAD, S_WPRED,
    TIME_EPS,
    TR_ARRIVE, TR_ASSIGN, TR_COMPLETE, TR_COMPUTE_DONE, TR_MIGRATE, TR_MISS,
    TR_RELEASE, TR_START,
)

COMPILED = False

_EMPTY_I64 = np.zeros(0, np.int64)


def _clamp01(x):
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


class Tables:
    """Static per-run tables shared by every fork of a simulation state."""

    def __init__(self, release, deadline, length, inbits, outbits, user, local,
                 succ_ptr, succ_idx, pred_count,
                 h_tier, h_cores, h_mips, h_conn, h_busy_w, h_idle_w,
                 ue_bps, ec_bps, tx_edge_w, tx_cloud_w, local_s, state_fraction):
        self.release = release
        self.deadline = deadline
        self.length = length
        self.inbits = inbits
        self.outbits = outbits
        self.user = user
        self.local = local
        self.succ_ptr = succ_ptr
        self.succ_idx = succ_idx
        self.pred_count = pred_count
        self.h_tier = h_tier
        self.h_cores = h_cores
        self.h_mips = h_mips
        self.h_conn = h_conn
        self.h_busy_w = h_busy_w
        self.h_idle_w = h_idle_w
        self.ue_bps = ue_bps
        self.ec_bps = ec_bps
        self.tx_edge_w = tx_edge_w
        self.tx_cloud_w = tx_cloud_w
        self.local_s = local_s
        self.state_fraction = state_fraction
        self.n_tasks = len(release)
        self.n_hosts = len(h_tier)


def _bsearch(LI, m, tid):
    lo, hi = 0, m
    while lo < hi:
        mid = (lo + hi) // 2
        if LI[mid, I_TID] < tid:
            lo = mid + 1
        else:
            hi = mid
    if lo < m and LI[lo, I_TID] == tid:
        return lo
    return -1


def simulate(st, LF, LI, m, user_lat, clock, next_release, dur,
             a_tid, a_host,
             collect_log=False, collect_trace=False, collect_released=False):
    """Advance one interval of length `dur`.

    Mutates LF/LI/user-independent state in place (caller guarantees
    capacity for this interval's releases) and returns
    (m', next_release', report, released_tids, log_rows, trace_rows).
    """
    t0 = clock
    t1 = t0 + dur
    H = st.n_hosts

    released = 0
    completed = 0
    misses = 0
    migrations = 0
    mig_time = 0.0
    e_trans = 0.0
    resp_sum = 0.0
    trans_sum = 0.0
    conn_sum = 0.0
    queue_sum = 0.0
    comp_sum = 0.0

    released_tids = [] if collect_released else None
    log_rows = [] if collect_log else None
    trace = [] if collect_trace else None

    heap: list[tuple[float, int, int, int]] = []  # (time, kind, tid, li)
    # waiting tasks: parallel lists, popped by linear argmin (avail, tid)
    w_avail: list[float] = []
    w_tid: list[int] = []
    w_li: list[int] = []
    w_host: list[int] = []
    busy = [0.0] * H
    core_end = [None] * H  # per-host list of core free times

    # ---- releases -------------------------------------------------------
    while next_release < st.n_tasks and st.release[next_release] <= t0 + TIME_EPS:
        tid = next_release
        li = m
        LF[li, :] = 0.0
        LI[li, :] = 0
        LI[li, I_TID] = tid
        LI[li, I_HOST] = -1
        LI[li, I_PREDS] = st.pred_count[tid]
        LF[li, F_REM] = st.length[tid]
        LF[li, F_READY] = st.release[tid]
        if st.pred_count[tid] > 0:
            LI[li, I_STATUS] = S_WPRED
        else:
            LI[li, I_STATUS] = S_READY
            LF[li, F_QSINCE] = st.release[tid]
            # waiting unassigned counts as queuing from the release on
            d = t0 - st.release[tid]
            if d > 0.0:
                LF[li, F_QUEUE] += d
        m += 1
        next_release += 1
        released += 1
        if collect_released and not st.local[tid]:
            released_tids.append(tid)
        if collect_trace:
            trace.append((t0, TR_RELEASE, tid, -1))

    def tx_seconds_and_energy(bits, host, extra):
        # access segment always; backbone segment only for cloud peers;
        # extra latency applies to user-originated (uplink) routes only
        seg_u = bits / st.ue_bps
        if st.h_tier[host] == 1:
            seg_b = bits / st.ec_bps
            energy = st.tx_edge_w * seg_u + st.tx_cloud_w * seg_b
        else:
            seg_b = 0.0
            energy = st.tx_edge_w * seg_u
        return seg_u + seg_b + extra, energy

    def start_upload(li, now):
        nonlocal e_trans
        tid = LI[li, I_TID]
        h = LI[li, I_HOST]
        up, en = tx_seconds_and_energy(st.inbits[tid], h, user_lat[st.user[tid]])
        e_trans += en
        conn = st.h_conn[h]
        LF[li, F_TRANS] += up
        LF[li, F_CONN] += conn
        LF[li, F_AVAIL] = now + up + conn
        LI[li, I_STATUS] = S_UPLOAD
        if LF[li, F_AVAIL] <= t1:
            heapq.heappush(heap, (LF[li, F_AVAIL], EV_ARRIVAL, tid, li))

    # ---- pre-existing in-flight phases (from earlier intervals) ----------
    # Seeded before the assignment so phases created below don't get a
    # second event.  Stale arrivals (task re-routed this interval) are
    # filtered in the event loop by comparing against F_AVAIL.
    for li in range(m):
        status = LI[li, I_STATUS]
        if status in (S_UPLOAD, S_MIGRATE):
            if LF[li, F_AVAIL] <= t1:
                heapq.heappush(heap, (LF[li, F_AVAIL], EV_ARRIVAL, LI[li, I_TID], li))
        elif status == S_DOWNLOAD:
            if LF[li, F_PHEND] <= t1:
                heapq.heappush(heap, (LF[li, F_PHEND], EV_DOWNLOAD_DONE, LI[li, I_TID], li))
        elif status == S_LOCAL:
            if LF[li, F_PHEND] <= t1:
                heapq.heappush(heap, (LF[li, F_PHEND], EV_LOCAL_DONE, LI[li, I_TID], li))

    # ---- assignment -----------------------------------------------------
    for j in range(len(a_tid)):
        tid = int(a_tid[j])
        h = int(a_host[j])
        li = _bsearch(LI, m, tid)
        if li < 0:
            raise ValueError(f"invalid assignment: unknown task {tid}")
        if h < 0 or h >= H:
            raise ValueError(f"invalid assignment: unknown host {h}")
        status = LI[li, I_STATUS]
        if st.local[tid] or status in (S_DOWNLOAD, S_LOCAL, S_DONE):
            raise ValueError(f"invalid assignment: task {tid} is not schedulable")
        cur = LI[li, I_HOST]
        if cur == h:
            continue
        if collect_trace:
            trace.append((t0, TR_ASSIGN, tid, h))
        if cur < 0:
            LI[li, I_HOST] = h
            if status == S_READY:
                start_upload(li, t0)
            else:  # S_WPRED: dispatch when predecessors clear
                LI[li, I_STATUS] = S_APRED
            continue
        if status == S_APRED:
            # nothing dispatched yet: free re-target, not a migration
            LI[li, I_HOST] = h
            continue
        if st.h_tier[cur] == st.h_tier[h]:
            # moves inside a tier are neglected: instant re-queue, no cost,
            # not counted as a migration
            LI[li, I_HOST] = h
            LI[li, I_STATUS] = S_QUEUED
            LF[li, F_AVAIL] = t0
            LF[li, F_QSINCE] = t0
        else:
            migrations += 1
            LI[li, I_NMIG] += 1
            if collect_trace:
                trace.append((t0, TR_MIGRATE, tid, h))
            progress = 1.0 - LF[li, F_REM] / st.length[tid]
            payload = st.inbits[tid] + st.state_fraction * progress * st.outbits[tid]
            tx = payload / st.ec_bps
            d_mig = tx + st.h_conn[h]
            mig_time += d_mig
            e_trans += st.tx_cloud_w * d_mig
            LF[li, F_TRANS] += tx
            LF[li, F_CONN] += st.h_conn[h]
            LI[li, I_HOST] = h
            LI[li, I_STATUS] = S_MIGRATE
            LF[li, F_AVAIL] = t0 + d_mig
            if LF[li, F_AVAIL] <= t1:
                heapq.heappush(heap, (LF[li, F_AVAIL], EV_ARRIVAL, tid, li))

    # ---- seed cores and host queues (post-assignment statuses) -----------
    for h in range(H):
        core_end[h] = [t0] * st.h_cores[h]
    for li in range(m):
        status = LI[li, I_STATUS]
        if status == S_RUNNING:
            h = LI[li, I_HOST]
            end = t0 + LF[li, F_REM] / st.h_mips[h]
            slots = core_end[h]
            slots[slots.index(t0)] = end
            if end <= t1:
                heapq.heappush(heap, (end, EV_COMPUTE_DONE, LI[li, I_TID], li))
        elif status == S_QUEUED:
            w_avail.append(LF[li, F_AVAIL])
            w_tid.append(LI[li, I_TID])
            w_li.append(li)
            w_host.append(LI[li, I_HOST])

    def pop_waiting(h):
        best = -1
        for k in range(len(w_tid)):
            if w_host[k] != h:
                continue
            if best < 0 or (w_avail[k], w_tid[k]) < (w_avail[best], w_tid[best]):
                best = k
        if best < 0:
            return -1
        li = w_li[best]
        last = len(w_tid) - 1
        w_avail[best] = w_avail[last]
        w_tid[best] = w_tid[last]
        w_li[best] = w_li[last]
        w_host[best] = w_host[last]
        del w_avail[last], w_tid[last], w_li[last], w_host[last]
        return li

    def start_compute(li, s):
        tid = LI[li, I_TID]
        h = LI[li, I_HOST]
        q0 = LF[li, F_QSINCE]
        if q0 < t0:
            q0 = t0
        LF[li, F_QUEUE] += s - q0
        LI[li, I_STATUS] = S_RUNNING
        LI[li, I_STARTED] = 1
        LF[li, F_CSTART] = s
        end = s + LF[li, F_REM] / st.h_mips[h]
        slots = core_end[h]
        # take the earliest-free core
        c = 0
        for k in range(1, len(slots)):
            if slots[k] < slots[c]:
                c = k
        slots[c] = end
        if end <= t1:
            heapq.heappush(heap, (end, EV_COMPUTE_DONE, tid, li))
        if collect_trace:
            trace.append((s, TR_START, tid, h))

    # hosts whose cores freed up at t0 (e.g. a migration away) can start
    # queued work immediately
    for h in range(H):
        if not w_tid:
            break
        slots = core_end[h]
        while any(w == h for w in w_host):
            free = -1
            for k in range(len(slots)):
                if slots[k] <= t0:
                    free = k
                    break
            if free < 0:
                break
            li = pop_waiting(h)
            start_compute(li, t0)

    def complete(li, now):
        nonlocal completed, misses, resp_sum, trans_sum, conn_sum, queue_sum, comp_sum
        tid = LI[li, I_TID]
        LI[li, I_STATUS] = S_DONE
        completed += 1
        tr = LF[li, F_TRANS]
        co = LF[li, F_CONN]
        qu = LF[li, F_QUEUE]
        cp = LF[li, F_COMP]
        resp_sum += tr + co + qu + cp
        trans_sum += tr
        conn_sum += co
        queue_sum += qu
        comp_sum += cp
        if now > st.deadline[tid] + TIME_EPS and not LI[li, I_SLA]:
            LI[li, I_SLA] = 1
            misses += 1
            if collect_trace:
                trace.append((now, TR_MISS, tid, LI[li, I_HOST]))
        if collect_trace:
            trace.append((now, TR_COMPLETE, tid, LI[li, I_HOST]))
        if collect_log:
            log_rows.append((tid, LF[li, F_READY], now, LI[li, I_HOST],
                             tr, co, qu, cp, int(LI[li, I_SLA]), LI[li, I_NMIG]))
        for k in range(st.succ_ptr[tid], st.succ_ptr[tid + 1]):
            s_tid = st.succ_idx[k]
            sli = _bsearch(LI, m, s_tid)
            LI[sli, I_PREDS] -= 1
            if LI[sli, I_PREDS] == 0:
                LF[sli, F_READY] = now
                if st.local[s_tid]:
                    LI[sli, I_STATUS] = S_LOCAL
                    LF[sli, F_PHEND] = now + st.local_s
                    if LF[sli, F_PHEND] <= t1:
                        heapq.heappush(heap, (LF[sli, F_PHEND], EV_LOCAL_DONE, s_tid, sli))
                elif LI[sli, I_STATUS] == S_APRED:
                    start_upload(sli, now)
                else:
                    LI[sli, I_STATUS] = S_READY
                    LF[sli, F_QSINCE] = now

    def start_download(li, now):
        nonlocal e_trans
        tid = LI[li, I_TID]
        out = st.outbits[tid]
        if out > 0.0:
            dl, en = tx_seconds_and_energy(out, LI[li, I_HOST], 0.0)
            e_trans += en
            LF[li, F_TRANS] += dl
            LF[li, F_PHEND] = now + dl
            LI[li, I_STATUS] = S_DOWNLOAD
            if LF[li, F_PHEND] <= t1:
                heapq.heappush(heap, (LF[li, F_PHEND], EV_DOWNLOAD_DONE, tid, li))
        else:
            complete(li, now)

    # ---- event loop ------------------------------------------------------
    while heap:
        now, kind, tid, li = heapq.heappop(heap)
        if kind == EV_ARRIVAL:
            # drop stale arrivals of tasks re-routed after the push
            if LI[li, I_STATUS] not in (S_UPLOAD, S_MIGRATE) or LF[li, F_AVAIL] != now:
                continue
            h = LI[li, I_HOST]
            LF[li, F_QSINCE] = now
            LI[li, I_STATUS] = S_QUEUED
            if collect_trace:
                trace.append((now, TR_ARRIVE, tid, h))
            slots = core_end[h]
            free = -1
            for k in range(len(slots)):
                if slots[k] <= now:
                    free = k
                    break
            if free >= 0:
                start_compute(li, now)
            else:
                w_avail.append(now)
                w_tid.append(tid)
                w_li.append(li)
                w_host.append(h)
        elif kind == EV_COMPUTE_DONE:
            h = LI[li, I_HOST]
            cs = LF[li, F_CSTART]
            if cs < t0:
                cs = t0
            d = now - cs
            LF[li, F_COMP] += d
            busy[h] += d
            LF[li, F_REM] = 0.0
            # the freed core's slot already holds `now`, i.e. free from now on
            if collect_trace:
                trace.append((now, TR_COMPUTE_DONE, tid, h))
            nli = pop_waiting(h)
            if nli >= 0:
                start_compute(nli, now)
            start_download(li, now)
        elif kind == EV_DOWNLOAD_DONE:
            complete(li, now)
        else:  # EV_LOCAL_DONE
            LF[li, F_COMP] += st.local_s
            complete(li, now)

    # ---- end-of-interval sweep -------------------------------------------
    for li in range(m):
        status = LI[li, I_STATUS]
        if status == S_RUNNING:
            h = LI[li, I_HOST]
            cs = LF[li, F_CSTART]
            if cs < t0:
                cs = t0
            d = t1 - cs
            rem = LF[li, F_REM] - d * st.h_mips[h]
            LF[li, F_REM] = rem if rem > 0.0 else 0.0
            LF[li, F_COMP] += d
            busy[h] += d
        elif status in (S_QUEUED, S_READY):
            q0 = LF[li, F_QSINCE]
            if q0 < t0:
                q0 = t0
            LF[li, F_QUEUE] += t1 - q0
        if status != S_DONE and not LI[li, I_SLA]:
            tid = LI[li, I_TID]
            if t1 > st.deadline[tid] + TIME_EPS:
                LI[li, I_SLA] = 1
                misses += 1
                if collect_trace:
                    trace.append((t1, TR_MISS, tid, LI[li, I_HOST]))

    # per-host core utilization spread (population variance); zero-length
    # intervals (assignment-only application) have no utilization window
    util_var = 0.0
    if dur > 0.0:
        mean_u = 0.0
        for h in range(H):
            mean_u += busy[h] / (st.h_cores[h] * dur)
        mean_u /= H
        for h in range(H):
            u = busy[h] / (st.h_cores[h] * dur)
            util_var += (u - mean_u) * (u - mean_u)
        util_var /= H

    e_comp = 0.0
    for h in range(H):
        e_comp += st.h_idle_w[h] * dur + (st.h_busy_w[h] - st.h_idle_w[h]) * busy[h]

    # compact completed rows, keeping tid order
    if completed:
        w = 0
        for li in range(m):
            if LI[li, I_STATUS] != S_DONE:
                if w != li:
                    LF[w, :] = LF[li, :]
                    LI[w, :] = LI[li, :]
                w += 1
        m = w

    report = (released, completed, misses, migrations, mig_time,
              e_comp, e_trans, resp_sum, trans_sum, conn_sum, queue_sum,
              comp_sum, util_var, m)
    return m, next_release, report, released_tids, log_rows, trace


def rollout_eval(st, LF, LI, m, user_lat, clock, next_release, dur,
                 a_tid, a_host, n_steps,
                 cand_tid, cand_prio, exclude_tid, host_draws, prereleased,
                 alpha, beta, gamma, delta, ars_min, ars_max, aec_min, aec_max,
                 scratchF, scratchI):
    """Reward sequence of a decision: the assigned interval plus n_steps
    look-ahead intervals.

    At each look-ahead step, one still-unassigned task is placed on a
    uniformly drawn host.  The task is the highest-priority released
    candidate (cand_prio holds one iid uniform draw per candidate, so the
    argmax is a uniform pick) and the host comes from the task's own draw
    in host_draws.  Decisions sharing one priority/host block therefore
    place the same future tasks on the same hosts, so their reward
    difference isolates the decisions themselves.  Runs on the scratch
    copy; the source state is untouched.
    """
    if m > 0:
        scratchF[:m] = LF[:m]
        scratchI[:m] = LI[:m]
    qs = []
    cl = clock
    nr = next_release
    mm = m
    n_cand = len(cand_tid)
    picked = [False] * n_cand
    hi = 0  # candidates are tid-ordered, hence release-ordered
    at, ah = a_tid, a_host
    one_t = np.empty(1, np.int64)
    one_h = np.empty(1, np.int64)
    for step in range(n_steps + 1):
        if step > 0:
            while hi < n_cand and st.release[cand_tid[hi]] <= cl + TIME_EPS:
                hi += 1
            best = -1
            for k in range(hi):
                if picked[k] or cand_tid[k] == exclude_tid:
                    continue
                if best < 0 or cand_prio[k] > cand_prio[best]:
                    best = k
            if best >= 0:
                picked[best] = True
                one_t[0] = cand_tid[best]
                one_h[0] = int(host_draws[best] * st.n_hosts)
                at, ah = one_t, one_h
            else:
                at, ah = _EMPTY_I64, _EMPTY_I64
        mm, nr, rep, _, _, _ = simulate(st, scratchF, scratchI, mm, user_lat,
                                        cl, nr, dur, at, ah)
        cl = cl + dur
        rel = rep[0] + (prereleased if step == 0 else 0)
        completed = rep[1]
        ars = rep[7] / completed if completed else 0.0
        aec = rep[5] + rep[6]
        ars_n = _clamp01((ars - ars_min) / (ars_max - ars_min))
        aec_n = _clamp01((aec - aec_min) / (aec_max - aec_min))
        if rel > 0:
            mig_term = rep[3] / rel
            sla_n = _clamp01(rep[2] / rel)
        else:
            mig_term = 0.0
            sla_n = 0.0
        hc_n = _clamp01(0.5 * (rep[12] / 0.25) + 0.5 * mig_term)
        y = alpha * ars_n + beta * aec_n + gamma * hc_n + delta * sla_n
        qs.append(1.0 - y)
    return qs
