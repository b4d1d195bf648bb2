# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled interval engine.

Mirror of _kernel_py: simulate() advances one interval; rollout_eval()
fuses a whole decision evaluation (one assigned interval plus N look-ahead
intervals with one random placement each) on an internal scratch copy, so
look-ahead search pays one Python call per evaluated decision.  Arithmetic
matches the pure-Python engine bit for bit.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memcpy


cdef enum:
    F_REM = 0
    F_READY = 1
    F_AVAIL = 2
    F_QSINCE = 3
    F_CSTART = 4
    F_PHEND = 5
    F_TRANS = 6
    F_CONN = 7
    F_QUEUE = 8
    F_COMP = 9

cdef enum:
    I_TID = 0
    I_STATUS = 1
    I_HOST = 2
    I_PREDS = 3
    I_STARTED = 4
    I_SLA = 5
    I_NMIG = 6

cdef enum:
    S_WPRED = 0
    S_READY = 1
    S_APRED = 2
    S_UPLOAD = 3
    S_MIGRATE = 4
    S_QUEUED = 5
    S_RUNNING = 6
    S_DOWNLOAD = 7
    S_LOCAL = 8
    S_DONE = 9

cdef enum:
    EV_ARRIVAL = 0
    EV_COMPUTE_DONE = 1
    EV_DOWNLOAD_DONE = 2
    EV_LOCAL_DONE = 3

cdef enum:
    TR_RELEASE = 0
    TR_ASSIGN = 1
    TR_MIGRATE = 2
    TR_ARRIVE = 3
    TR_START = 4
    TR_COMPUTE_DONE = 5
    TR_COMPLETE = 6
    TR_MISS = 7

cdef double TIME_EPS = 1e-9

COMPILED = True


cdef class Tables:
    """Static per-run tables shared by every fork of a simulation state."""

    cdef double[::1] release
    cdef double[::1] deadline
    cdef double[::1] length
    cdef double[::1] inbits
    cdef double[::1] outbits
    cdef int[::1] user
    cdef signed char[::1] local
    cdef int[::1] succ_ptr
    cdef int[::1] succ_idx
    cdef int[::1] pred_count
    cdef signed char[::1] h_tier
    cdef int[::1] h_cores
    cdef double[::1] h_mips
    cdef double[::1] h_conn
    cdef double[::1] h_busy_w
    cdef double[::1] h_idle_w
    cdef double ue_bps, ec_bps, tx_edge_w, tx_cloud_w, local_s, state_fraction
    cdef int n_tasks, n_hosts, max_cores
    # reusable evaluation workspace; one simulation context per process
    cdef _Sim scratch_sim
    cdef int scratch_cap

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
        cdef int h, mc = 1
        for h in range(self.n_hosts):
            if self.h_cores[h] > mc:
                mc = self.h_cores[h]
        self.max_cores = mc
        self.scratch_sim = None
        self.scratch_cap = 0


cdef class _Sim:
    """Scratch workspace plus per-interval accumulators."""

    cdef Tables st
    cdef double[:, ::1] LF
    cdef long long[:, ::1] LI
    cdef double[::1] user_lat
    cdef int m
    cdef double t0, t1
    # event heap ordered by (time, kind, tid)
    cdef double* ev_time
    cdef int* ev_kind
    cdef int* ev_tid
    cdef int* ev_li
    cdef int ev_n, ev_cap
    # host queues (flat; popped by argmin (avail, tid) per host)
    cdef double* w_avail
    cdef int* w_tid
    cdef int* w_li
    cdef int* w_host
    cdef int w_n, w_cap
    cdef double* core_end  # n_hosts * max_cores
    cdef double* busy
    cdef int released, completed, misses, migrations
    cdef double mig_time, e_trans, resp_sum, trans_sum, conn_sum, queue_sum, comp_sum
    cdef double util_var, e_comp
    cdef bint collect_log, collect_trace, collect_released
    cdef list log_rows, trace, released_tids

    def __dealloc__(self):
        if self.ev_time != NULL:
            free(self.ev_time)
            free(self.ev_kind)
            free(self.ev_tid)
            free(self.ev_li)
            free(self.w_avail)
            free(self.w_tid)
            free(self.w_li)
            free(self.w_host)
            free(self.core_end)
            free(self.busy)

    cdef int alloc(self, int cap_tasks) except -1:
        cdef int H = self.st.n_hosts
        self.ev_cap = 8 * cap_tasks + 64
        self.w_cap = cap_tasks + 1
        self.ev_time = <double*>malloc(self.ev_cap * sizeof(double))
        self.ev_kind = <int*>malloc(self.ev_cap * sizeof(int))
        self.ev_tid = <int*>malloc(self.ev_cap * sizeof(int))
        self.ev_li = <int*>malloc(self.ev_cap * sizeof(int))
        self.w_avail = <double*>malloc(self.w_cap * sizeof(double))
        self.w_tid = <int*>malloc(self.w_cap * sizeof(int))
        self.w_li = <int*>malloc(self.w_cap * sizeof(int))
        self.w_host = <int*>malloc(self.w_cap * sizeof(int))
        self.core_end = <double*>malloc(H * self.st.max_cores * sizeof(double))
        self.busy = <double*>malloc(H * sizeof(double))
        if (self.ev_time == NULL or self.ev_kind == NULL or self.ev_tid == NULL
                or self.ev_li == NULL or self.w_avail == NULL or self.w_tid == NULL
                or self.w_li == NULL or self.w_host == NULL
                or self.core_end == NULL or self.busy == NULL):
            raise MemoryError()
        self.ev_n = 0
        self.w_n = 0
        return 0

    cdef inline bint ev_less(self, int a, int b):
        if self.ev_time[a] != self.ev_time[b]:
            return self.ev_time[a] < self.ev_time[b]
        if self.ev_kind[a] != self.ev_kind[b]:
            return self.ev_kind[a] < self.ev_kind[b]
        return self.ev_tid[a] < self.ev_tid[b]

    cdef inline void ev_swap(self, int a, int b):
        cdef double td = self.ev_time[a]
        cdef int tk = self.ev_kind[a], tt = self.ev_tid[a], tl = self.ev_li[a]
        self.ev_time[a] = self.ev_time[b]
        self.ev_kind[a] = self.ev_kind[b]
        self.ev_tid[a] = self.ev_tid[b]
        self.ev_li[a] = self.ev_li[b]
        self.ev_time[b] = td
        self.ev_kind[b] = tk
        self.ev_tid[b] = tt
        self.ev_li[b] = tl

    cdef int push_event(self, double t, int kind, int tid, int li) except -1:
        cdef int i, parent
        if self.ev_n >= self.ev_cap:
            raise RuntimeError("event heap overflow")
        i = self.ev_n
        self.ev_time[i] = t
        self.ev_kind[i] = kind
        self.ev_tid[i] = tid
        self.ev_li[i] = li
        self.ev_n += 1
        while i > 0:
            parent = (i - 1) >> 1
            if self.ev_less(i, parent):
                self.ev_swap(i, parent)
                i = parent
            else:
                break
        return 0

    cdef void pop_event(self):
        # caller reads slot 0 before popping
        cdef int i = 0, left, right, smallest
        self.ev_n -= 1
        if self.ev_n == 0:
            return
        self.ev_swap(0, self.ev_n)
        while True:
            left = 2 * i + 1
            right = left + 1
            smallest = i
            if left < self.ev_n and self.ev_less(left, smallest):
                smallest = left
            if right < self.ev_n and self.ev_less(right, smallest):
                smallest = right
            if smallest == i:
                break
            self.ev_swap(i, smallest)
            i = smallest

    cdef int pop_waiting(self, int h):
        cdef int k, best = -1, li, last
        for k in range(self.w_n):
            if self.w_host[k] != h:
                continue
            if best < 0 or self.w_avail[k] < self.w_avail[best] or \
                    (self.w_avail[k] == self.w_avail[best] and self.w_tid[k] < self.w_tid[best]):
                best = k
        if best < 0:
            return -1
        li = self.w_li[best]
        last = self.w_n - 1
        self.w_avail[best] = self.w_avail[last]
        self.w_tid[best] = self.w_tid[last]
        self.w_li[best] = self.w_li[last]
        self.w_host[best] = self.w_host[last]
        self.w_n = last
        return li

    cdef bint host_waiting(self, int h):
        cdef int k
        for k in range(self.w_n):
            if self.w_host[k] == h:
                return True
        return False

    cdef int start_upload(self, int li, double now) except -1:
        cdef Tables st = self.st
        cdef int tid = <int>self.LI[li, I_TID]
        cdef int h = <int>self.LI[li, I_HOST]
        cdef double seg_u, seg_b, en, up, conn
        seg_u = st.inbits[tid] / st.ue_bps
        if st.h_tier[h] == 1:
            seg_b = st.inbits[tid] / st.ec_bps
            en = st.tx_edge_w * seg_u + st.tx_cloud_w * seg_b
        else:
            seg_b = 0.0
            en = st.tx_edge_w * seg_u
        up = seg_u + seg_b + self.user_lat[st.user[tid]]
        self.e_trans += en
        conn = st.h_conn[h]
        self.LF[li, F_TRANS] += up
        self.LF[li, F_CONN] += conn
        self.LF[li, F_AVAIL] = now + up + conn
        self.LI[li, I_STATUS] = S_UPLOAD
        if self.LF[li, F_AVAIL] <= self.t1:
            self.push_event(self.LF[li, F_AVAIL], EV_ARRIVAL, tid, li)
        return 0

    cdef int start_compute(self, int li, double s) except -1:
        cdef Tables st = self.st
        cdef int tid = <int>self.LI[li, I_TID]
        cdef int h = <int>self.LI[li, I_HOST]
        cdef double q0 = self.LF[li, F_QSINCE]
        cdef double end
        cdef int c, k
        cdef double* slots = self.core_end + h * st.max_cores
        if q0 < self.t0:
            q0 = self.t0
        self.LF[li, F_QUEUE] += s - q0
        self.LI[li, I_STATUS] = S_RUNNING
        self.LI[li, I_STARTED] = 1
        self.LF[li, F_CSTART] = s
        end = s + self.LF[li, F_REM] / st.h_mips[h]
        c = 0
        for k in range(1, st.h_cores[h]):
            if slots[k] < slots[c]:
                c = k
        slots[c] = end
        if end <= self.t1:
            self.push_event(end, EV_COMPUTE_DONE, tid, li)
        if self.collect_trace:
            self.trace.append((s, TR_START, tid, h))
        return 0

    cdef int complete(self, int li, double now) except -1:
        cdef Tables st = self.st
        cdef int tid = <int>self.LI[li, I_TID]
        cdef int s_tid, sli, k
        cdef double tr, co, qu, cp
        self.LI[li, I_STATUS] = S_DONE
        self.completed += 1
        tr = self.LF[li, F_TRANS]
        co = self.LF[li, F_CONN]
        qu = self.LF[li, F_QUEUE]
        cp = self.LF[li, F_COMP]
        self.resp_sum += tr + co + qu + cp
        self.trans_sum += tr
        self.conn_sum += co
        self.queue_sum += qu
        self.comp_sum += cp
        if now > st.deadline[tid] + TIME_EPS and not self.LI[li, I_SLA]:
            self.LI[li, I_SLA] = 1
            self.misses += 1
            if self.collect_trace:
                self.trace.append((now, TR_MISS, tid, <int>self.LI[li, I_HOST]))
        if self.collect_trace:
            self.trace.append((now, TR_COMPLETE, tid, <int>self.LI[li, I_HOST]))
        if self.collect_log:
            self.log_rows.append((tid, self.LF[li, F_READY], now, <int>self.LI[li, I_HOST],
                                  tr, co, qu, cp, <int>self.LI[li, I_SLA],
                                  <int>self.LI[li, I_NMIG]))
        for k in range(st.succ_ptr[tid], st.succ_ptr[tid + 1]):
            s_tid = st.succ_idx[k]
            sli = self.bsearch(s_tid)
            self.LI[sli, I_PREDS] -= 1
            if self.LI[sli, I_PREDS] == 0:
                self.LF[sli, F_READY] = now
                if st.local[s_tid]:
                    self.LI[sli, I_STATUS] = S_LOCAL
                    self.LF[sli, F_PHEND] = now + st.local_s
                    if self.LF[sli, F_PHEND] <= self.t1:
                        self.push_event(self.LF[sli, F_PHEND], EV_LOCAL_DONE, s_tid, sli)
                elif self.LI[sli, I_STATUS] == S_APRED:
                    self.start_upload(sli, now)
                else:
                    self.LI[sli, I_STATUS] = S_READY
                    self.LF[sli, F_QSINCE] = now
        return 0

    cdef int start_download(self, int li, double now) except -1:
        cdef Tables st = self.st
        cdef int tid = <int>self.LI[li, I_TID]
        cdef int h
        cdef double out = st.outbits[tid]
        cdef double seg_u, seg_b, en, dl
        if out > 0.0:
            h = <int>self.LI[li, I_HOST]
            seg_u = out / st.ue_bps
            if st.h_tier[h] == 1:
                seg_b = out / st.ec_bps
                en = st.tx_edge_w * seg_u + st.tx_cloud_w * seg_b
            else:
                seg_b = 0.0
                en = st.tx_edge_w * seg_u
            # extra latency applies to uplink routes only
            dl = seg_u + seg_b
            self.e_trans += en
            self.LF[li, F_TRANS] += dl
            self.LF[li, F_PHEND] = now + dl
            self.LI[li, I_STATUS] = S_DOWNLOAD
            if self.LF[li, F_PHEND] <= self.t1:
                self.push_event(self.LF[li, F_PHEND], EV_DOWNLOAD_DONE, tid, li)
        else:
            self.complete(li, now)
        return 0

    cdef int bsearch(self, int tid):
        cdef int lo = 0, hi = self.m, mid
        while lo < hi:
            mid = (lo + hi) >> 1
            if self.LI[mid, I_TID] < tid:
                lo = mid + 1
            else:
                hi = mid
        if lo < self.m and self.LI[lo, I_TID] == tid:
            return lo
        return -1

    cdef int run_interval(self, int m, double clock, int next_release, double dur,
                          long long[::1] a_tid, long long[::1] a_host,
                          int* out_m, int* out_nr) except -1:
        """One interval over self.LF/LI; mirrors _kernel_py.simulate."""
        cdef Tables T = self.st
        cdef double[:, ::1] LF = self.LF
        cdef long long[:, ::1] LI = self.LI
        cdef int H = T.n_hosts
        cdef int mc = T.max_cores
        cdef int li, h, k, j, tid, cur, free_slot, nli, status, w
        cdef double t0 = clock, t1 = clock + dur
        cdef double end, now, d, q0, rem, progress, payload, tx, d_mig, cs
        cdef double mean_u, u
        cdef double* slots
        cdef int ev_kind_now

        self.t0 = t0
        self.t1 = t1
        self.ev_n = 0
        self.w_n = 0
        self.released = 0
        self.completed = 0
        self.misses = 0
        self.migrations = 0
        self.mig_time = 0.0
        self.e_trans = 0.0
        self.resp_sum = 0.0
        self.trans_sum = 0.0
        self.conn_sum = 0.0
        self.queue_sum = 0.0
        self.comp_sum = 0.0

        # ---- releases ----
        while next_release < T.n_tasks and T.release[next_release] <= t0 + TIME_EPS:
            tid = next_release
            li = m
            for k in range(10):
                LF[li, k] = 0.0
            for k in range(7):
                LI[li, k] = 0
            LI[li, I_TID] = tid
            LI[li, I_HOST] = -1
            LI[li, I_PREDS] = T.pred_count[tid]
            LF[li, F_REM] = T.length[tid]
            LF[li, F_READY] = T.release[tid]
            if T.pred_count[tid] > 0:
                LI[li, I_STATUS] = S_WPRED
            else:
                LI[li, I_STATUS] = S_READY
                LF[li, F_QSINCE] = T.release[tid]
                d = t0 - T.release[tid]
                if d > 0.0:
                    LF[li, F_QUEUE] += d
            m += 1
            next_release += 1
            self.released += 1
            if self.collect_released and not T.local[tid]:
                self.released_tids.append(tid)
            if self.collect_trace:
                self.trace.append((t0, TR_RELEASE, tid, -1))
        self.m = m

        # ---- pre-existing in-flight phases ----
        for li in range(m):
            status = <int>LI[li, I_STATUS]
            if status == S_UPLOAD or status == S_MIGRATE:
                if LF[li, F_AVAIL] <= t1:
                    self.push_event(LF[li, F_AVAIL], EV_ARRIVAL, <int>LI[li, I_TID], li)
            elif status == S_DOWNLOAD:
                if LF[li, F_PHEND] <= t1:
                    self.push_event(LF[li, F_PHEND], EV_DOWNLOAD_DONE, <int>LI[li, I_TID], li)
            elif status == S_LOCAL:
                if LF[li, F_PHEND] <= t1:
                    self.push_event(LF[li, F_PHEND], EV_LOCAL_DONE, <int>LI[li, I_TID], li)

        # ---- assignment ----
        for j in range(a_tid.shape[0]):
            tid = <int>a_tid[j]
            h = <int>a_host[j]
            li = self.bsearch(tid)
            if li < 0:
                raise ValueError(f"invalid assignment: unknown task {tid}")
            if h < 0 or h >= H:
                raise ValueError(f"invalid assignment: unknown host {h}")
            status = <int>LI[li, I_STATUS]
            if T.local[tid] or status == S_DOWNLOAD or status == S_LOCAL or status == S_DONE:
                raise ValueError(f"invalid assignment: task {tid} is not schedulable")
            cur = <int>LI[li, I_HOST]
            if cur == h:
                continue
            if self.collect_trace:
                self.trace.append((t0, TR_ASSIGN, tid, h))
            if cur < 0:
                LI[li, I_HOST] = h
                if status == S_READY:
                    self.start_upload(li, t0)
                else:
                    LI[li, I_STATUS] = S_APRED
                continue
            if status == S_APRED:
                LI[li, I_HOST] = h
                continue
            if T.h_tier[cur] == T.h_tier[h]:
                # within-tier moves are neglected: free re-queue, no count
                LI[li, I_HOST] = h
                LI[li, I_STATUS] = S_QUEUED
                LF[li, F_AVAIL] = t0
                LF[li, F_QSINCE] = t0
            else:
                self.migrations += 1
                LI[li, I_NMIG] += 1
                if self.collect_trace:
                    self.trace.append((t0, TR_MIGRATE, tid, h))
                progress = 1.0 - LF[li, F_REM] / T.length[tid]
                payload = T.inbits[tid] + T.state_fraction * progress * T.outbits[tid]
                tx = payload / T.ec_bps
                d_mig = tx + T.h_conn[h]
                self.mig_time += d_mig
                self.e_trans += T.tx_cloud_w * d_mig
                LF[li, F_TRANS] += tx
                LF[li, F_CONN] += T.h_conn[h]
                LI[li, I_HOST] = h
                LI[li, I_STATUS] = S_MIGRATE
                LF[li, F_AVAIL] = t0 + d_mig
                if LF[li, F_AVAIL] <= t1:
                    self.push_event(LF[li, F_AVAIL], EV_ARRIVAL, tid, li)

        # ---- seed cores and host queues ----
        for h in range(H):
            slots = self.core_end + h * mc
            for k in range(T.h_cores[h]):
                slots[k] = t0
            self.busy[h] = 0.0
        for li in range(m):
            status = <int>LI[li, I_STATUS]
            if status == S_RUNNING:
                h = <int>LI[li, I_HOST]
                end = t0 + LF[li, F_REM] / T.h_mips[h]
                slots = self.core_end + h * mc
                for k in range(T.h_cores[h]):
                    if slots[k] == t0:
                        slots[k] = end
                        break
                if end <= t1:
                    self.push_event(end, EV_COMPUTE_DONE, <int>LI[li, I_TID], li)
            elif status == S_QUEUED:
                self.w_avail[self.w_n] = LF[li, F_AVAIL]
                self.w_tid[self.w_n] = <int>LI[li, I_TID]
                self.w_li[self.w_n] = li
                self.w_host[self.w_n] = <int>LI[li, I_HOST]
                self.w_n += 1

        # hosts with cores freed at t0 can start queued work immediately
        for h in range(H):
            if self.w_n == 0:
                break
            slots = self.core_end + h * mc
            while self.host_waiting(h):
                free_slot = -1
                for k in range(T.h_cores[h]):
                    if slots[k] <= t0:
                        free_slot = k
                        break
                if free_slot < 0:
                    break
                li = self.pop_waiting(h)
                self.start_compute(li, t0)

        # ---- event loop ----
        while self.ev_n > 0:
            now = self.ev_time[0]
            ev_kind_now = self.ev_kind[0]
            tid = self.ev_tid[0]
            li = self.ev_li[0]
            self.pop_event()
            if ev_kind_now == EV_ARRIVAL:
                status = <int>LI[li, I_STATUS]
                if (status != S_UPLOAD and status != S_MIGRATE) or LF[li, F_AVAIL] != now:
                    continue
                h = <int>LI[li, I_HOST]
                LF[li, F_QSINCE] = now
                LI[li, I_STATUS] = S_QUEUED
                if self.collect_trace:
                    self.trace.append((now, TR_ARRIVE, tid, h))
                slots = self.core_end + h * mc
                free_slot = -1
                for k in range(T.h_cores[h]):
                    if slots[k] <= now:
                        free_slot = k
                        break
                if free_slot >= 0:
                    self.start_compute(li, now)
                else:
                    self.w_avail[self.w_n] = now
                    self.w_tid[self.w_n] = tid
                    self.w_li[self.w_n] = li
                    self.w_host[self.w_n] = h
                    self.w_n += 1
            elif ev_kind_now == EV_COMPUTE_DONE:
                h = <int>LI[li, I_HOST]
                cs = LF[li, F_CSTART]
                if cs < t0:
                    cs = t0
                d = now - cs
                LF[li, F_COMP] += d
                self.busy[h] += d
                LF[li, F_REM] = 0.0
                if self.collect_trace:
                    self.trace.append((now, TR_COMPUTE_DONE, tid, h))
                nli = self.pop_waiting(h)
                if nli >= 0:
                    self.start_compute(nli, now)
                self.start_download(li, now)
            elif ev_kind_now == EV_DOWNLOAD_DONE:
                self.complete(li, now)
            else:
                LF[li, F_COMP] += T.local_s
                self.complete(li, now)

        # ---- end-of-interval sweep ----
        for li in range(m):
            status = <int>LI[li, I_STATUS]
            if status == S_RUNNING:
                h = <int>LI[li, I_HOST]
                cs = LF[li, F_CSTART]
                if cs < t0:
                    cs = t0
                d = t1 - cs
                rem = LF[li, F_REM] - d * T.h_mips[h]
                LF[li, F_REM] = rem if rem > 0.0 else 0.0
                LF[li, F_COMP] += d
                self.busy[h] += d
            elif status == S_QUEUED or status == S_READY:
                q0 = LF[li, F_QSINCE]
                if q0 < t0:
                    q0 = t0
                LF[li, F_QUEUE] += t1 - q0
            if status != S_DONE and not LI[li, I_SLA]:
                tid = <int>LI[li, I_TID]
                if t1 > T.deadline[tid] + TIME_EPS:
                    LI[li, I_SLA] = 1
                    self.misses += 1
                    if self.collect_trace:
                        self.trace.append((t1, TR_MISS, tid, <int>LI[li, I_HOST]))

        # zero-length intervals (assignment-only) have no utilization window
        self.util_var = 0.0
        if dur > 0.0:
            mean_u = 0.0
            for h in range(H):
                mean_u += self.busy[h] / (T.h_cores[h] * dur)
            mean_u /= H
            for h in range(H):
                u = self.busy[h] / (T.h_cores[h] * dur)
                self.util_var += (u - mean_u) * (u - mean_u)
            self.util_var /= H

        self.e_comp = 0.0
        for h in range(H):
            self.e_comp += T.h_idle_w[h] * dur + (T.h_busy_w[h] - T.h_idle_w[h]) * self.busy[h]

        # compact completed rows, keeping tid order
        if self.completed > 0:
            w = 0
            for li in range(m):
                if LI[li, I_STATUS] != S_DONE:
                    if w != li:
                        for k in range(10):
                            LF[w, k] = LF[li, k]
                        for k in range(7):
                            LI[w, k] = LI[li, k]
                    w += 1
            m = w
        self.m = m
        out_m[0] = m
        out_nr[0] = next_release
        return 0


def simulate(Tables st, double[:, ::1] LF, long long[:, ::1] LI, int m,
             double[::1] user_lat, double clock, int next_release, double dur,
             long long[::1] a_tid, long long[::1] a_host,
             bint collect_log=False, bint collect_trace=False,
             bint collect_released=False):
    """Advance one interval; see _kernel_py.simulate for the contract."""
    cdef _Sim ctx = _Sim()
    cdef int n_due = 0, out_m = 0, out_nr = 0
    while next_release + n_due < st.n_tasks and st.release[next_release + n_due] <= clock + TIME_EPS:
        n_due += 1
    ctx.st = st
    ctx.LF = LF
    ctx.LI = LI
    ctx.user_lat = user_lat
    ctx.collect_log = collect_log
    ctx.collect_trace = collect_trace
    ctx.collect_released = collect_released
    ctx.log_rows = [] if collect_log else None
    ctx.trace = [] if collect_trace else None
    ctx.released_tids = [] if collect_released else None
    ctx.alloc(m + n_due)
    ctx.run_interval(m, clock, next_release, dur, a_tid, a_host, &out_m, &out_nr)
    report = (ctx.released, ctx.completed, ctx.misses, ctx.migrations, ctx.mig_time,
              ctx.e_comp, ctx.e_trans, ctx.resp_sum, ctx.trans_sum, ctx.conn_sum,
              ctx.queue_sum, ctx.comp_sum, ctx.util_var, out_m)
    return out_m, out_nr, report, ctx.released_tids, ctx.log_rows, ctx.trace


cdef inline double _clamp01(double x):
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def rollout_eval(Tables st, double[:, ::1] LF, long long[:, ::1] LI, int m,
                 double[::1] user_lat, double clock, int next_release, double dur,
                 long long[::1] a_tid, long long[::1] a_host, int n_steps,
                 long long[::1] cand_tid, double[::1] cand_prio, long long exclude_tid,
                 double[::1] host_draws, int prereleased,
                 double alpha, double beta, double gamma, double delta,
                 double ars_min, double ars_max, double aec_min, double aec_max,
                 double[:, ::1] scratchF, long long[:, ::1] scratchI):
    """Reward sequence of a decision: the assigned interval plus n_steps
    look-ahead intervals; see _kernel_py.rollout_eval for the semantics.
    Mirrors it bit for bit.
    """
    cdef _Sim ctx
    cdef int step, host, k, best, hi = 0
    cdef long long tid
    cdef int out_m = m, out_nr = next_release
    cdef int cap = scratchF.shape[0]
    cdef int n_cand = cand_tid.shape[0]
    cdef double cl = clock
    cdef double ars, aec, mig_term, sla_n, ars_n, aec_n, hc_n, y
    cdef int rel
    cdef long long one_t_arr[1]
    cdef long long one_h_arr[1]
    cdef long long[::1] at = a_tid
    cdef long long[::1] ah = a_host
    cdef long long[::1] one_t = one_t_arr
    cdef long long[::1] one_h = one_h_arr
    cdef char* picked = NULL
    cdef list qs = []

    if m > 0:
        memcpy(&scratchF[0, 0], &LF[0, 0], m * 10 * sizeof(double))
        memcpy(&scratchI[0, 0], &LI[0, 0], m * 7 * sizeof(long long))
    if st.scratch_sim is not None and st.scratch_cap >= cap:
        ctx = st.scratch_sim
    else:
        ctx = _Sim()
        ctx.st = st
        ctx.alloc(cap)
        st.scratch_sim = ctx
        st.scratch_cap = cap
    ctx.LF = scratchF
    ctx.LI = scratchI
    ctx.user_lat = user_lat
    ctx.collect_log = False
    ctx.collect_trace = False
    ctx.collect_released = False
    ctx.log_rows = None
    ctx.trace = None
    ctx.released_tids = None
    if n_cand > 0:
        picked = <char*>malloc(n_cand * sizeof(char))
        if picked == NULL:
            raise MemoryError()
        for k in range(n_cand):
            picked[k] = 0

    try:
        for step in range(n_steps + 1):
            if step > 0:
                # candidates are tid-ordered, hence release-ordered
                while hi < n_cand and st.release[cand_tid[hi]] <= cl + TIME_EPS:
                    hi += 1
                best = -1
                for k in range(hi):
                    if picked[k] or cand_tid[k] == exclude_tid:
                        continue
                    if best < 0 or cand_prio[k] > cand_prio[best]:
                        best = k
                if best >= 0:
                    picked[best] = 1
                    one_t[0] = cand_tid[best]
                    one_h[0] = <int>(host_draws[best] * st.n_hosts)
                    at = one_t
                    ah = one_h
                else:
                    at = a_tid[:0]
                    ah = a_host[:0]
            ctx.run_interval(out_m, cl, out_nr, dur, at, ah, &out_m, &out_nr)
            cl = cl + dur
            rel = ctx.released + (prereleased if step == 0 else 0)
            ars = ctx.resp_sum / ctx.completed if ctx.completed else 0.0
            aec = ctx.e_comp + ctx.e_trans
            ars_n = _clamp01((ars - ars_min) / (ars_max - ars_min))
            aec_n = _clamp01((aec - aec_min) / (aec_max - aec_min))
            if rel > 0:
                mig_term = (<double>ctx.migrations) / rel
                sla_n = _clamp01((<double>ctx.misses) / rel)
            else:
                mig_term = 0.0
                sla_n = 0.0
            hc_n = _clamp01(0.5 * (ctx.util_var / 0.25) + 0.5 * mig_term)
            y = alpha * ars_n + beta * aec_n + gamma * hc_n + delta * sla_n
            qs.append(1.0 - y)
    finally:
        if picked != NULL:
            free(picked)
    return qs
