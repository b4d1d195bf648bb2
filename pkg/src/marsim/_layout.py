"""Shared array layout for the interval engine.

The dynamic simulation state is two matrices over live tasks (one float,
one int) so forking a state is two array copies.  Both engine
implementations (compiled and pure Python) follow this layout exactly; a
parity test keeps them in lockstep.
"""

# float columns
F_REM = 0      # remaining million instructions
F_READY = 1    # time the response window opened (release, or last pred output)
F_AVAIL = 2    # time available at the current host (end of upload/migration)
F_QSINCE = 3   # start of the current queue-accrual window
F_CSTART = 4   # compute start of the current running segment
F_PHEND = 5    # end of the current download / local-render phase
F_TRANS = 6    # accrued transmission seconds
F_CONN = 7     # accrued connection seconds
F_QUEUE = 8    # accrued queuing seconds
F_COMP = 9     # accrued computation seconds
NF = 10

# int columns
I_TID = 0
I_STATUS = 1
I_HOST = 2     # -1 while unassigned
I_PREDS = 3    # predecessors still outstanding
I_STARTED = 4  # has ever computed
I_SLA = 5      # deadline miss already recorded
I_NMIG = 6     # times this task changed host
NI = 7

# task statuses
S_WPRED = 0     # released, predecessors outstanding, unassigned
S_READY = 1     # released, runnable, unassigned
S_APRED = 2     # assigned, waiting for predecessors
S_UPLOAD = 3    # input in flight to the host
S_MIGRATE = 4   # moving between hosts
S_QUEUED = 5    # at the host, waiting for a core
S_RUNNING = 6   # computing
S_DOWNLOAD = 7  # output in flight back to the device
S_LOCAL = 8     # renderer running on the device
S_DONE = 9      # removed at the end of the interval

# event kinds, in tie-break order at equal timestamps
EV_ARRIVAL = 0
EV_COMPUTE_DONE = 1
EV_DOWNLOAD_DONE = 2
EV_LOCAL_DONE = 3

# trace record kinds
TR_RELEASE = 0
TR_ASSIGN = 1
TR_MIGRATE = 2
TR_ARRIVE = 3
TR_START = 4
TR_COMPUTE_DONE = 5
TR_COMPLETE = 6
TR_MISS = 7

TRACE_NAMES = {
    TR_RELEASE: "release",
    TR_ASSIGN: "assign",
    TR_MIGRATE: "migrate",
    TR_ARRIVE: "arrive",
    TR_START: "start",
    TR_COMPUTE_DONE: "compute_done",
    TR_COMPLETE: "complete",
    TR_MISS: "miss",
}

# report tuple indexes returned by the engines
R_RELEASED = 0
R_COMPLETED = 1
R_MISSES = 2
R_MIGRATIONS = 3
R_MIG_TIME = 4
R_E_COMP = 5
R_E_TRANS = 6
R_RESP_SUM = 7
R_TRANS_SUM = 8
R_CONN_SUM = 9
R_QUEUE_SUM = 10
R_COMP_SUM = 11
R_UTIL_VAR = 12
R_PENDING = 13

# release / deadline comparisons tolerate clock-accumulation rounding
TIME_EPS = 1e-9
