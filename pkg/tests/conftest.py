import numpy as np
import pytest

from marsim import infra, rng, simcore, workflow
from marsim.schedulers import make_scheduler, SchedulerConfig


def tiny_profile(users=2, frames=6, jitter=0.2):
    return workflow.WorkloadProfile(users=users, frames=frames, jitter=jitter)


def build_tiny_state(users=2, frames=6, n_edge=2, n_cloud=1, seed=3,
                     collect_log=True, collect_trace=False, impl=None,
                     net=None):
    prof = tiny_profile(users, frames)
    wl = workflow.generate_workload(prof, seed=seed)
    cluster = infra.default_cluster(n_edge, n_cloud)
    return simcore.build_state(wl, cluster, net=net or infra.NetworkSpec(),
                               t_d=prof.t_d, collect_log=collect_log,
                               collect_trace=collect_trace, impl=impl)


def random_snapshot(seed, max_users=3, max_frames=4, max_edge=4, max_cloud=2,
                    warm_intervals=None, impl=None, collect_trace=False):
    """Organically grown small state: run a few intervals under the random
    scheduler so live tasks sit in assorted phases."""
    gen = np.random.Generator(np.random.PCG64(seed))
    users = int(gen.integers(1, max_users + 1))
    frames = int(gen.integers(2, max_frames + 1))
    n_edge = int(gen.integers(1, max_edge + 1))
    n_cloud = int(gen.integers(0, max_cloud + 1))
    if n_edge + n_cloud == 0:
        n_edge = 1
    state = build_tiny_state(users, frames, n_edge, n_cloud, seed=seed,
                             collect_log=False, collect_trace=collect_trace,
                             impl=impl)
    sched = make_scheduler("random", SchedulerConfig())
    stream = rng.Stream(seed).child(rng.SCHEDULE)
    warm = int(gen.integers(0, 3)) if warm_intervals is None else warm_intervals
    for i in range(warm):
        state.release_due()
        a = sched(state, state.pending_tasks(), stream.child(i))
        state.simulate_interval(a)
    state.release_due()
    return state


@pytest.fixture
def tiny_state():
    return build_tiny_state()
