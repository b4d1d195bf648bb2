"""Frame-periodic task DAGs for multi-user mobile-AR workloads.

Each video frame spawns one workflow instance per user.  The feature
extractor and renderer run every frame; the tracker, mapper and object
recognizer join on frames divisible by 2, 3 and 4 respectively, so the
component mix cycles with period lcm(2,3,4) = 12.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from . import rng

FRAME_RATE = 60.0
T_D = 1.0 / FRAME_RATE  # frame period, the base deadline unit


class ComponentKind(IntEnum):
    """AR pipeline components, in topological order within one frame."""

    VIDEO_CAPTURER = 0
    FEATURE_EXTRACTOR = 1
    MAPPER = 2
    OBJECT_RECOGNIZER = 3
    TRACKER = 4
    RENDERER = 5

    @property
    def local_only(self) -> bool:
        # capture and rendering touch the device camera/display directly
        return self in (ComponentKind.VIDEO_CAPTURER, ComponentKind.RENDERER)

    @property
    def offloadable(self) -> bool:
        return not self.local_only

    @property
    def short_name(self) -> str:
        return _SHORT[self]


_SHORT = {
    ComponentKind.VIDEO_CAPTURER: "V",
    ComponentKind.FEATURE_EXTRACTOR: "F",
    ComponentKind.MAPPER: "M",
    ComponentKind.OBJECT_RECOGNIZER: "O",
    ComponentKind.TRACKER: "T",
    ComponentKind.RENDERER: "R",
}

# deadline of each component, in frame periods
DEADLINE_FRAMES = {
    ComponentKind.FEATURE_EXTRACTOR: 1,
    ComponentKind.RENDERER: 1,
    ComponentKind.TRACKER: 2,
    ComponentKind.MAPPER: 3,
    ComponentKind.OBJECT_RECOGNIZER: 4,
}

MBIT = 1e6  # bits


class NotSchedulableError(ValueError):
    pass


class DagError(ValueError):
    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    """One component invocation: compute demand plus data movement."""

    task_id: int
    user_id: int
    frame_index: int
    kind: ComponentKind
    length: float  # million instructions
    input_size: float  # bits uploaded from the device
    output_size: float  # bits returned to the device
    deadline: float  # seconds, relative to instance release
    predecessors: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"task {self.task_id}: length must be > 0")
        if self.input_size < 0 or self.output_size < 0:
            raise ValueError(f"task {self.task_id}: sizes must be >= 0")
        if self.deadline <= 0:
            raise ValueError(f"task {self.task_id}: deadline must be > 0")


@dataclass(frozen=True)
class WorkflowInstance:
    """One frame's DAG for one user."""

    instance_id: int
    user_id: int
    frame_index: int
    tasks: tuple[TaskSpec, ...]
    release_time: float

    def task_ids(self) -> list[int]:
        return [t.task_id for t in self.tasks]

    def kinds(self) -> set[ComponentKind]:
        return {t.kind for t in self.tasks}


def _default_lengths() -> dict[ComponentKind, float]:
    # Sized so the full frame-0 DAG (F+M+O+T = 153 MI) fits on one default
    # edge core inside the loosest deadline (4 frame periods ~= 268 MI), yet
    # ten users keep a small fleet under real contention.
    return {
        ComponentKind.FEATURE_EXTRACTOR: 18.0,
        ComponentKind.TRACKER: 25.0,
        ComponentKind.MAPPER: 50.0,
        ComponentKind.OBJECT_RECOGNIZER: 60.0,
        ComponentKind.RENDERER: 50.0,
    }


def _default_input_bits() -> dict[ComponentKind, float]:
    return {
        ComponentKind.FEATURE_EXTRACTOR: 1.5 * MBIT,  # compressed camera frame
        ComponentKind.TRACKER: 0.3 * MBIT,  # feature-point payload
        ComponentKind.MAPPER: 0.3 * MBIT,
        ComponentKind.OBJECT_RECOGNIZER: 0.3 * MBIT,
        ComponentKind.RENDERER: 0.0,  # consumes results on-device
    }


def _default_output_bits() -> dict[ComponentKind, float]:
    return {
        ComponentKind.FEATURE_EXTRACTOR: 0.3 * MBIT,
        ComponentKind.TRACKER: 0.1 * MBIT,
        ComponentKind.MAPPER: 0.1 * MBIT,
        ComponentKind.OBJECT_RECOGNIZER: 0.1 * MBIT,
        ComponentKind.RENDERER: 0.0,
    }


@dataclass
class WorkloadProfile:
    """Workload shape: users, horizon, and per-component demand defaults."""

    users: int = 10
    frames: int = 200
    t_d: float = T_D
    jitter: float = 0.2  # uniform +-20% on compute length
    length_mi: dict[ComponentKind, float] = field(default_factory=_default_lengths)
    input_bits: dict[ComponentKind, float] = field(default_factory=_default_input_bits)
    output_bits: dict[ComponentKind, float] = field(default_factory=_default_output_bits)
    renderer_local_s: float = 0.001  # fixed on-device render cost

    def validate(self) -> None:
        if self.t_d <= 0:
            raise ValueError("t_d must be > 0")
        if not 0 <= self.jitter < 1:
            raise ValueError("jitter must be in [0, 1)")
        for kind, v in self.length_mi.items():
            if v <= 0:
                raise ValueError(f"length_mi[{kind.name}] must be > 0")
        for table in (self.input_bits, self.output_bits):
            for kind, v in table.items():
                if v < 0:
                    raise ValueError(f"data size for {kind.name} must be >= 0")


def deadline_of(kind: ComponentKind, profile: WorkloadProfile) -> float:
    """Deadline duration of a component, in seconds."""
    if kind == ComponentKind.VIDEO_CAPTURER:
        raise NotSchedulableError("not schedulable: video capturer is a release event")
    return DEADLINE_FRAMES[kind] * profile.t_d


def frame_kinds(frame_index: int) -> list[ComponentKind]:
    """Component mix of a frame, in topological order."""
    kinds = [ComponentKind.FEATURE_EXTRACTOR]
    if frame_index % 3 == 0:
        kinds.append(ComponentKind.MAPPER)
    if frame_index % 4 == 0:
        kinds.append(ComponentKind.OBJECT_RECOGNIZER)
    if frame_index % 2 == 0:
        kinds.append(ComponentKind.TRACKER)
    kinds.append(ComponentKind.RENDERER)
    return kinds


def build_frame_dag(
    user_id: int,
    frame_index: int,
    profile: WorkloadProfile,
    instance_id: int = 0,
    id_start: int = 0,
    length_scale: dict[ComponentKind, float] | None = None,
) -> WorkflowInstance:
    """Build one user's DAG for one frame.

    Edges: F feeds everything; M feeds O when both run; O feeds T when both
    run; every component feeds R.  The capturer is modelled as the release
    event itself, so it never appears as a task.
    """
    if frame_index < 0:
        raise ValueError("frame_index must be >= 0")
    kinds = frame_kinds(frame_index)
    ids = {k: id_start + i for i, k in enumerate(kinds)}
    tasks = []
    for k in kinds:
        preds: set[int] = set()
        if k != ComponentKind.FEATURE_EXTRACTOR:
            preds.add(ids[ComponentKind.FEATURE_EXTRACTOR])
        if k == ComponentKind.OBJECT_RECOGNIZER and ComponentKind.MAPPER in ids:
            preds.add(ids[ComponentKind.MAPPER])
        if k == ComponentKind.TRACKER and ComponentKind.OBJECT_RECOGNIZER in ids:
            preds.add(ids[ComponentKind.OBJECT_RECOGNIZER])
        if k == ComponentKind.RENDERER:
            preds = {ids[x] for x in kinds if x != ComponentKind.RENDERER}
        scale = length_scale.get(k, 1.0) if length_scale else 1.0
        tasks.append(
            TaskSpec(
                task_id=ids[k],
                user_id=user_id,
                frame_index=frame_index,
                kind=k,
                length=profile.length_mi[k] * scale,
                input_size=profile.input_bits[k],
                output_size=profile.output_bits[k],
                deadline=deadline_of(k, profile),
                predecessors=frozenset(preds),
            )
        )
    return WorkflowInstance(
        instance_id=instance_id,
        user_id=user_id,
        frame_index=frame_index,
        tasks=tuple(tasks),
        release_time=frame_index * profile.t_d,
    )


def generate_workload(profile: WorkloadProfile, seed: int) -> list[WorkflowInstance]:
    """All workflow instances of a run: one per (frame, user), frame-major.

    Compute lengths are jittered uniformly by +-profile.jitter around the
    per-kind default.  Bit-deterministic for a given (profile, seed).
    """
    profile.validate()
    if profile.users <= 0 or profile.frames <= 0:
        raise WorkloadError("empty workload: users and frames must be >= 1")
    gen = rng.Stream(seed).child(rng.WORKLOAD).generator()
    instances = []
    next_id = 0
    for f in range(profile.frames):
        for u in range(profile.users):
            kinds = frame_kinds(f)
            jit = 1.0 + profile.jitter * gen.uniform(-1.0, 1.0, size=len(kinds))
            scale = {k: float(jit[i]) for i, k in enumerate(kinds)}
            inst = build_frame_dag(
                u,
                f,
                profile,
                instance_id=len(instances),
                id_start=next_id,
                length_scale=scale,
            )
            next_id += len(inst.tasks)
            instances.append(inst)
    return instances


def validate_dag(instance: WorkflowInstance) -> None:
    """Raise DagError unless the instance is a well-formed frame DAG."""
    by_id = {t.task_id: t for t in instance.tasks}
    for t in instance.tasks:
        for p in t.predecessors:
            if p not in by_id:
                raise DagError("unresolved", f"task {t.task_id} references unknown {p}")

    # cycle check: iterative three-color DFS, exact for any instance size
    WHITE, GREY, BLACK = 0, 1, 2
    color = {tid: WHITE for tid in by_id}
    for root in sorted(by_id):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(by_id[root].predecessors)))]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GREY:
                    raise DagError("cyclic", f"cycle through task {nxt}")
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, iter(sorted(by_id[nxt].predecessors))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()

    succs: dict[int, int] = {tid: 0 for tid in by_id}
    for t in instance.tasks:
        for p in t.predecessors:
            succs[p] += 1
    sinks = [tid for tid, n in succs.items() if n == 0]
    renderers = [t for t in instance.tasks if t.kind == ComponentKind.RENDERER]
    if len(renderers) != 1:
        raise DagError("bad sink", f"expected exactly one renderer, got {len(renderers)}")
    if sinks != [renderers[0].task_id]:
        raise DagError("bad sink", f"sinks {sinks} must be the renderer alone")
    for t in instance.tasks:
        if t.kind.local_only and t.kind != ComponentKind.RENDERER:
            if t.predecessors:
                raise DagError("bad sink", f"local task {t.task_id} must be a source")
