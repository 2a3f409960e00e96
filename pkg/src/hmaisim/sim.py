"""Discrete-event engine.

Replays a task queue against a platform under a scheduling policy.  Detection
tasks become schedulable at their capture time; a tracking task becomes
schedulable once its detection dependency completes.  Each accelerator runs
its FIFO without preemption.  At every completion the accelerator's running
info is updated and the per-task reward (objective delta) is computed.

Two policy shapes are supported: immediate policies expose choose(task, view)
and are consulted at each release instant; windowed policies expose
assign_window(released_tasks, view) plus a window_s attribute and are invoked
at fixed window boundaries for everything released since the last boundary.

Event ordering at equal timestamps: completions, then releases, then window
boundaries; ties broken by ascending task id.  This makes runs bit-reproducible.
"""

from __future__ import annotations

import heapq
import math
import time as _time
from dataclasses import dataclass, field

from . import criteria, platform as hw
from .criteria import NormalizationScales, PlatformSummary
from .errors import DomainError

_COMPLETION, _RELEASE, _WINDOW = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    t_sched_overhead: float = 0.0
    r_balance_mode: str = "paper-literal"
    e_ref: float = 1.0
    t_ref: float = 1.0

    def __post_init__(self):
        if self.r_balance_mode not in criteria.R_BALANCE_MODES:
            raise DomainError(f"unknown r_balance mode: {self.r_balance_mode}")
        if self.e_ref <= 0 or self.t_ref <= 0:
            raise DomainError("normalization scales must be positive")
        if self.t_sched_overhead < 0:
            raise DomainError("scheduler overhead must be non-negative")


@dataclass(frozen=True)
class PlatformView:
    """What a policy may look at: the clock and the live accelerator states."""
    now: float
    states: list


@dataclass(frozen=True)
class ReleasedTask:
    task: object
    release: float


@dataclass(frozen=True)
class TaskResult:
    task_id: int
    accelerator: int
    dispatch_time: float     # instant the task became schedulable
    start_time: float
    completion_time: float
    response_time: float     # completion - capture
    ms: float
    energy: float
    exec_time: float
    r_sample: float
    reward: float
    safety_time: float
    task_kind: str
    model: str
    camera_id: int
    capture_time: float

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "accelerator": self.accelerator,
            "dispatch_time": self.dispatch_time,
            "start_time": self.start_time,
            "completion_time": self.completion_time,
            "response_time": self.response_time,
            "ms": self.ms,
            "energy": self.energy,
            "exec_time": self.exec_time,
            "r_sample": self.r_sample,
            "reward": self.reward,
            "safety_time": self.safety_time,
            "task_kind": self.task_kind,
            "model": self.model,
            "camera_id": self.camera_id,
            "capture_time": self.capture_time,
        }


@dataclass
class EpisodeReport:
    scheduler: str
    num_accelerators: int
    records: list = field(default_factory=list)
    energy: float = 0.0
    busy_max: float = 0.0
    r_balance: float = 0.0
    ms: float = 0.0
    makespan: float = 0.0
    utilization: float = 0.0
    stm_rate: float = 0.0
    e_ref: float = 1.0
    t_ref: float = 1.0
    r_balance_mode: str = "paper-literal"
    seeds: dict = field(default_factory=dict)
    sched_wall_s: float = 0.0  # measured wall clock; kept out of deterministic dumps

    def summary_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "num_accelerators": self.num_accelerators,
            "num_tasks": len(self.records),
            "energy": self.energy,
            "busy_max": self.busy_max,
            "r_balance": self.r_balance,
            "ms": self.ms,
            "makespan": self.makespan,
            "utilization": self.utilization,
            "stm_rate": self.stm_rate,
            "e_ref": self.e_ref,
            "t_ref": self.t_ref,
            "r_balance_mode": self.r_balance_mode,
            "seeds": self.seeds,
        }

    def to_dict(self) -> dict:
        return {"summary": self.summary_dict(),
                "records": [r.to_dict() for r in self.records]}


def _validate_queue(queue) -> dict:
    by_id = {}
    prev = -math.inf
    for t in queue:
        if t.capture_time < prev:
            raise DomainError("queue not sorted by capture_time")
        prev = t.capture_time
        if t.id in by_id:
            raise DomainError(f"duplicate task id {t.id}")
        by_id[t.id] = t
    for t in queue:
        if t.depends_on is None:
            continue
        dep = by_id.get(t.depends_on)
        if dep is None:
            raise DomainError(f"task {t.id} depends on missing task {t.depends_on}")
        if dep.depends_on is not None:
            raise DomainError(f"task {t.id} depends on a dependent task (cycle risk)")
    return by_id


def run_episode(queue, platform, policy, cfg: SimConfig = SimConfig(),
                on_complete=None) -> EpisodeReport:
    """Run one full queue to completion and report metrics.

    `platform` is a freshly built list of accelerator states owned by this
    call.  `on_complete(task, result, reward)` fires at every completion.
    """
    by_id = _validate_queue(queue)
    states = platform
    n_acc = len(states)
    norm = NormalizationScales(cfg.e_ref, cfg.t_ref)
    report = EpisodeReport(scheduler=getattr(policy, "name", policy.__class__.__name__),
                           num_accelerators=n_acc,
                           e_ref=cfg.e_ref, t_ref=cfg.t_ref,
                           r_balance_mode=cfg.r_balance_mode)

    children = {}
    heap = []
    for t in queue:
        if t.depends_on is None:
            heapq.heappush(heap, (t.capture_time, _RELEASE, t.id))
        else:
            children.setdefault(t.depends_on, []).append(t)

    window_s = float(getattr(policy, "window_s", 0.0) or 0.0)
    immediate = window_s <= 0.0
    buffer = []
    window_scheduled = False
    in_flight = {}  # task id -> (task, acc index, start, release, r_sample)

    # running aggregates for O(1) summaries
    agg_e = 0.0
    agg_ms = 0.0
    agg_rsum = 0.0
    agg_tmax = 0.0
    wall = 0.0

    def summary() -> PlatformSummary:
        return PlatformSummary(energy=agg_e, busy_max=agg_tmax,
                               r_balance=agg_rsum / n_acc, ms=agg_ms)

    def dispatch(task, idx: int, release: float, commit: float):
        nonlocal wall
        if not (0 <= idx < n_acc):
            raise DomainError(f"scheduler returned invalid accelerator index {idx}")
        acc = states[idx]
        busy = sum(1 for s in states if s.busy_until > commit)
        if acc.busy_until <= commit:
            busy += 1
        r_sample = busy / n_acc
        start = max(release + cfg.t_sched_overhead, commit, acc.busy_until)
        t_exec = hw.exec_time(task.model, acc.kind)
        completion = start + t_exec
        acc.busy_until = completion
        acc.fifo.append(task.id)
        in_flight[task.id] = (task, idx, start, release, r_sample)
        heapq.heappush(heap, (completion, _COMPLETION, task.id))

    def next_window_after(t: float) -> float:
        k = math.floor(t / window_s + 1e-9)
        if abs(k * window_s - t) <= 1e-12:
            return t
        return (k + 1) * window_s

    while heap:
        now, prio, tid = heapq.heappop(heap)

        if prio == _COMPLETION:
            task, idx, start, release, r_sample = in_flight.pop(tid)
            acc = states[idx]
            if not acc.fifo or acc.fifo[0] != tid:
                raise DomainError("FIFO order violated")
            acc.fifo.pop(0)
            response = now - task.capture_time
            t_exec = hw.exec_time(task.model, acc.kind)
            e_j = hw.exec_energy(task, acc.kind)
            if task.task_kind == "det":
                ms_j = criteria.matching_score_det(response, task.safety_time)
            else:
                ms_j = criteria.matching_score_tra(response, task.safety_time)
            before = summary()
            old_r = acc.r_balance
            criteria.update_hw_info(acc, e_j, t_exec, ms_j, r_sample, cfg.r_balance_mode)
            agg_e += e_j
            agg_ms += ms_j
            agg_rsum += acc.r_balance - old_r
            if acc.busy_time > agg_tmax:
                agg_tmax = acc.busy_time
            after = summary()
            rew = criteria.reward(before, after, norm)
            result = TaskResult(
                task_id=task.id, accelerator=idx, dispatch_time=release,
                start_time=start, completion_time=now, response_time=response,
                ms=ms_j, energy=e_j, exec_time=t_exec, r_sample=r_sample,
                reward=rew, safety_time=task.safety_time, task_kind=task.task_kind,
                model=task.model, camera_id=task.camera_id, capture_time=task.capture_time)
            report.records.append(result)
            if on_complete is not None:
                on_complete(task, result, rew)
            for child in children.pop(tid, ()):
                heapq.heappush(heap, (max(child.capture_time, now), _RELEASE, child.id))

        elif prio == _RELEASE:
            task = by_id[tid]
            if immediate:
                view = PlatformView(now=now, states=states)
                t0 = _time.perf_counter()
                idx = policy.choose(task, view)
                wall += _time.perf_counter() - t0
                dispatch(task, idx, release=now, commit=now)
            else:
                buffer.append(ReleasedTask(task=task, release=now))
                if not window_scheduled:
                    heapq.heappush(heap, (next_window_after(now), _WINDOW, -1))
                    window_scheduled = True

        else:  # _WINDOW
            window_scheduled = False
            if buffer:
                buffer.sort(key=lambda rt: rt.task.id)
                view = PlatformView(now=now, states=states)
                t0 = _time.perf_counter()
                assignment = policy.assign_window(buffer, view)
                wall += _time.perf_counter() - t0
                if len(assignment) != len(buffer):
                    raise DomainError("window assignment length mismatch")
                for rt, idx in zip(buffer, assignment):
                    dispatch(rt.task, idx, release=rt.release, commit=now)
                buffer = []

    if len(report.records) != len(queue):
        raise DomainError("not all tasks completed (dangling dependencies?)")

    report.energy = agg_e
    report.ms = agg_ms
    report.busy_max = agg_tmax
    report.r_balance = agg_rsum / n_acc if report.records else 0.0
    report.makespan = max((r.completion_time for r in report.records), default=0.0)
    report.utilization = hw.utilization_rate(report) if report.makespan > 0 else 0.0
    report.stm_rate = stm_rate(report) if report.records else 0.0
    report.sched_wall_s = wall
    return report


def stm_rate(report: EpisodeReport) -> float:
    """Fraction of tasks whose response met their safety time."""
    if not report.records:
        raise DomainError("safety-time meet rate undefined for an empty report")
    met = sum(1 for r in report.records if r.response_time <= r.safety_time)
    return met / len(report.records)


@dataclass(frozen=True)
class BrakingReport:
    t_wait: float
    t_schedule: float
    t_compute: float
    t_data: float
    t_mech: float
    total_time: float
    distance: float
    velocity: float
    a_brake: float
    trigger_task_id: int
    range_limit: float | None = None

    @property
    def safe(self):
        if self.range_limit is None:
            return None
        return self.distance < self.range_limit

    def to_dict(self) -> dict:
        return {
            "trigger_task_id": self.trigger_task_id,
            "t_wait": self.t_wait,
            "t_schedule": self.t_schedule,
            "t_compute": self.t_compute,
            "t_data": self.t_data,
            "t_mech": self.t_mech,
            "total_time": self.total_time,
            "distance": self.distance,
            "velocity": self.velocity,
            "a_brake": self.a_brake,
            "range_limit": self.range_limit,
            "safe": self.safe,
        }


def braking_report(report: EpisodeReport, velocity: float, a_brake: float,
                   trigger_task_id: int, t_data: float = 0.001,
                   t_mech: float = 0.019, t_schedule: float = 0.0,
                   range_limit: float | None = None) -> BrakingReport:
    """Time from a trigger task's release to a full stop, and the distance covered.

    The reaction time decomposes into queueing wait, charged scheduling
    overhead, compute, data transfer to the brake, and mechanical lag; the
    vehicle then decelerates uniformly from `velocity`.
    """
    if a_brake <= 0:
        raise DomainError("braking deceleration must be positive")
    if velocity < 0:
        raise DomainError("velocity must be non-negative")
    rec = next((r for r in report.records if r.task_id == trigger_task_id), None)
    if rec is None:
        raise DomainError(f"trigger task {trigger_task_id} not found in report")
    t_wait = max(0.0, rec.start_time - rec.dispatch_time - t_schedule)
    t_compute = rec.exec_time
    total = t_wait + t_schedule + t_compute + t_data + t_mech
    distance = velocity * total + velocity * velocity / (2.0 * a_brake)
    return BrakingReport(t_wait=t_wait, t_schedule=t_schedule, t_compute=t_compute,
                         t_data=t_data, t_mech=t_mech, total_time=total,
                         distance=distance, velocity=velocity, a_brake=a_brake,
                         trigger_task_id=trigger_task_id, range_limit=range_limit)
