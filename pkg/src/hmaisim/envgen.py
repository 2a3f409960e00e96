"""Driving-environment generator.

Produces a route (area, scenario schedule), the camera fit-out, the
per-scenario frame-rate matrix, and finally the time-stamped task queue the
platform has to execute: one detection task per camera frame (models
alternating per camera stream) and one tracking task per frame where tracking
applies.  Everything is deterministic given the seeded random source.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import criteria
from .config import AREAS, CAMERA_GROUPS, SCENARIOS, Config
from .errors import DomainError

# model -> (computation amount in GMACs, layer count)
MODEL_PROFILES = {
    "yolo": (16.0, 101),
    "ssd": (26.0, 53),
    "goturn": (11.0, 11),
}

GS, TURN, REVERSE = "gs", "turn", "reverse"
DET, TRA = "det", "tra"


@dataclass(frozen=True)
class DrivingArea:
    kind: str
    max_velocity: float  # m/s
    reverse_allowed: bool

    def __post_init__(self):
        if self.kind not in AREAS:
            raise DomainError(f"unknown driving area {self.kind!r}")
        if self.reverse_allowed and self.kind == "hw":
            raise DomainError("reversing is not allowed on the highway")


@dataclass(frozen=True)
class CameraGroup:
    kind: str
    count: int
    max_distance: float  # m
    facing: str          # forward | side | rear


@dataclass(frozen=True)
class Camera:
    camera_id: int
    group: CameraGroup


@dataclass(frozen=True)
class ScenarioSegment:
    kind: str
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class RouteConfig:
    area: DrivingArea
    distance: float      # m
    velocity: float      # m/s
    max_times_turn: int
    max_times_reverse: int
    max_duration_turn: float
    max_duration_reverse: float
    seed: int

    def __post_init__(self):
        if self.distance <= 0 or self.velocity <= 0:
            raise DomainError("route distance and velocity must be positive")
        if not self.area.reverse_allowed and self.max_times_reverse > 0:
            raise DomainError("reverse events requested in an area that forbids reversing")

    @property
    def duration(self) -> float:
        return self.distance / self.velocity


class FrameRateMatrix:
    """fps per (area, scenario, camera group); (hw, reverse) is undefined."""

    def __init__(self, entries: dict):
        self._entries = dict(entries)
        for (area, scen, grp), v in self._entries.items():
            if v <= 0:
                raise DomainError(f"non-positive frame rate for ({area}, {scen}, {grp})")

    def rate(self, area: str, scenario: str, group: str) -> float:
        if area == "hw" and scenario == REVERSE:
            raise DomainError("frame rate undefined: reversing is not allowed on the highway")
        try:
            return self._entries[(area, scenario, group)]
        except KeyError:
            raise DomainError(f"frame rate undefined for ({area}, {scenario}, {group})") from None


def frame_rate(matrix: FrameRateMatrix, area: str, scenario: str, group: str) -> float:
    return matrix.rate(area, scenario, group)


@dataclass
class TaskRecord:
    id: int
    camera_id: int
    group: str
    capture_time: float
    task_kind: str       # det | tra
    model: str
    amount: float        # GMACs
    layer_num: int
    safety_time: float
    depends_on: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "camera_id": self.camera_id,
            "group": self.group,
            "capture_time": self.capture_time,
            "task_kind": self.task_kind,
            "model": self.model,
            "amount": self.amount,
            "layer_num": self.layer_num,
            "safety_time": self.safety_time,
            "depends_on": self.depends_on,
        }


# -- config wiring ----------------------------------------------------------


def area_from_config(cfg: Config, kind: str) -> DrivingArea:
    if kind not in AREAS:
        raise DomainError(f"unknown driving area {kind!r}")
    v = cfg.get_float(f"velocity_kmh.{kind}") / 3.6
    return DrivingArea(kind=kind, max_velocity=v, reverse_allowed=(kind != "hw"))


def cameras_from_config(cfg: Config) -> list:
    groups = []
    for kind in CAMERA_GROUPS:
        groups.append(CameraGroup(
            kind=kind,
            count=cfg.get_int(f"cameras.{kind}.count"),
            max_distance=cfg.get_float(f"cameras.{kind}.max_distance_m"),
            facing=cfg.get_str(f"cameras.{kind}.facing"),
        ))
    return groups


def expand_cameras(groups) -> list:
    cams = []
    for g in groups:
        for _ in range(g.count):
            cams.append(Camera(camera_id=len(cams), group=g))
    return cams


def matrix_from_config(cfg: Config) -> FrameRateMatrix:
    entries = {}
    for area in AREAS:
        scale = cfg.get_float(f"area_fps_scale.{area}")
        for scen in SCENARIOS:
            if area == "hw" and scen == REVERSE:
                continue
            for grp in CAMERA_GROUPS:
                entries[(area, scen, grp)] = cfg.get_float(f"camera_hz.{area}.{scen}.{grp}") * scale
    return FrameRateMatrix(entries)


def route_from_config(cfg: Config, area_kind: str | None = None, seed: int | None = None) -> RouteConfig:
    kind = area_kind if area_kind is not None else cfg.get_str("area")
    area = area_from_config(cfg, kind)
    return RouteConfig(
        area=area,
        distance=cfg.get_float("distance_m"),
        velocity=area.max_velocity,
        max_times_turn=cfg.get_int(f"max_times_turn.{kind}"),
        max_times_reverse=cfg.get_int(f"max_times_reverse.{kind}"),
        max_duration_turn=cfg.get_float(f"max_duration_turn_s.{kind}"),
        max_duration_reverse=cfg.get_float(f"max_duration_reverse_s.{kind}"),
        seed=seed if seed is not None else cfg.get_int("seed"),
    )


def _safety_velocity(cfg: Config, area_kind: str, scenario: str, facing: str) -> float:
    """Closing velocity (m/s) used in the safety-time inversion."""
    if scenario == TURN:
        return cfg.get_float("turn_velocity_kmh") / 3.6
    if scenario == REVERSE:
        v = cfg.get_float("reverse_velocity_kmh")
        if v > 0:
            return v / 3.6
        return cfg.get_float(f"velocity_kmh.{area_kind}") / 3.6
    v = cfg.get_float(f"safety_velocity_kmh.{area_kind}.{facing}")
    if v > 0:
        return v / 3.6
    return cfg.get_float(f"velocity_kmh.{area_kind}") / 3.6


def safety_time_table(cfg: Config, area_kind: str, groups) -> dict:
    """Safety time per (camera group, scenario), honoring explicit overrides."""
    out = {}
    for g in groups:
        for scen in SCENARIOS:
            if area_kind == "hw" and scen == REVERSE:
                continue
            pinned = cfg.get_float(f"safety_time_s.{area_kind}.{g.kind}")
            if pinned > 0:
                out[(g.kind, scen)] = pinned
                continue
            v = _safety_velocity(cfg, area_kind, scen, g.facing)
            params = criteria.RssParams(
                v1=v, v2=v,
                a_max_accel=cfg.get_float("rss.a_max_accel"),
                a_min_brake_correct=cfg.get_float("rss.a_min_brake_correct"),
                a_min_brake=cfg.get_float("rss.a_min_brake"),
            )
            out[(g.kind, scen)] = criteria.safety_time(g.max_distance, params)
    return out


# -- schedule and queue ------------------------------------------------------


def build_scenario_schedule(route: RouteConfig, rng, min_segment: float = 1e-6) -> list:
    """Random tiling of [0, duration]: turn/reverse events in straight driving.

    Event counts are uniform in [0, max_times], durations uniform up to the
    per-kind maximum; events are placed at sorted uniform offsets in the slack
    left by straight driving.  Events are dropped from the shuffled tail until
    their total time is strictly less than the route duration.
    """
    duration = route.duration
    if duration <= min_segment:
        raise DomainError("route duration smaller than one minimal segment")

    n_turn = rng.randint(0, route.max_times_turn)
    n_rev = rng.randint(0, route.max_times_reverse)
    events = []
    for _ in range(n_turn):
        d = rng.uniform(0.0, route.max_duration_turn)
        if route.max_duration_turn > min_segment:
            events.append((TURN, max(d, min_segment)))
    for _ in range(n_rev):
        d = rng.uniform(0.0, route.max_duration_reverse)
        if route.max_duration_reverse > min_segment:
            events.append((REVERSE, max(d, min_segment)))
    rng.shuffle(events)
    while events and sum(d for _, d in events) >= duration:
        events.pop()

    total_events = sum(d for _, d in events)
    slack = duration - total_events
    cuts = sorted(rng.uniform(0.0, slack) for _ in events)

    segments = []
    t = 0.0
    prev_cut = 0.0
    for (kind, dur), cut in zip(events, cuts):
        gap = cut - prev_cut
        if gap > 0.0:
            segments.append(ScenarioSegment(GS, t, gap))
            t += gap
        segments.append(ScenarioSegment(kind, t, dur))
        t += dur
        prev_cut = cut
    if duration - t > 0.0:
        segments.append(ScenarioSegment(GS, t, duration - t))
    return segments


def generate_task_queue(route: RouteConfig, cameras, matrix: FrameRateMatrix, rng,
                        safety_times: dict, schedule=None) -> list:
    """The full task queue for one route, sorted by capture time.

    Each camera emits frames at its (area, scenario)-dependent rate from the
    start of every segment; each frame yields a detection task and, unless the
    camera faces rearward outside a reverse segment, a dependent tracking task.
    """
    if schedule is None:
        schedule = build_scenario_schedule(route, rng)
    cams = expand_cameras(cameras) if cameras and isinstance(cameras[0], CameraGroup) else list(cameras)

    det_parity = {c.camera_id: 0 for c in cams}
    pending = []  # (capture, camera_id, kind_order, record, det_record_or_None)
    for seg in schedule:
        for cam in cams:
            fps = matrix.rate(route.area.kind, seg.kind, cam.group.kind)
            st = safety_times[(cam.group.kind, seg.kind)]
            period = 1.0 / fps
            k = 0
            while True:
                t = seg.start + k * period
                if t >= seg.end:
                    break
                model = "yolo" if det_parity[cam.camera_id] % 2 == 0 else "ssd"
                det_parity[cam.camera_id] += 1
                amount, layers = MODEL_PROFILES[model]
                det = TaskRecord(id=-1, camera_id=cam.camera_id, group=cam.group.kind,
                                 capture_time=t, task_kind=DET, model=model,
                                 amount=amount, layer_num=layers, safety_time=st)
                pending.append((t, cam.camera_id, 0, det, None))
                if not (cam.group.facing == "rear" and seg.kind != REVERSE):
                    g_amount, g_layers = MODEL_PROFILES["goturn"]
                    tra = TaskRecord(id=-1, camera_id=cam.camera_id, group=cam.group.kind,
                                     capture_time=t, task_kind=TRA, model="goturn",
                                     amount=g_amount, layer_num=g_layers, safety_time=st)
                    pending.append((t, cam.camera_id, 1, tra, det))
                k += 1

    pending.sort(key=lambda item: (item[0], item[1], item[2]))
    queue = []
    for i, (_, _, _, rec, dep) in enumerate(pending):
        rec.id = i
        queue.append(rec)
    for _, _, _, rec, dep in pending:
        if dep is not None:
            rec.depends_on = dep.id
    return queue


# -- serialization -----------------------------------------------------------


def queue_to_jsonl(queue) -> str:
    return "".join(json.dumps(t.to_dict()) + "\n" for t in queue)


def parse_queue_jsonl(text: str) -> list:
    queue = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        queue.append(TaskRecord(**d))
    return queue
