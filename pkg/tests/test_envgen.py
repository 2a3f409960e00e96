"""Route schedules, camera task generation, and queue serialization."""

import random

import pytest

from hmaisim.config import load_config
from hmaisim.envgen import (
    Camera,
    CameraGroup,
    DrivingArea,
    FrameRateMatrix,
    RouteConfig,
    ScenarioSegment,
    build_scenario_schedule,
    cameras_from_config,
    expand_cameras,
    generate_task_queue,
    matrix_from_config,
    parse_queue_jsonl,
    queue_to_jsonl,
    route_from_config,
    safety_time_table,
)
from hmaisim.errors import DomainError


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.fixture(scope="module")
def env(cfg):
    route = route_from_config(cfg, "ub", seed=7)
    groups = cameras_from_config(cfg)
    matrix = matrix_from_config(cfg)
    st = safety_time_table(cfg, "ub", groups)
    return route, groups, matrix, st


def _pure(route, kind, seconds=1.0):
    return [ScenarioSegment(kind, 0.0, seconds)]


def _counts(queue):
    det = sum(1 for t in queue if t.task_kind == "det")
    tra = sum(1 for t in queue if t.task_kind == "tra")
    return det, tra


@pytest.mark.parametrize("scenario,det,tra", [
    ("gs", 870, 840),
    ("turn", 950, 920),
    ("reverse", 740, 740),
])
def test_one_second_task_rates(env, scenario, det, tra):
    route, groups, matrix, st = env
    q = generate_task_queue(route, groups, matrix, random.Random(0), st,
                            schedule=_pure(route, scenario))
    assert _counts(q) == (det, tra)


def test_queue_sorted_and_ids_sequential(env):
    route, groups, matrix, st = env
    q = generate_task_queue(route, groups, matrix, random.Random(0), st,
                            schedule=_pure(route, "gs"))
    assert [t.id for t in q] == list(range(len(q)))
    keys = [(t.capture_time, t.camera_id, 0 if t.task_kind == "det" else 1) for t in q]
    assert keys == sorted(keys)


def test_detection_models_alternate_per_camera(env):
    route, groups, matrix, st = env
    # two segments: alternation must carry across the boundary
    sched = [ScenarioSegment("gs", 0.0, 0.5), ScenarioSegment("turn", 0.5, 0.5)]
    q = generate_task_queue(route, groups, matrix, random.Random(0), st, schedule=sched)
    per_cam = {}
    for t in q:
        if t.task_kind == "det":
            per_cam.setdefault(t.camera_id, []).append(t.model)
    for models in per_cam.values():
        expect = ["yolo" if i % 2 == 0 else "ssd" for i in range(len(models))]
        assert models == expect


def test_tracking_depends_on_matching_detection(env):
    route, groups, matrix, st = env
    q = generate_task_queue(route, groups, matrix, random.Random(0), st,
                            schedule=_pure(route, "gs", 0.2))
    by_id = {t.id: t for t in q}
    for t in q:
        if t.task_kind == "det":
            assert t.depends_on is None
        else:
            dep = by_id[t.depends_on]
            assert dep.task_kind == "det"
            assert dep.camera_id == t.camera_id
            assert dep.capture_time == t.capture_time
            assert t.model == "goturn"


def test_rear_camera_tracks_only_while_reversing(env):
    route, groups, matrix, st = env
    rear_ids = {c.camera_id for c in expand_cameras(groups) if c.group.facing == "rear"}
    fwd = generate_task_queue(route, groups, matrix, random.Random(0), st,
                              schedule=_pure(route, "gs"))
    assert not any(t.task_kind == "tra" and t.camera_id in rear_ids for t in fwd)
    rev = generate_task_queue(route, groups, matrix, random.Random(0), st,
                              schedule=_pure(route, "reverse"))
    assert any(t.task_kind == "tra" and t.camera_id in rear_ids for t in rev)


def test_camera_expansion_accepts_both_forms(env):
    route, groups, matrix, st = env
    a = generate_task_queue(route, groups, matrix, random.Random(0), st,
                            schedule=_pure(route, "gs", 0.1))
    b = generate_task_queue(route, expand_cameras(groups), matrix, random.Random(0), st,
                            schedule=_pure(route, "gs", 0.1))
    assert queue_to_jsonl(a) == queue_to_jsonl(b)


def test_jsonl_round_trip(env):
    route, groups, matrix, st = env
    q = generate_task_queue(route, groups, matrix, random.Random(3), st,
                            schedule=_pure(route, "turn", 0.3))
    text = queue_to_jsonl(q)
    back = parse_queue_jsonl(text)
    assert len(back) == len(q)
    assert all(x == y for x, y in zip(back, q))
    assert queue_to_jsonl(back) == text


def test_schedule_tiles_route_exactly(env):
    route, _, _, _ = env
    for seed in range(20):
        segs = build_scenario_schedule(route, random.Random(seed))
        assert segs[0].start == 0.0
        for a, b in zip(segs, segs[1:]):
            assert b.start == pytest.approx(a.end, abs=1e-9)
        assert segs[-1].end == pytest.approx(route.duration, abs=1e-9)
        assert all(s.duration > 0 for s in segs)
        assert all(s.kind in ("gs", "turn", "reverse") for s in segs)


def test_schedule_deterministic_per_seed(env):
    route, _, _, _ = env
    a = build_scenario_schedule(route, random.Random(11))
    b = build_scenario_schedule(route, random.Random(11))
    assert a == b
    c = build_scenario_schedule(route, random.Random(12))
    assert a != c or len(a) == len(c)  # different seed usually differs


def test_highway_forbids_reverse(cfg):
    area = DrivingArea(kind="hw", max_velocity=120 / 3.6, reverse_allowed=False)
    with pytest.raises(DomainError):
        RouteConfig(area=area, distance=1000.0, velocity=area.max_velocity,
                    max_times_turn=1, max_times_reverse=1,
                    max_duration_turn=5.0, max_duration_reverse=5.0, seed=0)
    with pytest.raises(DomainError):
        DrivingArea(kind="hw", max_velocity=1.0, reverse_allowed=True)
    m = matrix_from_config(cfg)
    with pytest.raises(DomainError):
        m.rate("hw", "reverse", "fc")


def test_matrix_rejects_nonpositive_rate():
    with pytest.raises(DomainError):
        FrameRateMatrix({("ub", "gs", "fc"): 0.0})


def test_route_validation(cfg):
    with pytest.raises(DomainError):
        route_from_config(load_config(overrides={"distance_m": "0"}), "ub")
    r = route_from_config(cfg, "ub", seed=42)
    assert r.seed == 42
    assert r.duration == pytest.approx(r.distance / r.velocity)


def test_safety_time_inverts_camera_range(cfg, env):
    route, groups, matrix, st = env
    # front camera, straight driving, urban-basic closing speed 60 km/h
    assert st[("fc", "gs")] == pytest.approx(1.8013915573246777, abs=1e-9)
    from hmaisim.criteria import RssParams, rss_min_distance
    by_kind = {g.kind: g for g in groups}
    for (kind, scen), t in st.items():
        g = by_kind[kind]
        assert t > 0
    v = 60 / 3.6
    d = rss_min_distance(st[("fc", "gs")], RssParams(v1=v, v2=v))
    assert d == pytest.approx(250.0, abs=1e-6)


def test_safety_time_pin_override(cfg):
    over = load_config(overrides={"safety_time_s.ub.fc": "0.5"})
    groups = cameras_from_config(over)
    st = safety_time_table(over, "ub", groups)
    assert st[("fc", "gs")] == 0.5
    assert st[("fc", "turn")] == 0.5
