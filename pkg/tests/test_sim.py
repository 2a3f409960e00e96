"""Discrete-event engine: serialization, dependencies, rewards, braking."""

import pytest

from hmaisim.config import load_config
from hmaisim.criteria import NormalizationScales, PlatformSummary, gvalue
from hmaisim.envgen import TaskRecord
from hmaisim.errors import DomainError
from hmaisim.platform import PlatformConfig, build_platform, kinds_from_config
from hmaisim.sim import BrakingReport, SimConfig, braking_report, run_episode, stm_rate

KINDS = kinds_from_config(load_config())
YOLO_T = 1 / 170.37   # s per frame on the detection-oriented kind
SSD_T = 1 / 74.99


def _platform(spec=(("sconvod", 2),)):
    return build_platform(PlatformConfig(tuple((KINDS[k], n) for k, n in spec)))


def _task(tid, capture=0.0, model="yolo", kind="det", st=1.0, dep=None, cam=0):
    amount, layers = {"yolo": (16.0, 101), "ssd": (26.0, 53), "goturn": (11.0, 11)}[model]
    return TaskRecord(id=tid, camera_id=cam, group="fc", capture_time=capture,
                      task_kind=kind, model=model, amount=amount,
                      layer_num=layers, safety_time=st, depends_on=dep)


class ToAccel:
    """Route every task to one fixed accelerator."""

    name = "pin"

    def __init__(self, idx=0):
        self.idx = idx

    def choose(self, task, view):
        return self.idx


class RoundRobin:
    name = "rr"

    def __init__(self):
        self.i = -1

    def choose(self, task, view):
        self.i += 1
        return self.i % len(view.states)


class WindowAll:
    """Windowed policy: everything in the window goes to accelerator 0."""

    name = "win"

    def __init__(self, window_s):
        self.window_s = window_s

    def assign_window(self, released, view):
        return [0] * len(released)


def test_fifo_serializes_same_accelerator():
    q = [_task(0), _task(1)]
    rep = run_episode(q, _platform(), ToAccel(0))
    r0, r1 = sorted(rep.records, key=lambda r: r.task_id)
    assert r0.start_time == 0.0
    assert r0.completion_time == pytest.approx(YOLO_T)
    assert r1.start_time == pytest.approx(YOLO_T)      # queued behind task 0
    assert r1.completion_time == pytest.approx(2 * YOLO_T)
    assert rep.makespan == pytest.approx(2 * YOLO_T)


def test_parallel_dispatch_on_idle_accelerators():
    q = [_task(0), _task(1)]
    rep = run_episode(q, _platform(), RoundRobin())
    starts = sorted(r.start_time for r in rep.records)
    assert starts == [0.0, 0.0]
    assert rep.makespan == pytest.approx(YOLO_T)
    assert rep.utilization == pytest.approx(2 * YOLO_T / (2 * rep.makespan))


def test_dependency_releases_at_parent_completion():
    q = [_task(0, model="yolo"), _task(1, model="goturn", kind="tra", dep=0)]
    rep = run_episode(q, _platform(), ToAccel(0))
    child = next(r for r in rep.records if r.task_id == 1)
    assert child.dispatch_time == pytest.approx(YOLO_T)   # not its capture time
    assert child.start_time == pytest.approx(YOLO_T)
    assert child.response_time == pytest.approx(YOLO_T + 1 / 352.69)


def test_scheduler_overhead_delays_start():
    cfg = SimConfig(t_sched_overhead=0.002)
    rep = run_episode([_task(0, capture=0.1)], _platform(), ToAccel(0), cfg)
    rec = rep.records[0]
    assert rec.dispatch_time == pytest.approx(0.1)
    assert rec.start_time == pytest.approx(0.102)
    assert rec.response_time == pytest.approx(0.002 + YOLO_T)


def test_r_sample_counts_receiver_when_idle():
    # two tasks at t=0 on a 2-wide platform: first sees 1/2, second sees 2/2
    rep = run_episode([_task(0), _task(1)], _platform(), RoundRobin())
    samples = sorted(r.r_sample for r in rep.records)
    assert samples == [0.5, 1.0]
    # pinning both to one accelerator: second dispatch targets a busy unit -> 1/2
    rep2 = run_episode([_task(0), _task(1)], _platform(), ToAccel(0))
    assert sorted(r.r_sample for r in rep2.records) == [0.5, 0.5]


def test_matching_scores_and_meet_rate():
    st = 2 * YOLO_T
    q = [_task(0, st=st), _task(1, st=st), _task(2, st=st)]
    rep = run_episode(q, _platform(), ToAccel(0))
    by_id = {r.task_id: r for r in rep.records}
    assert by_id[0].ms == pytest.approx(0.5)
    assert by_id[1].ms == pytest.approx(1.0)
    assert by_id[2].ms == -1.0                      # third misses the deadline
    assert rep.stm_rate == pytest.approx(2 / 3)
    assert rep.ms == pytest.approx(0.5)


def test_rewards_telescope_to_final_objective():
    q = [_task(i, capture=0.001 * i, model=("yolo", "ssd", "goturn")[i % 3],
               kind="det" if i % 3 < 2 else "tra") for i in range(12)]
    for mode in ("paper-literal", "arithmetic-mean"):
        cfg = SimConfig(r_balance_mode=mode, e_ref=50.0, t_ref=0.1)
        rep = run_episode(q, _platform((("sconvod", 2), ("mconvmc", 1))), RoundRobin(), cfg)
        final = PlatformSummary(energy=rep.energy, busy_max=rep.busy_max,
                                r_balance=rep.r_balance, ms=rep.ms)
        total = gvalue(final, NormalizationScales(50.0, 0.1)) + rep.ms
        assert sum(r.reward for r in rep.records) == pytest.approx(total, abs=1e-12)


def test_windowed_policy_batches_releases():
    q = [_task(0, capture=0.01), _task(1, capture=0.02), _task(2, capture=0.26)]
    rep = run_episode(q, _platform(), WindowAll(0.25))
    by_id = {r.task_id: r for r in rep.records}
    # releases keep their instant; starts wait for the window boundary
    assert by_id[0].dispatch_time == pytest.approx(0.01)
    assert by_id[0].start_time == pytest.approx(0.25)
    assert by_id[1].start_time == pytest.approx(0.25 + YOLO_T)
    assert by_id[2].start_time >= 0.5


def test_window_assignment_length_checked():
    class Bad:
        name = "bad"
        window_s = 0.1

        def assign_window(self, released, view):
            return [0]

    with pytest.raises(DomainError):
        run_episode([_task(0), _task(1)], _platform(), Bad())


def test_invalid_accelerator_index_rejected():
    with pytest.raises(DomainError):
        run_episode([_task(0)], _platform(), ToAccel(7))


def test_queue_validation():
    base = _platform()
    with pytest.raises(DomainError):
        run_episode([_task(0, capture=1.0), _task(1, capture=0.5)], base, ToAccel(0))
    with pytest.raises(DomainError):
        run_episode([_task(0), _task(0)], _platform(), ToAccel(0))
    with pytest.raises(DomainError):
        run_episode([_task(1, kind="tra", model="goturn", dep=9)], _platform(), ToAccel(0))
    chain = [_task(0), _task(1, kind="tra", model="goturn", dep=0),
             _task(2, kind="tra", model="goturn", dep=1)]
    with pytest.raises(DomainError):
        run_episode(chain, _platform(), ToAccel(0))


def test_empty_queue_yields_empty_report():
    rep = run_episode([], _platform(), ToAccel(0))
    assert rep.records == []
    assert rep.energy == 0.0 and rep.makespan == 0.0 and rep.stm_rate == 0.0
    with pytest.raises(DomainError):
        stm_rate(rep)


def test_on_complete_callback_order():
    seen = []
    q = [_task(0), _task(1), _task(2)]
    run_episode(q, _platform(), RoundRobin(),
                on_complete=lambda t, res, rew: seen.append((t.id, rew)))
    assert [tid for tid, _ in seen] == sorted(tid for tid, _ in seen) or len(seen) == 3
    assert len(seen) == 3


def test_summary_dict_has_no_wall_clock():
    rep = run_episode([_task(0)], _platform(), ToAccel(0))
    d = rep.to_dict()
    assert "sched_wall_s" not in d["summary"]
    assert "sched_wall_s" not in d["records"][0]


def test_braking_report_decomposition():
    q = [_task(0, st=1.8)]
    rep = run_episode(q, _platform(), ToAccel(0))
    v = 60 / 3.6
    br = braking_report(rep, velocity=v, a_brake=6.2, trigger_task_id=0,
                        t_data=0.001, t_mech=0.019, t_schedule=0.002,
                        range_limit=250.0)
    assert br.t_wait == 0.0
    assert br.t_compute == pytest.approx(YOLO_T)
    assert br.total_time == pytest.approx(YOLO_T + 0.001 + 0.019 + 0.002)
    assert br.distance == pytest.approx(v * br.total_time + v * v / (2 * 6.2))
    assert br.safe is True
    assert br.trigger_task_id == 0


def test_braking_wait_excludes_overhead_and_clamps():
    # task 1 waits behind task 0 on the same unit
    rep = run_episode([_task(0), _task(1)], _platform(), ToAccel(0))
    br = braking_report(rep, velocity=10.0, a_brake=6.2, trigger_task_id=1,
                        t_schedule=0.0)
    assert br.t_wait == pytest.approx(YOLO_T)
    assert br.safe is None                          # no range limit given
    with pytest.raises(DomainError):
        braking_report(rep, velocity=10.0, a_brake=0.0, trigger_task_id=1)
    with pytest.raises(DomainError):
        braking_report(rep, velocity=-1.0, a_brake=6.2, trigger_task_id=1)
    with pytest.raises(DomainError):
        braking_report(rep, velocity=10.0, a_brake=6.2, trigger_task_id=99)


def test_braking_zero_velocity_is_safe_stop():
    rep = run_episode([_task(0)], _platform(), ToAccel(0))
    br = braking_report(rep, velocity=0.0, a_brake=6.2, trigger_task_id=0,
                        range_limit=250.0)
    assert br.distance == 0.0
    assert br.safe is True


def test_sim_config_validation():
    with pytest.raises(DomainError):
        SimConfig(r_balance_mode="median")
    with pytest.raises(DomainError):
        SimConfig(e_ref=0.0)
    with pytest.raises(DomainError):
        SimConfig(t_sched_overhead=-0.1)
