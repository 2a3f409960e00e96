"""Accelerator kinds, cost tables, and platform presets."""

import pytest

from hmaisim.config import load_config
from hmaisim.envgen import TaskRecord
from hmaisim.platform import (
    AcceleratorKind,
    PlatformConfig,
    build_platform,
    exec_energy,
    exec_time,
    kinds_from_config,
    platform_from_config,
)
from hmaisim.errors import DomainError


@pytest.fixture(scope="module")
def kinds():
    return kinds_from_config(load_config())


def _task(model="yolo", amount=16.0):
    return TaskRecord(id=0, camera_id=0, group="fc", capture_time=0.0,
                      task_kind="det", model=model, amount=amount,
                      layer_num=101, safety_time=1.0)


def test_exec_time_is_reciprocal_throughput(kinds):
    assert exec_time("yolo", kinds["sconvod"]) == pytest.approx(1 / 170.37)
    assert exec_time("ssd", kinds["sconvic"]) == pytest.approx(1 / 82.94)
    assert exec_time("goturn", kinds["mconvmc"]) == pytest.approx(1 / 500.54)


def test_exec_time_unknown_model(kinds):
    with pytest.raises(DomainError):
        exec_time("resnet", kinds["sconvod"])


def test_exec_energy_scales_with_amount(kinds):
    k = kinds["sconvod"]
    e1 = exec_energy(_task(amount=16.0), k)
    e2 = exec_energy(_task(amount=32.0), k)
    assert e2 == pytest.approx(2 * e1)
    assert e1 == pytest.approx(16.0 * k.energy_per_gmac["yolo"])


def test_each_model_has_a_distinct_best_kind(kinds):
    """Routing pressure: no single kind dominates all three model families."""
    best = {m: min(kinds, key=lambda n: exec_time(m, kinds[n])) for m in ("yolo", "ssd", "goturn")}
    assert best["yolo"] == "sconvod"
    assert best["ssd"] == "sconvic"
    assert best["goturn"] == "mconvmc"
    # the fast kind is also the cheap kind, per the calibrated energy tables
    for m in ("yolo", "ssd", "goturn"):
        cheapest = min(kinds, key=lambda n: kinds[n].energy_per_gmac[m])
        assert cheapest == best[m]


def test_default_platform_composition(kinds):
    cfg = load_config()
    p = platform_from_config(cfg)
    counts = {k.name: n for k, n in p.instances}
    assert counts == {"sconvod": 4, "sconvic": 4, "mconvmc": 3}
    states = build_platform(p)
    assert len(states) == 11
    assert [s.index for s in states] == list(range(11))
    assert all(s.busy_until == 0.0 and s.num_executed == 0 for s in states)


@pytest.mark.parametrize("preset,kind,count", [
    ("homo-sconvod", "sconvod", 13),
    ("homo-sconvic", "sconvic", 13),
    ("homo-mconvmc", "mconvmc", 12),
])
def test_homogeneous_presets(preset, kind, count):
    p = platform_from_config(load_config(), preset)
    assert len(p.instances) == 1
    k, n = p.instances[0]
    assert (k.name, n) == (kind, count)


def test_explicit_instance_list_overrides_preset():
    cfg = load_config(overrides={"platform.instances": "sconvod:2, mconvmc:1"})
    p = platform_from_config(cfg, "homo-sconvic")
    names = [(k.name, n) for k, n in p.instances]
    assert names == [("sconvod", 2), ("mconvmc", 1)]


def test_bad_platform_specs():
    with pytest.raises(DomainError):
        platform_from_config(load_config(), "dense-tpu")
    with pytest.raises(DomainError):
        platform_from_config(load_config(overrides={"platform.instances": "quantum:3"}))
    with pytest.raises(DomainError):
        platform_from_config(load_config(overrides={"platform.instances": "sconvod:two"}))
    with pytest.raises(DomainError):
        PlatformConfig(instances=())


def test_kind_validation():
    with pytest.raises(DomainError):
        AcceleratorKind("x", "systolic", "op", "dr", {"yolo": 1.0}, {"yolo": 1.0})
    with pytest.raises(DomainError):
        AcceleratorKind("x", "sconv", "op", "dr", {"yolo": 0.0}, {"yolo": 1.0})
