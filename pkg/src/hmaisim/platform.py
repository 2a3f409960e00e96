"""Hardware substrate: accelerator kinds, per-(model, kind) cost tables, and
platform compositions (one mixed default plus homogeneous presets)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import ACCEL_KINDS, MODELS, Config
from .errors import DomainError

STYLES = ("sconv", "ssconv", "mconv")
PROPAGATIONS = ("op", "ip", "mp")
REGISTERS = ("dr", "cr")

# (style, propagation, register) taxonomy tags of the three default kinds.
_KIND_TAGS = {
    "sconvod": ("sconv", "op", "dr"),
    "sconvic": ("ssconv", "ip", "cr"),
    "mconvmc": ("mconv", "mp", "cr"),
}

_PRESET_INSTANCES = {
    "hmai": (("sconvod", 4), ("sconvic", 4), ("mconvmc", 3)),
    "homo-sconvod": (("sconvod", 13),),
    "homo-sconvic": (("sconvic", 13),),
    "homo-mconvmc": (("mconvmc", 12),),
}


@dataclass(frozen=True)
class AcceleratorKind:
    """One accelerator design: taxonomy tags plus measured throughput/energy tables."""

    name: str
    style: str
    propagation: str
    register: str
    fps: dict
    energy_per_gmac: dict
    idle_power: float = 0.0

    def __post_init__(self):
        if self.style not in STYLES or self.propagation not in PROPAGATIONS \
                or self.register not in REGISTERS:
            raise DomainError(f"unknown taxonomy tag on kind {self.name}")
        for model, v in self.fps.items():
            if v <= 0:
                raise DomainError(f"non-positive fps for {model} on {self.name}")


def exec_time(model: str, kind: AcceleratorKind) -> float:
    """Seconds per frame of `model` on `kind` (reciprocal throughput)."""
    try:
        return 1.0 / kind.fps[model]
    except KeyError:
        raise DomainError(f"model {model!r} unknown to accelerator kind {kind.name!r}") from None


def exec_energy(task, kind: AcceleratorKind) -> float:
    """Joules to run `task` on `kind`: computation amount times the kind's
    per-GMAC coefficient for the task's model."""
    try:
        return task.amount * kind.energy_per_gmac[task.model]
    except KeyError:
        raise DomainError(f"model {task.model!r} unknown to accelerator kind {kind.name!r}") from None


@dataclass(frozen=True)
class PlatformConfig:
    """Ordered kind/count composition of a platform."""

    instances: tuple

    def __post_init__(self):
        if sum(n for _, n in self.instances) < 1:
            raise DomainError("platform must contain at least one accelerator")
        for _, n in self.instances:
            if n < 0:
                raise DomainError("negative instance count")


@dataclass
class AcceleratorState:
    """Live per-accelerator info: queue horizon plus accumulated E/T/R/MS."""

    index: int
    kind: AcceleratorKind
    busy_until: float = 0.0
    fifo: list = field(default_factory=list)
    energy: float = 0.0
    busy_time: float = 0.0
    r_balance: float = 0.0
    ms: float = 0.0
    num_executed: int = 0


def build_platform(config: PlatformConfig) -> list:
    """Zero-initialized accelerator states, indexed in composition order."""
    states = []
    for kind, count in config.instances:
        for _ in range(count):
            states.append(AcceleratorState(index=len(states), kind=kind))
    return states


def kinds_from_config(cfg: Config) -> dict:
    """The three default kinds with throughput/energy tables taken from config."""
    kinds = {}
    for name in ACCEL_KINDS:
        style, prop, reg = _KIND_TAGS[name]
        fps = {m: cfg.get_float(f"kind.{name}.fps.{m}") for m in MODELS}
        energy = {m: cfg.get_float(f"kind.{name}.energy_per_gmac.{m}") for m in MODELS}
        kinds[name] = AcceleratorKind(name, style, prop, reg, fps, energy)
    return kinds


def platform_from_config(cfg: Config, preset: str | None = None) -> PlatformConfig:
    """Resolve a platform composition from a preset name or an explicit
    `kind:count,...` instance list (the latter wins when both are set)."""
    kinds = kinds_from_config(cfg)
    spec = cfg.get_str("platform.instances").strip()
    if spec:
        instances = []
        for part in spec.split(","):
            name, _, count = part.partition(":")
            name = name.strip()
            if name not in kinds:
                raise DomainError(f"unknown accelerator kind {name!r}")
            try:
                instances.append((kinds[name], int(count)))
            except ValueError:
                raise DomainError(f"bad instance count in {part!r}") from None
        return PlatformConfig(tuple(instances))
    name = preset if preset is not None else cfg.get_str("platform")
    if name not in _PRESET_INSTANCES:
        raise DomainError(f"unknown platform preset {name!r}")
    return PlatformConfig(tuple((kinds[k], n) for k, n in _PRESET_INSTANCES[name]))


def utilization_rate(report) -> float:
    """Fraction of total accelerator-time spent executing: sum of per-task
    execution times over (accelerator count x makespan)."""
    if report.makespan <= 0:
        raise DomainError("utilization undefined for zero makespan")
    busy = sum(rec.exec_time for rec in report.records)
    return busy / (report.num_accelerators * report.makespan)
