"""Deterministic simulator of streaming camera-perception workloads on a
heterogeneous multi-accelerator platform, with classical and learned
schedulers and safety-oriented metrics."""

__version__ = "0.1.0"

from .config import Config, ConfigError, load_config
from .criteria import (
    NormalizationScales,
    PlatformSummary,
    RssParams,
    gvalue,
    matching_score_det,
    matching_score_tra,
    reward,
    rss_min_distance,
    safety_time,
    update_hw_info,
)
from .envgen import (
    RouteConfig,
    TaskRecord,
    build_scenario_schedule,
    generate_task_queue,
    parse_queue_jsonl,
    queue_to_jsonl,
)
from .errors import DomainError
from .platform import (
    AcceleratorKind,
    AcceleratorState,
    PlatformConfig,
    build_platform,
    platform_from_config,
    utilization_rate,
)
from .sim import (
    BrakingReport,
    EpisodeReport,
    SimConfig,
    TaskResult,
    braking_report,
    run_episode,
    stm_rate,
)

__all__ = [
    "__version__",
    "Config", "ConfigError", "load_config",
    "NormalizationScales", "PlatformSummary", "RssParams",
    "gvalue", "matching_score_det", "matching_score_tra", "reward",
    "rss_min_distance", "safety_time", "update_hw_info",
    "RouteConfig", "TaskRecord", "build_scenario_schedule",
    "generate_task_queue", "parse_queue_jsonl", "queue_to_jsonl",
    "DomainError",
    "AcceleratorKind", "AcceleratorState", "PlatformConfig",
    "build_platform", "platform_from_config", "utilization_rate",
    "BrakingReport", "EpisodeReport", "SimConfig", "TaskResult",
    "braking_report", "run_episode", "stm_rate",
]
