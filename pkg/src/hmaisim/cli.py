"""Command-line surface.

Subcommands: `gen` (task queue + manifest), `train` (weights + loss trace),
`compare` (several schedulers on one queue, tabulated), `brake`
(braking-distance breakdown per scheduler).

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 domain error.
Every config key can also be set through the environment (HMAISIM_ prefix,
`__` for dots) or a repeated `--set key=value` flag.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys

from . import __version__, envgen, platform as hw, sched
from .config import AREAS, SCHEDULERS, Config, ConfigError, load_config
from .errors import DomainError
from .sim import SimConfig, braking_report, run_episode

_FORMATS = ("json", "csv", "text")


# -- shared plumbing ----------------------------------------------------------


def _resolve_config(args) -> Config:
    overrides = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"bad --set value (expected KEY=VALUE): {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "area", None):
        overrides["area"] = args.area
    return load_config(getattr(args, "config", None), overrides=overrides,
                       env=os.environ)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _manifest(cfg: Config, seeds: dict, artifacts: dict, extra=None) -> dict:
    m = {
        "tool": "hmaisim",
        "version": __version__,
        "config": cfg.snapshot(),
        "seeds": seeds,
        "artifacts": artifacts,
    }
    if extra:
        m.update(extra)
    return m


def _generate_queue(cfg: Config):
    """Route -> scenario schedule -> task queue, all from the config seed."""
    seed = cfg.get_int("seed")
    area = cfg.get_str("area")
    groups = envgen.cameras_from_config(cfg)
    matrix = envgen.matrix_from_config(cfg)
    st = envgen.safety_time_table(cfg, area, groups)
    route = envgen.route_from_config(cfg, area_kind=area, seed=seed)
    rng = random.Random(seed)
    segments = envgen.build_scenario_schedule(route, rng,
                                              cfg.get_float("min_segment_s"))
    queue = envgen.generate_task_queue(route, groups, matrix, rng, st,
                                       schedule=segments)
    return queue, segments


def _load_queue(path: str):
    """Parse a queue file; segments come from its manifest when present."""
    with open(path, "r", encoding="utf-8") as fh:
        queue = envgen.parse_queue_jsonl(fh.read())
    segments = None
    manifest_path = path + ".manifest.json"
    if os.path.exists(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as fh:
            m = json.load(fh)
        segs = m.get("segments")
        if segs:
            segments = [envgen.ScenarioSegment(kind=s["kind"], start=s["start"],
                                               duration=s["duration"])
                        for s in segs]
    return queue, segments


def _scheduler_list(raw: str) -> list:
    names = [s.strip() for s in raw.split(",") if s.strip()]
    if not names:
        raise ConfigError("no scheduler names given")
    unknown = [n for n in names if n not in SCHEDULERS]
    if unknown:
        raise ConfigError(f"unknown scheduler names: {', '.join(unknown)}")
    return names


def _normalization(cfg: Config, queue, platform_config):
    """Pinned scales when configured, else calibrated from the worst case."""
    e_ref = cfg.get_float("sim.e_ref")
    t_ref = cfg.get_float("sim.t_ref")
    if e_ref <= 0 or t_ref <= 0:
        cal_e, cal_t = sched.calibrate_normalization(
            queue, platform_config, cfg.get_str("sim.r_balance_mode"))
        if e_ref <= 0:
            e_ref = cal_e
        if t_ref <= 0:
            t_ref = cal_t
    return e_ref, t_ref


def _run_schedulers(cfg: Config, names, queue, segments, weights_path):
    platform_config = hw.platform_from_config(cfg)
    r_mode = cfg.get_str("sim.r_balance_mode")
    e_ref, t_ref = _normalization(cfg, queue, platform_config)
    seed = cfg.get_int("seed")
    reports = []
    for name in names:
        sim_cfg = SimConfig(
            t_sched_overhead=cfg.get_float(f"sim.t_sched_overhead_s.{name}"),
            r_balance_mode=r_mode, e_ref=e_ref, t_ref=t_ref)
        states = hw.build_platform(platform_config)
        policy = sched.build_policy(name, cfg, states, sim_cfg,
                                    segments=segments,
                                    weights_path=weights_path, seed=seed)
        reports.append(run_episode(queue, states, policy, sim_cfg))
    return reports


def _format_cell(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _render_table(columns, rows, fmt: str, manifest: dict) -> str:
    if fmt == "json":
        return json.dumps({"manifest": manifest, "columns": list(columns),
                           "rows": rows}, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# manifest " + json.dumps(manifest, sort_keys=True) + "\n")
        w = csv.writer(buf)
        w.writerow(columns)
        for r in rows:
            w.writerow([r[c] for c in columns])
        return buf.getvalue()
    # aligned text
    table = [[_format_cell(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in table)) if table else len(c)
              for i, c in enumerate(columns)]
    lines = ["# manifest " + json.dumps(manifest, sort_keys=True)]
    lines.append("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip())
    for row in table:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _emit(args, rendered: str, manifest: dict, timing: dict) -> None:
    """Deterministic artifact to --out (or stdout); wall clock kept apart."""
    if args.out:
        _write_text(args.out, rendered)
        _write_text(args.out + ".manifest.json",
                    json.dumps(manifest, sort_keys=True) + "\n")
        _write_text(args.out + ".timing.json",
                    json.dumps(timing, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(rendered)
        print("timing " + json.dumps(timing, sort_keys=True), file=sys.stderr)


# -- subcommands --------------------------------------------------------------


def cmd_gen(args) -> int:
    cfg = _resolve_config(args)
    queue, segments = _generate_queue(cfg)
    _write_text(args.out, envgen.queue_to_jsonl(queue))
    manifest = _manifest(
        cfg,
        seeds={"seed": cfg.get_int("seed")},
        artifacts={"queue": args.out},
        extra={
            "area": cfg.get_str("area"),
            "num_tasks": len(queue),
            "segments": [{"kind": s.kind, "start": s.start,
                          "duration": s.duration} for s in segments],
        })
    _write_text(args.out + ".manifest.json",
                json.dumps(manifest, sort_keys=True) + "\n")
    print(f"wrote {len(queue)} tasks to {args.out}")
    return 0


def cmd_train(args) -> int:
    from .flexai import save_weights, train_agent

    cfg = _resolve_config(args)
    episodes = (args.episodes if args.episodes is not None
                else cfg.get_int("train.episodes"))
    if episodes < 0:
        raise ConfigError("episodes must be non-negative")
    seed = cfg.get_int("seed")
    area = cfg.get_str("area")
    result = train_agent(cfg, episodes, area=area, seed=seed)
    agent = result.agent
    save_weights(args.out, agent.eval_net, agent.scales, area,
                 config_echo=agent.cfg.to_dict(), seed=seed)
    loss_path = os.path.splitext(args.out)[0] + ".loss.csv"
    with open(loss_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "iteration", "loss"])
        w.writerows(result.loss_rows)
    print(f"trained {episodes} episodes; weights -> {args.out}; "
          f"loss trace -> {loss_path}")
    return 0


_TABLE_COLUMNS = ("scheduler", "num_tasks", "time", "makespan", "energy",
                  "r_balance", "ms", "stm_rate", "utilization")


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    names = _scheduler_list(args.scheduler)
    if args.queue:
        queue, segments = _load_queue(args.queue)
    else:
        queue, segments = _generate_queue(cfg)
    reports = _run_schedulers(cfg, names, queue, segments, args.weights)
    rows = []
    for rep in reports:
        rows.append({
            "scheduler": rep.scheduler,
            "num_tasks": len(rep.records),
            "time": rep.busy_max,
            "makespan": rep.makespan,
            "energy": rep.energy,
            "r_balance": rep.r_balance,
            "ms": rep.ms,
            "stm_rate": rep.stm_rate,
            "utilization": rep.utilization,
        })
    manifest = _manifest(
        cfg,
        seeds={"seed": cfg.get_int("seed")},
        artifacts={"queue": args.queue or "(generated)", "out": args.out or "-"},
        extra={"schedulers": names,
               "e_ref": reports[0].e_ref if reports else 1.0,
               "t_ref": reports[0].t_ref if reports else 1.0})
    timing = {rep.scheduler: rep.sched_wall_s for rep in reports}
    _emit(args, _render_table(_TABLE_COLUMNS, rows, args.format, manifest),
          manifest, timing)
    return 0


_BRAKE_COLUMNS = ("scheduler", "trigger_task_id", "t_wait", "t_schedule",
                  "t_compute", "t_data", "t_mech", "total_time", "velocity",
                  "distance", "range_limit", "safe")


def cmd_brake(args) -> int:
    cfg = _resolve_config(args)
    names = _scheduler_list(args.scheduler)
    if args.queue:
        queue, segments = _load_queue(args.queue)
    else:
        queue, segments = _generate_queue(cfg)

    area = cfg.get_str("area")
    cruise = cfg.get_float(f"velocity_kmh.{area}") / 3.6
    v = cfg.get_float("brake.velocity_kmh")
    velocity = cruise if v < 0 else v / 3.6

    facing_of = {g.kind: g.facing for g in envgen.cameras_from_config(cfg)}
    range_of = {g.kind: g.max_distance for g in envgen.cameras_from_config(cfg)}
    trigger_distance = cfg.get_float("brake.trigger_distance_m")
    trigger_time = trigger_distance / cruise if trigger_distance > 0 else 0.0
    trigger = next((t for t in queue
                    if t.task_kind == envgen.DET
                    and facing_of.get(t.group) == "forward"
                    and t.capture_time >= trigger_time), None)
    if trigger is None:
        raise DomainError("trigger not found: no forward-camera detection task "
                          f"at or after t={trigger_time:.3f}s")
    range_limit = range_of[trigger.group]

    reports = _run_schedulers(cfg, names, queue, segments, args.weights)
    rows = []
    for rep in reports:
        overhead = cfg.get_float(f"sim.t_sched_overhead_s.{rep.scheduler}")
        br = braking_report(rep, velocity, cfg.get_float("brake.decel"),
                            trigger.id,
                            t_data=cfg.get_float("brake.t_data_s"),
                            t_mech=cfg.get_float("brake.t_mech_s"),
                            t_schedule=overhead, range_limit=range_limit)
        row = {"scheduler": rep.scheduler}
        row.update(br.to_dict())
        rows.append(row)
    manifest = _manifest(
        cfg,
        seeds={"seed": cfg.get_int("seed")},
        artifacts={"queue": args.queue or "(generated)", "out": args.out or "-"},
        extra={"schedulers": names, "trigger_task_id": trigger.id,
               "velocity_mps": velocity, "range_limit_m": range_limit})
    timing = {rep.scheduler: rep.sched_wall_s for rep in reports}
    _emit(args, _render_table(_BRAKE_COLUMNS, rows, args.format, manifest),
          manifest, timing)
    return 0


# -- parser -------------------------------------------------------------------


def _add_common(sp) -> None:
    sp.add_argument("--config", help="key=value config file")
    sp.add_argument("--seed", type=int, default=None, help="master seed")
    sp.add_argument("--area", choices=AREAS, default=None,
                    help="driving area preset")
    sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one config key (repeatable)")


def _add_run_io(sp) -> None:
    sp.add_argument("--scheduler", default="minmin,ata,worst",
                    help="comma-separated scheduler names "
                         f"({'|'.join(SCHEDULERS)})")
    sp.add_argument("--weights", default=None,
                    help="trained weights file (needed for flexai)")
    sp.add_argument("--queue", default=None,
                    help="existing queue file (default: generate from config)")
    sp.add_argument("--out", default=None, help="output path (default: stdout)")
    sp.add_argument("--format", choices=_FORMATS, default="text")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hmaisim",
        description="Deterministic simulator of camera task scheduling on a "
                    "heterogeneous accelerator platform.")
    p.add_argument("--version", action="version",
                   version="%(prog)s " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a task queue (JSON lines)")
    _add_common(g)
    g.add_argument("--out", required=True, help="queue output path")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train the learning scheduler")
    _add_common(t)
    t.add_argument("--episodes", type=int, default=None)
    t.add_argument("--out", required=True, help="weights output path (JSON)")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare",
                       help="run schedulers on one queue and tabulate metrics")
    _add_common(c)
    _add_run_io(c)
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("brake", help="braking-distance breakdown per scheduler")
    _add_common(b)
    _add_run_io(b)
    b.set_defaults(func=cmd_brake)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
