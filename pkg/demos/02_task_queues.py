"""
Streaming perception task queues
================================

A route through a driving area becomes a timed queue of neural-network
tasks: every camera frame yields a detection task, and most frames add a
dependent tracking task.  Frame rates shift with the driving scenario, so
the queue's intensity follows the route's turn/reverse events.
"""

import random
from collections import Counter

from hmaisim.config import load_config
from hmaisim import envgen

cfg = load_config(overrides={"distance_m": "200"})
groups = envgen.cameras_from_config(cfg)
matrix = envgen.matrix_from_config(cfg)
st = envgen.safety_time_table(cfg, "ub", groups)
route = envgen.route_from_config(cfg, "ub", seed=12)

# The scenario schedule tiles the route duration with turn and reverse
# events drawn from the route's limits.
rng = random.Random(12)
segments = envgen.build_scenario_schedule(route, rng)
print(f"route: {route.distance:.0f} m at {route.velocity*3.6:.0f} km/h "
      f"-> {route.duration:.1f} s")
for seg in segments:
    print(f"  {seg.kind:<8} {seg.start:7.2f} .. {seg.end:7.2f} s")

queue = envgen.generate_task_queue(route, groups, matrix, rng, st, schedule=segments)
print(f"\n{len(queue)} tasks; first three:")
for t in queue[:3]:
    print(f"  id={t.id} cam={t.camera_id} {t.task_kind}/{t.model} "
          f"capture={t.capture_time*1000:.1f} ms st={t.safety_time:.3f} s")

# Per-second rates in a pure scenario match the configured camera rates:
# detections split evenly between the two detector models.
print("\nper-second task mix by scenario (urban basic):")
for scen in ("gs", "turn", "reverse"):
    q = envgen.generate_task_queue(route, groups, matrix, random.Random(0), st,
                                   schedule=[envgen.ScenarioSegment(scen, 0.0, 1.0)])
    mix = Counter(t.model for t in q)
    det = sum(1 for t in q if t.task_kind == "det")
    tra = len(q) - det
    print(f"  {scen:<8} det={det:<4} tra={tra:<4} "
          f"(yolo {mix['yolo']}, ssd {mix['ssd']}, goturn {mix['goturn']})")
