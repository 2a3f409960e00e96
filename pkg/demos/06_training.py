"""
Training the learning scheduler
===============================

The learning dispatcher trains against the simulator itself: every
decision becomes a replayed transition, every completion a reward (the
platform-objective delta plus the task's matching score).  A few episodes
on a short route are enough to watch the loss settle and compare the
frozen greedy policy against a classical baseline.
"""

import random

from hmaisim.config import load_config
from hmaisim import envgen
from hmaisim.flexai import FlexAiPolicy, train_agent
from hmaisim.platform import build_platform, platform_from_config
from hmaisim.sched import MinMinPolicy, calibrate_normalization
from hmaisim.sim import SimConfig, run_episode

cfg = load_config(overrides={
    "distance_m": "20",               # ~1.2 s routes, ~2k tasks per episode
    "agent.learn_every": "4",
    "sim.r_balance_mode": "arithmetic-mean",
})

print("training 30 episodes on 20 m urban routes ...")
result = train_agent(cfg, episodes=30, area="ub", seed=1,
                     progress=lambda ep, loss: print(f"  episode {ep:>2}  mean loss {loss:.4f}")
                     if ep % 5 == 0 else None)

# Held-out route the agent never saw.
groups = envgen.cameras_from_config(cfg)
matrix = envgen.matrix_from_config(cfg)
st = envgen.safety_time_table(cfg, "ub", groups)
route = envgen.route_from_config(cfg, "ub", seed=777)
rng = random.Random(777)
segments = envgen.build_scenario_schedule(route, rng)
queue = envgen.generate_task_queue(route, groups, matrix, rng, st, schedule=segments)

pc = platform_from_config(cfg)
e_ref, t_ref = calibrate_normalization(queue, pc, "arithmetic-mean")
sim_cfg = SimConfig(r_balance_mode="arithmetic-mean", e_ref=e_ref, t_ref=t_ref)

print(f"\nheld-out queue ({len(queue)} tasks):")
print(f"{'policy':>8} {'meet rate':>10} {'balance':>9} {'energy J':>9}")
for name, policy in (("trained", FlexAiPolicy.from_agent(result.agent)),
                     ("minmin", MinMinPolicy())):
    rep = run_episode(queue, build_platform(pc), policy, sim_cfg)
    print(f"{name:>8} {rep.stm_rate:>10.4f} {rep.r_balance:>9.4f} {rep.energy:>9.1f}")

print("\n(dense queues are hard for this learner: its state carries cumulative")
print("per-accelerator counters, not current queue depth, so it cannot see")
print("backlog building -- the README discusses this limitation.)")
