"""Baseline scheduling policies.

All policies answer the same question: which accelerator takes this task.
Immediate policies decide per release; the two metaheuristics decide for
batches of tasks released within a fixed window, optimizing the same reward
the learning scheduler trains on (objective delta per task) over a scratch
copy of the platform state.
"""

from __future__ import annotations

import bisect
import math
import random
import statistics
from dataclasses import dataclass

from . import platform as hw
from .config import Config, ConfigError
from .criteria import NormalizationScales, matching_score_det, matching_score_tra
from .errors import DomainError
from .sim import SimConfig, run_episode

BASELINE_NAMES = ("minmin", "ata", "ga", "sa", "worst", "table7")


class MinMinPolicy:
    """Earliest predicted completion wins; ties go to the lowest index."""

    name = "minmin"

    def choose(self, task, view) -> int:
        best_idx = 0
        best_t = math.inf
        for s in view.states:
            t = max(view.now, s.busy_until) + hw.exec_time(task.model, s.kind)
            if t < best_t:
                best_t = t
                best_idx = s.index
        return best_idx


class AtaPolicy:
    """Cheapest accelerator that still meets the deadline; Min-Min fallback."""

    name = "ata"

    def __init__(self):
        self._fallback = MinMinPolicy()

    def choose(self, task, view) -> int:
        best_idx = None
        best_e = math.inf
        for s in view.states:
            completion = max(view.now, s.busy_until) + hw.exec_time(task.model, s.kind)
            if completion - task.capture_time <= task.safety_time:
                e = hw.exec_energy(task, s.kind)
                if e < best_e:
                    best_e = e
                    best_idx = s.index
        if best_idx is None:
            return self._fallback.choose(task, view)
        return best_idx


class WorstCasePolicy:
    """Static best-fit map: every model always goes to instance 0 of its
    fastest kind, regardless of queue state (congestion by design)."""

    name = "worst"

    def __init__(self, states):
        self._map = {}
        models = set()
        for s in states:
            models.update(s.kind.fps)
        for model in sorted(models):
            best_idx = None
            best_fps = -1.0
            for s in states:
                fps = s.kind.fps.get(model, -1.0)
                if fps > best_fps:
                    best_fps = fps
                    best_idx = s.index
            self._map[model] = best_idx

    def choose(self, task, view) -> int:
        try:
            return self._map[task.model]
        except KeyError:
            raise DomainError(f"model {task.model!r} unknown to this platform") from None


# Static allocation for the default 4+4+3 platform: per scenario and model,
# how many instances of each kind serve that stream.
_TABLE7 = {
    ("gs", "yolo"): (("sconvod", 1), ("sconvic", 2)),
    ("gs", "ssd"): (("sconvod", 3), ("sconvic", 1), ("mconvmc", 2)),
    ("gs", "goturn"): (("sconvic", 1), ("mconvmc", 1)),
    ("turn", "yolo"): (("sconvod", 2), ("mconvmc", 1)),
    ("turn", "ssd"): (("sconvod", 2), ("sconvic", 4)),
    ("turn", "goturn"): (("mconvmc", 2),),
    ("reverse", "yolo"): (("sconvic", 3),),
    ("reverse", "ssd"): (("sconvod", 2), ("mconvmc", 3)),
    ("reverse", "goturn"): (("sconvod", 2), ("sconvic", 1)),
}


class Table7Policy:
    """Round-robin within fixed per-(scenario, model) accelerator subsets."""

    name = "table7"

    def __init__(self, states, segments):
        if segments is None:
            raise DomainError("table7 requires the route's scenario schedule")
        by_kind = {}
        for s in states:
            by_kind.setdefault(s.kind.name, []).append(s.index)
        counts = {k: len(v) for k, v in by_kind.items()}
        if counts != {"sconvod": 4, "sconvic": 4, "mconvmc": 3}:
            raise DomainError("table7 allocation is defined only for the default 4+4+3 platform")
        self._subsets = {}
        scenarios = sorted({scen for scen, _ in _TABLE7})
        for scen in scenarios:
            cursor = {k: 0 for k in by_kind}
            for model in ("yolo", "ssd", "goturn"):
                subset = []
                for kind_name, n in _TABLE7[(scen, model)]:
                    start = cursor[kind_name]
                    subset.extend(by_kind[kind_name][start:start + n])
                    cursor[kind_name] = start + n
                self._subsets[(scen, model)] = subset
        self._rr = {key: 0 for key in self._subsets}
        self._segments = sorted(segments, key=lambda s: s.start)
        self._starts = [s.start for s in self._segments]

    def _scenario_at(self, t: float) -> str:
        i = bisect.bisect_right(self._starts, t) - 1
        if i < 0:
            i = 0
        return self._segments[i].kind

    def choose(self, task, view) -> int:
        scen = self._scenario_at(task.capture_time)
        key = (scen, task.model)
        subset = self._subsets.get(key)
        if not subset:
            raise DomainError(f"no static allocation for model {task.model!r} in scenario {scen!r}")
        idx = subset[self._rr[key] % len(subset)]
        self._rr[key] += 1
        return idx


def window_fitness(window, assignment, view, overhead: float,
                   norm: NormalizationScales, r_mode: str) -> float:
    """Summed reward if the window's tasks were committed now as assigned.

    Replays the engine's dispatch arithmetic on scratch copies of the
    accelerator aggregates, in task order.
    """
    n = len(view.states)
    busy_until = [s.busy_until for s in view.states]
    busy_time = [s.busy_time for s in view.states]
    energy = [s.energy for s in view.states]
    r_bal = [s.r_balance for s in view.states]
    ms_acc = [s.ms for s in view.states]
    num = [s.num_executed for s in view.states]

    e_sum = sum(energy)
    ms_sum = sum(ms_acc)
    r_sum = sum(r_bal)
    t_max = max(busy_time)
    now = view.now
    total = 0.0
    for rt, idx in zip(window, assignment):
        task = rt.task
        busy_cnt = sum(1 for b in busy_until if b > now)
        if busy_until[idx] <= now:
            busy_cnt += 1
        r_j = busy_cnt / n
        start = max(rt.release + overhead, now, busy_until[idx])
        te = hw.exec_time(task.model, view.states[idx].kind)
        completion = start + te
        busy_until[idx] = completion
        response = completion - task.capture_time
        if task.task_kind == "det":
            ms_j = matching_score_det(max(response, 0.0), task.safety_time)
        else:
            ms_j = matching_score_tra(max(response, 0.0), task.safety_time)
        e_j = hw.exec_energy(task, view.states[idx].kind)

        g_before = (-e_sum / norm.e_ref - t_max / norm.t_ref + r_sum / n) / 3.0
        num[idx] += 1
        energy[idx] += e_j
        busy_time[idx] += te
        ms_acc[idx] += ms_j
        old_r = r_bal[idx]
        if r_mode == "paper-literal":
            r_bal[idx] = (r_j + old_r) / num[idx]
        else:
            r_bal[idx] = old_r + (r_j - old_r) / num[idx]
        e_sum += e_j
        ms_sum += ms_j
        r_sum += r_bal[idx] - old_r
        if busy_time[idx] > t_max:
            t_max = busy_time[idx]
        g_after = (-e_sum / norm.e_ref - t_max / norm.t_ref + r_sum / n) / 3.0
        total += g_after - g_before + ms_j
    return total


@dataclass(frozen=True)
class GaParams:
    population: int = 50
    generations: int = 100
    mutation_rate: float = 0.05
    elitism: int = 2
    window_s: float = 0.05


class GaWindowPolicy:
    name = "ga"

    def __init__(self, params: GaParams, seed, overhead: float,
                 norm: NormalizationScales, r_mode: str):
        self.params = params
        self.window_s = params.window_s
        self.rng = random.Random(f"ga:{seed}")
        self._overhead = overhead
        self._norm = norm
        self._r_mode = r_mode

    def assign_window(self, window, view):
        k = len(window)
        n = len(view.states)
        rng = self.rng
        p = self.params
        cache = {}

        def fit(vec):
            if vec not in cache:
                cache[vec] = window_fitness(window, vec, view, self._overhead,
                                            self._norm, self._r_mode)
            return cache[vec]

        pop = [tuple(rng.randrange(n) for _ in range(k)) for _ in range(p.population)]
        best = max(pop, key=fit)
        for _ in range(p.generations):
            ranked = sorted(pop, key=fit, reverse=True)
            if fit(ranked[0]) > fit(best):
                best = ranked[0]
            nxt = list(ranked[:p.elitism])
            while len(nxt) < p.population:
                a, b = rng.randrange(len(pop)), rng.randrange(len(pop))
                p1 = pop[a] if fit(pop[a]) >= fit(pop[b]) else pop[b]
                a, b = rng.randrange(len(pop)), rng.randrange(len(pop))
                p2 = pop[a] if fit(pop[a]) >= fit(pop[b]) else pop[b]
                if k >= 2:
                    pt = rng.randrange(1, k)
                    child = p1[:pt] + p2[pt:]
                else:
                    child = p1
                child = tuple(g if rng.random() >= p.mutation_rate else rng.randrange(n)
                              for g in child)
                nxt.append(child)
            pop = nxt
        final = max(pop, key=fit)
        if fit(final) > fit(best):
            best = final
        return list(best)


@dataclass(frozen=True)
class SaParams:
    iterations: int = 2000
    alpha: float = 0.95
    initial_samples: int = 16
    window_s: float = 0.05


class SaWindowPolicy:
    name = "sa"

    def __init__(self, params: SaParams, seed, overhead: float,
                 norm: NormalizationScales, r_mode: str):
        self.params = params
        self.window_s = params.window_s
        self.rng = random.Random(f"sa:{seed}")
        self._overhead = overhead
        self._norm = norm
        self._r_mode = r_mode

    def assign_window(self, window, view):
        k = len(window)
        n = len(view.states)
        rng = self.rng
        p = self.params

        def cost(vec):
            return -window_fitness(window, vec, view, self._overhead,
                                   self._norm, self._r_mode)

        samples = [cost(tuple(rng.randrange(n) for _ in range(k)))
                   for _ in range(max(2, p.initial_samples))]
        t0 = statistics.pstdev(samples)
        if not (t0 > 0):
            t0 = 1.0
        current = tuple(rng.randrange(n) for _ in range(k))
        c_cur = cost(current)
        best, c_best = current, c_cur
        temp = t0
        for _ in range(p.iterations):
            i = rng.randrange(k)
            neighbor = current[:i] + (rng.randrange(n),) + current[i + 1:]
            c_nb = cost(neighbor)
            delta = c_nb - c_cur
            if delta <= 0 or (temp > 0 and rng.random() < math.exp(-delta / temp)):
                current, c_cur = neighbor, c_nb
                if c_cur < c_best:
                    best, c_best = current, c_cur
            temp *= p.alpha
        return list(best)


def ga_params_from_config(cfg: Config) -> GaParams:
    return GaParams(population=cfg.get_int("sched.ga.population"),
                    generations=cfg.get_int("sched.ga.generations"),
                    mutation_rate=cfg.get_float("sched.ga.mutation_rate"),
                    elitism=cfg.get_int("sched.ga.elitism"),
                    window_s=cfg.get_float("sched.ga.window_ms") / 1000.0)


def sa_params_from_config(cfg: Config) -> SaParams:
    return SaParams(iterations=cfg.get_int("sched.sa.iterations"),
                    alpha=cfg.get_float("sched.sa.alpha"),
                    initial_samples=cfg.get_int("sched.sa.initial_samples"),
                    window_s=cfg.get_float("sched.sa.window_ms") / 1000.0)


def calibrate_normalization(queue, platform_config, r_mode: str = "paper-literal"):
    """Energy/time scales from a worst-case run of the same queue."""
    states = hw.build_platform(platform_config)
    report = run_episode(queue, states, WorstCasePolicy(states),
                         SimConfig(r_balance_mode=r_mode))
    e_ref = report.energy if report.energy > 0 else 1.0
    t_ref = report.busy_max if report.busy_max > 0 else 1.0
    return e_ref, t_ref


def build_policy(name: str, cfg: Config, states, sim_cfg: SimConfig,
                 segments=None, weights_path=None, seed: int = 0):
    """Instantiate a policy by CLI name against an already built platform."""
    norm = NormalizationScales(sim_cfg.e_ref, sim_cfg.t_ref)
    if name == "minmin":
        return MinMinPolicy()
    if name == "ata":
        return AtaPolicy()
    if name == "worst":
        return WorstCasePolicy(states)
    if name == "table7":
        return Table7Policy(states, segments)
    if name == "ga":
        return GaWindowPolicy(ga_params_from_config(cfg), seed,
                              sim_cfg.t_sched_overhead, norm, sim_cfg.r_balance_mode)
    if name == "sa":
        return SaWindowPolicy(sa_params_from_config(cfg), seed,
                              sim_cfg.t_sched_overhead, norm, sim_cfg.r_balance_mode)
    if name == "flexai":
        if weights_path is None:
            raise ConfigError("flexai needs a weights file (--weights)")
        from .flexai import FlexAiPolicy
        return FlexAiPolicy.from_file(weights_path, n_actions=len(states))
    raise DomainError(f"unknown scheduler {name!r}")
