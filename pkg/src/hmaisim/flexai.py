"""Learning scheduler: a from-scratch DQN over (task info, per-accelerator info).

The value network is a two-hidden-layer perceptron (rectifier activations,
linear output) trained by stochastic gradient descent on squared error
against a periodically synced target network.  Everything is plain numpy in
float64; no autograd.  Training is driven by the simulation engine: each
release is a decision, each completion yields the reward, and consecutive
decisions form the stored transitions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import platform as hw
from .config import Config
from .errors import DomainError
from .sim import SimConfig, run_episode

LOSS_MODES = ("standard_sa", "paper_literal_max")


class QNetwork:
    """Fully connected net: sizes[0] -> ... -> sizes[-1], ReLU on hidden layers."""

    def __init__(self, layer_sizes, rng=None):
        self.layer_sizes = [int(s) for s in layer_sizes]
        if len(self.layer_sizes) < 2:
            raise DomainError("network needs at least input and output layers")
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            if rng is None:
                w = np.zeros((fan_in, fan_out))
                b = np.zeros(fan_out)
            else:
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
                b = rng.uniform(-bound, bound, size=fan_out)
            self.weights.append(np.asarray(w, dtype=np.float64))
            self.biases.append(np.asarray(b, dtype=np.float64))

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        h = np.asarray(x, dtype=np.float64)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = np.maximum(z, 0.0) if i < last else z
        return h

    def forward(self, x: np.ndarray) -> np.ndarray:
        if np.asarray(x).shape[0] != self.layer_sizes[0]:
            raise DomainError("state dimension does not match the network input")
        return self.forward_batch(np.asarray(x, dtype=np.float64)[None, :])[0]

    def copy(self) -> "QNetwork":
        out = QNetwork(self.layer_sizes)
        out.assign_from(self)
        return out

    def assign_from(self, other: "QNetwork") -> None:
        if other.layer_sizes != self.layer_sizes:
            raise DomainError("network shape mismatch")
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]


def loss_and_grads(net: QNetwork, states: np.ndarray, targets: np.ndarray,
                   actions=None, mode: str = "standard_sa"):
    """Mean squared error of the predicted value against `targets`, with
    analytic gradients for every weight and bias.

    standard_sa predicts the taken action's Q-value; paper_literal_max
    predicts the row maximum (gradient flows to the argmax entry).
    """
    if mode not in LOSS_MODES:
        raise DomainError(f"unknown loss mode: {mode}")
    states = np.asarray(states, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    batch = states.shape[0]
    last = len(net.weights) - 1

    acts = [states]
    zs = []
    h = states
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        zs.append(z)
        h = np.maximum(z, 0.0) if i < last else z
        acts.append(h)
    q = h

    rows = np.arange(batch)
    if mode == "standard_sa":
        if actions is None:
            raise DomainError("standard_sa loss needs the taken actions")
        sel = np.asarray(actions, dtype=np.intp)
    else:
        sel = np.argmax(q, axis=1)
    pred = q[rows, sel]
    diff = pred - targets
    loss = float(np.mean(diff * diff))

    delta = np.zeros_like(q)
    delta[rows, sel] = 2.0 * diff / batch
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    for i in range(last, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (zs[i - 1] > 0.0)
    return loss, grads_w, grads_b


def sgd_step(net: QNetwork, grads_w, grads_b, lr: float) -> None:
    for w, gw in zip(net.weights, grads_w):
        w -= lr * gw
    for b, gb in zip(net.biases, grads_b):
        b -= lr * gb


def select_action(q: np.ndarray, epsilon: float, rng) -> int:
    """Epsilon-greedy: argmax (ties to the lowest index) or a uniform index."""
    if len(q) == 0:
        raise DomainError("empty Q-vector")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(len(q)))
    return int(np.argmax(q))


def boltzmann_action(q: np.ndarray, temperature: float, rng) -> int:
    """Optional softmax exploration over Q-values (not used by default)."""
    if temperature <= 0:
        return int(np.argmax(q))
    z = np.asarray(q, dtype=np.float64) / temperature
    z -= z.max()
    p = np.exp(z)
    p /= p.sum()
    return int(rng.choice(len(q), p=p))


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayMemory:
    """Bounded ring buffer; eviction is oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise DomainError("replay capacity must be positive")
        self.capacity = capacity
        self._data = []
        self._pos = 0

    def push(self, tr: Transition) -> None:
        if len(self._data) < self.capacity:
            self._data.append(tr)
        else:
            self._data[self._pos] = tr
        self._pos = (self._pos + 1) % self.capacity

    def sample(self, rng, k: int):
        idx = rng.choice(len(self._data), size=k, replace=False)
        return [self._data[i] for i in idx]

    def __len__(self):
        return len(self._data)


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.9
    learning_rate: float = 0.01
    memory_size: int = 10000
    batch_size: int = 32
    target_sync_interval: int = 300
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_fraction: float = 0.2
    loss_mode: str = "standard_sa"
    hidden1: int = 256
    hidden2: int = 64
    learn_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise DomainError("gamma must lie in [0, 1)")
        if self.loss_mode not in LOSS_MODES:
            raise DomainError(f"unknown loss mode: {self.loss_mode}")

    @classmethod
    def from_config(cls, cfg: Config, seed=None) -> "AgentConfig":
        return cls(
            gamma=cfg.get_float("agent.gamma"),
            learning_rate=cfg.get_float("agent.learning_rate"),
            memory_size=cfg.get_int("agent.memory_size"),
            batch_size=cfg.get_int("agent.batch_size"),
            target_sync_interval=cfg.get_int("agent.target_sync_interval"),
            epsilon_start=cfg.get_float("agent.epsilon_start"),
            epsilon_end=cfg.get_float("agent.epsilon_end"),
            epsilon_fraction=cfg.get_float("agent.epsilon_fraction"),
            loss_mode=cfg.get_str("agent.loss_mode"),
            hidden1=cfg.get_int("agent.hidden1"),
            hidden2=cfg.get_int("agent.hidden2"),
            learn_every=cfg.get_int("agent.learn_every"),
            seed=seed if seed is not None else cfg.get_int("seed"),
        )

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma, "learning_rate": self.learning_rate,
            "memory_size": self.memory_size, "batch_size": self.batch_size,
            "target_sync_interval": self.target_sync_interval,
            "epsilon_start": self.epsilon_start, "epsilon_end": self.epsilon_end,
            "epsilon_fraction": self.epsilon_fraction, "loss_mode": self.loss_mode,
            "hidden1": self.hidden1, "hidden2": self.hidden2,
            "learn_every": self.learn_every, "seed": self.seed,
        }


@dataclass(frozen=True)
class StateScales:
    """Per-field divisors bringing raw state entries to comparable magnitude."""

    amount: float = 1.0
    layer_num: float = 1.0
    safety_time: float = 1.0
    energy: float = 1.0
    busy_time: float = 1.0
    ms: float = 1.0

    def to_dict(self) -> dict:
        return {"amount": self.amount, "layer_num": self.layer_num,
                "safety_time": self.safety_time, "energy": self.energy,
                "busy_time": self.busy_time, "ms": self.ms}

    @classmethod
    def from_dict(cls, d: dict) -> "StateScales":
        return cls(**{k: float(v) for k, v in d.items()})


def build_state(task, states, scales: StateScales) -> np.ndarray:
    """State vector: (amount, layers, safety time) then 4 entries per accelerator."""
    vec = np.empty(3 + 4 * len(states), dtype=np.float64)
    vec[0] = task.amount / scales.amount
    vec[1] = task.layer_num / scales.layer_num
    vec[2] = task.safety_time / scales.safety_time
    for i, s in enumerate(states):
        base = 3 + 4 * i
        vec[base] = s.energy / scales.energy
        vec[base + 1] = s.busy_time / scales.busy_time
        vec[base + 2] = s.r_balance
        vec[base + 3] = s.ms / scales.ms
    return vec


class DqnAgent:
    def __init__(self, state_dim: int, n_actions: int, cfg: AgentConfig,
                 scales: StateScales, area: str = "ub"):
        self.cfg = cfg
        self.n_actions = n_actions
        self.state_dim = state_dim
        self.scales = scales
        self.area = area
        self.rng = np.random.default_rng(cfg.seed)
        sizes = [state_dim, cfg.hidden1, cfg.hidden2, n_actions]
        self.eval_net = QNetwork(sizes, self.rng)
        self.target_net = self.eval_net.copy()
        self.memory = ReplayMemory(cfg.memory_size)
        self.train_steps = 0
        self.sync_count = 0
        self.act_steps = 0
        self.anneal_steps = 1

    def epsilon(self) -> float:
        frac = min(1.0, self.act_steps / max(1, self.anneal_steps))
        return self.cfg.epsilon_start + (self.cfg.epsilon_end - self.cfg.epsilon_start) * frac

    def act(self, state: np.ndarray, epsilon=None) -> int:
        eps = self.epsilon() if epsilon is None else epsilon
        self.act_steps += 1
        return select_action(self.eval_net.forward(state), eps, self.rng)

    def observe(self, tr: Transition) -> None:
        self.memory.push(tr)

    def learn(self):
        """One SGD step on a uniform replay batch; None while memory is short."""
        if len(self.memory) <= self.cfg.batch_size:
            return None
        batch = self.memory.sample(self.rng, self.cfg.batch_size)
        loss = train_step(self, batch)
        return loss

    def sync_target(self) -> None:
        self.target_net.assign_from(self.eval_net)
        self.sync_count += 1


def train_step(agent: DqnAgent, batch) -> float:
    """Squared-error step toward r + gamma * max target(s') (r alone on terminal)."""
    states = np.stack([t.state for t in batch])
    next_states = np.stack([t.next_state for t in batch])
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    terminal = np.array([t.terminal for t in batch], dtype=bool)
    actions = np.array([t.action for t in batch], dtype=np.intp)

    future = agent.target_net.forward_batch(next_states).max(axis=1)
    targets = rewards + agent.cfg.gamma * np.where(terminal, 0.0, future)
    loss, gw, gb = loss_and_grads(agent.eval_net, states, targets,
                                  actions=actions, mode=agent.cfg.loss_mode)
    sgd_step(agent.eval_net, gw, gb, agent.cfg.learning_rate)
    agent.train_steps += 1
    if agent.train_steps % agent.cfg.target_sync_interval == 0:
        agent.sync_target()
    return loss


class TrainingPolicy:
    """Engine-facing wrapper that turns decisions and completions into stored
    transitions and periodic learning steps."""

    name = "flexai"

    def __init__(self, agent: DqnAgent, on_loss=None):
        self.agent = agent
        self._on_loss = on_loss
        self._decisions = []
        self._by_task = {}
        self._emit_idx = 0
        self._emissions = 0

    def choose(self, task, view) -> int:
        s = build_state(task, view.states, self.agent.scales)
        a = self.agent.act(s)
        rec = {"s": s, "a": a, "r": None}
        self._decisions.append(rec)
        self._by_task[task.id] = rec
        self._emit_ready(final=False)
        return a

    def on_complete(self, task, result, reward) -> None:
        self._by_task[task.id]["r"] = reward
        self._emit_ready(final=False)

    def finish_episode(self) -> None:
        self._emit_ready(final=True)
        self._decisions = []
        self._by_task = {}
        self._emit_idx = 0

    def _emit_ready(self, final: bool) -> None:
        ds = self._decisions
        while self._emit_idx < len(ds) and ds[self._emit_idx]["r"] is not None:
            i = self._emit_idx
            has_next = i + 1 < len(ds)
            if not has_next and not final:
                break  # successor state not known yet
            d = ds[i]
            s_next = ds[i + 1]["s"] if has_next else d["s"]
            self.agent.observe(Transition(state=d["s"], action=d["a"], reward=d["r"],
                                          next_state=s_next, terminal=not has_next))
            self._emit_idx += 1
            self._emissions += 1
            if self._emissions % self.agent.cfg.learn_every == 0:
                loss = self.agent.learn()
                if loss is not None and self._on_loss is not None:
                    self._on_loss(loss)


class FlexAiPolicy:
    """Frozen greedy policy over a trained network."""

    name = "flexai"

    def __init__(self, net: QNetwork, scales: StateScales, area: str = "ub"):
        self.net = net
        self.scales = scales
        self.area = area

    def choose(self, task, view) -> int:
        if len(view.states) != self.net.layer_sizes[-1]:
            raise DomainError("weights were trained for a different platform size")
        s = build_state(task, view.states, self.scales)
        return int(np.argmax(self.net.forward(s)))

    @classmethod
    def from_agent(cls, agent: DqnAgent) -> "FlexAiPolicy":
        return cls(agent.eval_net, agent.scales, agent.area)

    @classmethod
    def from_file(cls, path: str, n_actions=None) -> "FlexAiPolicy":
        net, scales, meta = load_weights(path)
        if n_actions is not None and net.layer_sizes[-1] != n_actions:
            raise DomainError(
                f"weights expect {net.layer_sizes[-1]} accelerators, platform has {n_actions}")
        return cls(net, scales, meta.get("area", "ub"))


def save_weights(path: str, net: QNetwork, scales: StateScales, area: str,
                 config_echo: dict, seed: int) -> None:
    payload = {
        "tool": "hmaisim",
        "area": area,
        "layer_sizes": net.layer_sizes,
        "normalization": scales.to_dict(),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "config": config_echo,
        "seed": seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_weights(path: str):
    """Returns (net, scales, meta); malformed or mis-shaped files raise DomainError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as e:
        raise DomainError(f"malformed weights file {path}: {e}") from None
    try:
        sizes = payload["layer_sizes"]
        weights = payload["weights"]
        biases = payload["biases"]
        scales = StateScales.from_dict(payload["normalization"])
    except (KeyError, TypeError) as e:
        raise DomainError(f"weights file {path} missing field: {e}") from None
    net = QNetwork(sizes)
    if len(weights) != len(net.weights) or len(biases) != len(net.biases):
        raise DomainError("weights file layer count does not match layer_sizes")
    for i, (w, b) in enumerate(zip(weights, biases)):
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if w.shape != net.weights[i].shape or b.shape != net.biases[i].shape:
            raise DomainError("weights file shape mismatch")
        net.weights[i] = w
        net.biases[i] = b
    meta = {"area": payload.get("area", "ub"), "config": payload.get("config", {}),
            "seed": payload.get("seed")}
    return net, scales, meta


def derive_state_scales(queue, n_accelerators: int, e_ref: float, t_ref: float) -> StateScales:
    """Field scales from one calibration: worst-case energy/time spread across
    the platform, plus the queue's own extremes."""
    max_st = max((t.safety_time for t in queue), default=1.0)
    max_amount = max((t.amount for t in queue), default=1.0)
    max_layers = max((t.layer_num for t in queue), default=1)
    per_acc_tasks = max(1.0, len(queue) / n_accelerators)
    return StateScales(
        amount=max_amount, layer_num=float(max_layers),
        safety_time=max(max_st, 1e-9),
        energy=max(e_ref / n_accelerators, 1e-12),
        busy_time=max(t_ref, 1e-12),
        ms=per_acc_tasks,
    )


@dataclass
class TrainResult:
    agent: DqnAgent
    loss_rows: list = field(default_factory=list)       # (episode, iteration, loss)
    episode_loss_means: list = field(default_factory=list)
    e_ref: float = 1.0
    t_ref: float = 1.0
    episode_seeds: list = field(default_factory=list)


def train_agent(cfg: Config, episodes: int, area=None, seed=None,
                queue_factory=None, platform_config=None, progress=None) -> TrainResult:
    """Run the full training loop: one generated queue per episode.

    `queue_factory(episode_index) -> (queue, segments, seed)` may replace the
    default route generator (the toy environment uses this).  Determinism:
    everything derives from `seed` and the config.
    """
    from . import envgen
    from .sched import calibrate_normalization

    if seed is None:
        seed = cfg.get_int("seed")
    if area is None:
        area = cfg.get_str("area")
    agent_cfg = AgentConfig.from_config(cfg, seed=seed)
    if platform_config is None:
        platform_config = hw.platform_from_config(cfg)
    r_mode = cfg.get_str("sim.r_balance_mode")
    overhead = cfg.get_float("sim.t_sched_overhead_s.flexai")
    loss_log_every = max(1, cfg.get_int("agent.loss_log_every"))

    if queue_factory is None:
        groups = envgen.cameras_from_config(cfg)
        matrix = envgen.matrix_from_config(cfg)
        st_table = envgen.safety_time_table(cfg, area, groups)

        def queue_factory(ep):
            import random as _random
            ep_seed = seed + ep
            route = envgen.route_from_config(cfg, area_kind=area, seed=ep_seed)
            rng = _random.Random(ep_seed)
            segments = envgen.build_scenario_schedule(route, rng,
                                                      cfg.get_float("min_segment_s"))
            queue = envgen.generate_task_queue(route, groups, matrix, rng,
                                               st_table, schedule=segments)
            return queue, segments, ep_seed

    result = TrainResult(agent=None)
    agent = None
    for ep in range(episodes):
        queue, _segments, ep_seed = queue_factory(ep)
        result.episode_seeds.append(ep_seed)
        if not queue:
            continue
        e_ref, t_ref = calibrate_normalization(queue, platform_config, r_mode)
        sim_cfg = SimConfig(t_sched_overhead=overhead, r_balance_mode=r_mode,
                            e_ref=e_ref, t_ref=t_ref)
        states = hw.build_platform(platform_config)
        if agent is None:
            scales = derive_state_scales(queue, len(states), e_ref, t_ref)
            agent = DqnAgent(state_dim=3 + 4 * len(states), n_actions=len(states),
                             cfg=agent_cfg, scales=scales, area=area)
            agent.anneal_steps = max(1, int(agent_cfg.epsilon_fraction
                                            * episodes * len(queue)))
            result.agent = agent
            result.e_ref, result.t_ref = e_ref, t_ref

        ep_sum = 0.0
        ep_count = 0
        iteration = 0

        def on_loss(loss):
            nonlocal ep_sum, ep_count, iteration
            ep_sum += loss
            ep_count += 1
            if iteration % loss_log_every == 0:
                result.loss_rows.append((ep, iteration, loss))
            iteration += 1

        harness = TrainingPolicy(agent, on_loss=on_loss)
        run_episode(queue, states, harness, sim_cfg, on_complete=harness.on_complete)
        harness.finish_episode()
        result.episode_loss_means.append(ep_sum / ep_count if ep_count else math.nan)
        if progress is not None:
            progress(ep, result.episode_loss_means[-1])
    if agent is None:
        # zero episodes: an untrained agent with neutral scales
        platform_n = sum(n for _, n in platform_config.instances)
        result.agent = DqnAgent(state_dim=3 + 4 * platform_n, n_actions=platform_n,
                                cfg=agent_cfg, scales=StateScales(), area=area)
    return result
