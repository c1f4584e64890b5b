"""Episode collection, TD / Monte Carlo targets, replay and curricula."""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .env import ACTIONS, Action, GridSpec, State, move
from .valuenet import AdamState, NetParams, NumericFault, forward_batch, init_params, train_step

log = logging.getLogger(__name__)

EDGE_GOAL_PROB = 0.7

# Fixed ids keep each consumer's random stream independent of the others.
_STREAMS = {"init": 0, "env": 1, "explore": 2, "replay": 3}


class UpdateRule(str, Enum):
    TD = "TD"
    MC = "MC"


class Curriculum(str, Enum):
    UNIFORM = "Uniform"
    EDGE_BIASED = "EdgeBiased"


class ConfigError(ValueError):
    pass


class TrainingFault(RuntimeError):
    def __init__(self, episode: int, cause: Exception):
        super().__init__(f"numeric fault in episode {episode}: {cause}")
        self.episode = episode


@dataclass
class TrainConfig:
    grid: GridSpec
    update_rule: UpdateRule = UpdateRule.TD
    curriculum: Curriculum = Curriculum.UNIFORM
    episodes: int = 500
    gamma: float = 0.99
    eps_init: float = 1.0
    eps_min: float = 0.05
    eps_decay: float = 0.99
    batch_size: int = 128
    # "per_step": one minibatch update per environment step of the episode;
    # "single": one minibatch update per episode.
    updates_per_episode_phase: str = "per_step"
    replay_capacity: int = 10_000
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        self.update_rule = UpdateRule(self.update_rule)
        self.curriculum = Curriculum(self.curriculum)
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1]")
        if not 0.0 <= self.eps_min <= self.eps_init <= 1.0:
            raise ConfigError("need 0 <= eps_min <= eps_init <= 1")
        if self.episodes < 0:
            raise ConfigError("episodes must be non-negative")
        if self.updates_per_episode_phase not in ("per_step", "single"):
            raise ConfigError("updates_per_episode_phase must be 'per_step' or 'single'")
        if self.batch_size <= 0 or self.replay_capacity <= 0:
            raise ConfigError("batch_size and replay_capacity must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = self.grid.to_dict()
        d["update_rule"] = self.update_rule.value
        d["curriculum"] = self.curriculum.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["grid"] = GridSpec.from_dict(d["grid"])
        return cls(**d)


class Transition(NamedTuple):
    s: State
    a: Action
    r: int
    s_next: State
    g: State
    done: bool


@dataclass
class TrainLog:
    success: list[bool] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    epsilon: list[float] = field(default_factory=list)

    @property
    def train_success(self) -> float:
        return float(np.mean(self.success)) if self.success else float("nan")

    @property
    def last100_success(self) -> float:
        return float(np.mean(self.success[-100:])) if self.success else float("nan")

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "success", "loss", "epsilon"])
            for k, (s, l, e) in enumerate(zip(self.success, self.loss, self.epsilon)):
                w.writerow([k, int(s), repr(float(l)), repr(float(e))])

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrainLog":
        out = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                out.success.append(bool(int(row["success"])))
                out.loss.append(float(row["loss"]))
                out.epsilon.append(float(row["epsilon"]))
        return out


class ReplayBuffer:
    """Bounded FIFO of transitions, stored column-wise.

    Each slot also carries a precomputed regression target, used by Monte
    Carlo training; TD training ignores it and bootstraps at sampling time.
    """

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, 2))
        self.s_next = np.zeros((capacity, 2))
        self.g = np.zeros((capacity, 2))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.done = np.zeros(capacity, dtype=bool)
        self.mc_target = np.zeros(capacity)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition, mc_target: float = 0.0) -> None:
        assert t.r == int(t.s_next == t.g), "reward must be 1 exactly on goal entry"
        assert t.r == 0 or t.done, "goal entry must end the episode"
        i = self._next
        self.s[i] = t.s
        self.s_next[i] = t.s_next
        self.g[i] = t.g
        self.a[i] = t.a
        self.r[i] = t.r
        self.done[i] = t.done
        self.mc_target[i] = mc_target
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _order(self) -> np.ndarray:
        """Slot indices from oldest to newest."""
        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def transitions(self) -> list[Transition]:
        out = []
        for i in self._order():
            s = State(*map(int, self.s[i]))
            nxt = State(*map(int, self.s_next[i]))
            out.append(Transition(s, Action(int(self.a[i])), int(self.r[i]), nxt, State(*map(int, self.g[i])), bool(self.done[i])))
        return out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Slot indices drawn uniformly with replacement."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, self._size, size=n)


def epsilon_at(config: TrainConfig, k: int) -> float:
    return max(config.eps_min, config.eps_init * config.eps_decay**k)


def sample_start_goal(curriculum: Curriculum, grid: GridSpec, rng: np.random.Generator) -> tuple[State, State]:
    states = grid.states
    if len(states) < 2:
        raise ConfigError("need at least two valid states")
    curriculum = Curriculum(curriculum)
    if curriculum is Curriculum.UNIFORM:
        g = states[rng.integers(len(states))]
    else:
        edge, interior = grid.edge_states, grid.interior_states
        if not edge or not interior:
            raise ConfigError("edge-biased curriculum needs both edge and interior states")
        pool = edge if rng.random() < EDGE_GOAL_PROB else interior
        g = pool[rng.integers(len(pool))]
    k = rng.integers(len(states) - 1)
    gi = grid.index[g]
    s0 = states[k if k < gi else k + 1]
    return s0, g


def successor_values(p: NetParams, grid: GridSpec, s: State, g: State) -> np.ndarray:
    """``V(T(s, a), g)`` for each action in canonical order."""
    nxt = grid.next_index[grid.index[s]]
    uniq, inv = np.unique(nxt, return_inverse=True)
    X = np.empty((len(uniq), 4))
    X[:, :2] = grid.coords[uniq]
    X[:, 2] = g[0]
    X[:, 3] = g[1]
    # identical successors share one evaluation so ties are exact
    return forward_batch(p, X)[inv]


def greedy_action(p: NetParams, grid: GridSpec, s: State, g: State) -> Action:
    return ACTIONS[int(np.argmax(successor_values(p, grid, s, g)))]


def epsilon_greedy_action(
    p: NetParams, grid: GridSpec, s: State, g: State, epsilon: float, rng: np.random.Generator
) -> Action:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return ACTIONS[rng.integers(len(ACTIONS))]
    return greedy_action(p, grid, s, g)


def run_episode(
    config: TrainConfig,
    p: NetParams,
    g: State,
    s0: State,
    epsilon: float,
    rng: np.random.Generator,
) -> tuple[list[Transition], bool]:
    grid = config.grid
    if tuple(s0) == tuple(g):
        raise ValueError("start must differ from goal")
    s, g = State(*s0), State(*g)
    traj: list[Transition] = []
    for t in range(grid.horizon):
        a = epsilon_greedy_action(p, grid, s, g, epsilon, rng)
        nxt = move(grid, s, a)
        r = int(nxt == g)
        done = bool(r) or t == grid.horizon - 1
        traj.append(Transition(s, a, r, nxt, g, done))
        if r:
            return traj, True
        s = nxt
    return traj, False


def td_targets(p: NetParams, r: np.ndarray, s_next: np.ndarray, g: np.ndarray,
               done: np.ndarray, gamma: float) -> np.ndarray:
    """``r + gamma * V(s', g)``, and ``r`` alone on done transitions."""
    X = np.concatenate([s_next, g], axis=1)
    boot = forward_batch(p, X)
    return np.where(done, r, r + gamma * boot)


def mc_returns(trajectory: list[Transition], gamma: float) -> list[float]:
    """Discounted return ``G_t`` from every step of one trajectory."""
    out = [0.0] * len(trajectory)
    running = 0.0
    for t in range(len(trajectory) - 1, -1, -1):
        running = trajectory[t].r + gamma * running
        out[t] = running
    return out


def make_targets(rule: UpdateRule, transitions: list[Transition], p: NetParams, gamma: float) -> list[float]:
    """Regression targets for a TD batch or a single MC trajectory."""
    if UpdateRule(rule) is UpdateRule.MC:
        return mc_returns(transitions, gamma)
    if not transitions:
        return []
    r = np.array([t.r for t in transitions], dtype=np.float64)
    s_next = np.array([t.s_next for t in transitions], dtype=np.float64)
    g = np.array([t.g for t in transitions], dtype=np.float64)
    done = np.array([t.done for t in transitions], dtype=bool)
    return td_targets(p, r, s_next, g, done, gamma).tolist()


def seed_rngs(seed: int) -> dict[str, np.random.Generator]:
    return {name: np.random.default_rng([seed, sid]) for name, sid in _STREAMS.items()}


def train_seed(config: TrainConfig) -> tuple[NetParams, TrainLog]:
    rngs = seed_rngs(config.seed)
    p, adam = init_params(rngs["init"], lr=config.learning_rate)
    grid = config.grid
    buf = ReplayBuffer(config.replay_capacity)
    log_ = TrainLog()
    mc = config.update_rule is UpdateRule.MC

    for k in range(config.episodes):
        eps = epsilon_at(config, k)
        s0, g = sample_start_goal(config.curriculum, grid, rngs["env"])
        traj, success = run_episode(config, p, g, s0, eps, rngs["explore"])
        targets = mc_returns(traj, config.gamma) if mc else [0.0] * len(traj)
        for t, y in zip(traj, targets):
            buf.push(t, y)

        n_updates = len(traj) if config.updates_per_episode_phase == "per_step" else 1
        losses = []
        try:
            for _ in range(n_updates):
                idx = buf.sample(rngs["replay"], config.batch_size)
                X = np.concatenate([buf.s[idx], buf.g[idx]], axis=1)
                if mc:
                    y = buf.mc_target[idx]
                else:
                    y = td_targets(p, buf.r[idx], buf.s_next[idx], buf.g[idx], buf.done[idx], config.gamma)
                p, adam, loss = train_step(p, adam, X, y)
                losses.append(loss)
        except NumericFault as exc:
            raise TrainingFault(k, exc) from exc

        log_.success.append(success)
        log_.loss.append(float(np.mean(losses)))
        log_.epsilon.append(eps)
    log.debug("seed %d: train success %.3f", config.seed, log_.train_success)
    return p, log_
