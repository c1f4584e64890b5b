"""Deterministic four-neighbor GridWorld with sparse goal rewards.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row. ``UP``
decreases ``y``, ``DOWN`` increases it, ``LEFT`` decreases ``x`` and ``RIGHT``
increases it. Moves that would leave the grid or enter a wall leave the agent
where it is.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np


class InvalidStateError(ValueError):
    """Raised when a coordinate is outside the valid state set of a grid."""


class State(NamedTuple):
    x: int
    y: int


class Action(IntEnum):
    # Declaration order is the global tie-break order.
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]


_DELTAS = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}

ACTIONS: tuple[Action, ...] = tuple(Action)


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    horizon: int
    walls: frozenset[State] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        walls = frozenset(State(int(x), int(y)) for x, y in self.walls)
        for w in walls:
            if not (0 <= w.x < self.width and 0 <= w.y < self.height):
                raise ValueError(f"wall {tuple(w)} lies outside the grid")
        object.__setattr__(self, "walls", walls)
        if len(walls) >= self.width * self.height:
            raise ValueError("grid has no valid states")

    # -- state indexing -------------------------------------------------

    @cached_property
    def states(self) -> tuple[State, ...]:
        """Valid states in row-major order."""
        return tuple(
            State(x, y)
            for y in range(self.height)
            for x in range(self.width)
            if State(x, y) not in self.walls
        )

    @cached_property
    def index(self) -> dict[State, int]:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def n_states(self) -> int:
        return len(self.states)

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_valid(self, s: Iterable[int]) -> bool:
        x, y = s
        return self.in_bounds(x, y) and State(x, y) not in self.walls

    def require_valid(self, s) -> State:
        if not self.is_valid(s):
            raise InvalidStateError(f"{tuple(s)} is not a valid state of this grid")
        return State(*s)

    # -- precomputed transition structure --------------------------------

    @cached_property
    def next_index(self) -> np.ndarray:
        """``(n_states, 4)`` successor indices, one column per action."""
        table = np.empty((self.n_states, len(ACTIONS)), dtype=np.int64)
        for i, s in enumerate(self.states):
            for a in ACTIONS:
                table[i, a] = self.index[move(self, s, a)]
        table.setflags(write=False)
        return table

    @cached_property
    def clamped(self) -> np.ndarray:
        """``clamped[i, a]`` is true when action ``a`` from state ``i`` is blocked."""
        out = self.next_index == np.arange(self.n_states)[:, None]
        out.setflags(write=False)
        return out

    @cached_property
    def coords(self) -> np.ndarray:
        """``(n_states, 2)`` float array of ``(x, y)`` per state index."""
        arr = np.array(self.states, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def diameter(self) -> int:
        """Largest shortest-path distance between two valid states."""
        return int(max(path_distances(self, s).max() for s in self.states))

    def is_edge(self, s: State) -> bool:
        return s.x == 0 or s.y == 0 or s.x == self.width - 1 or s.y == self.height - 1

    @cached_property
    def edge_states(self) -> tuple[State, ...]:
        return tuple(s for s in self.states if self.is_edge(s))

    @cached_property
    def interior_states(self) -> tuple[State, ...]:
        return tuple(s for s in self.states if not self.is_edge(s))

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "horizon": self.horizon,
            "walls": sorted([list(w) for w in self.walls]),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            horizon=int(d["horizon"]),
            walls=frozenset(State(int(x), int(y)) for x, y in d.get("walls", [])),
        )


def open_grid(size: int, horizon: int) -> GridSpec:
    return GridSpec(size, size, horizon)


def bottleneck_grid(size: int = 8, horizon: int = 24, wall_col: int = 4, gap_row: int = 4) -> GridSpec:
    """Vertical wall at ``wall_col`` with a single-cell gap at ``gap_row``.

    This layout is a stand-in; it is not claimed to match any published figure.
    """
    walls = frozenset(State(wall_col, y) for y in range(size) if y != gap_row)
    return GridSpec(size, size, horizon, walls)


def move(grid: GridSpec, s: State, a: Action) -> State:
    dx, dy = _DELTAS[Action(a)]
    nx, ny = s[0] + dx, s[1] + dy
    if grid.is_valid((nx, ny)):
        return State(nx, ny)
    return State(s[0], s[1])


def step(grid: GridSpec, s: State, a: Action, goal: State | None = None) -> tuple[State, int]:
    """Apply action ``a`` in state ``s``; reward is 1 iff the result equals ``goal``."""
    s = grid.require_valid(s)
    nxt = move(grid, s, a)
    reward = int(goal is not None and nxt == tuple(goal))
    return nxt, reward


def valid_states(grid: GridSpec) -> list[State]:
    return list(grid.states)


def neighbors(grid: GridSpec, g: State) -> set[State]:
    """Valid cells at Manhattan distance 1 from ``g``."""
    g = grid.require_valid(g)
    out = set()
    for dx, dy in _DELTAS.values():
        c = (g.x + dx, g.y + dy)
        if grid.is_valid(c):
            out.add(State(*c))
    return out


def manhattan(s, g) -> int:
    return abs(s[0] - g[0]) + abs(s[1] - g[1])


def path_distances(grid: GridSpec, source: State) -> np.ndarray:
    """Wall-aware shortest-path distance from ``source`` to every state index."""
    dist = np.full(grid.n_states, -1, dtype=np.int64)
    start = grid.index[State(*source)]
    dist[start] = 0
    queue = deque([start])
    nxt = grid.next_index
    while queue:
        i = queue.popleft()
        for j in nxt[i]:
            if dist[j] < 0:
                dist[j] = dist[i] + 1
                queue.append(j)
    return dist
