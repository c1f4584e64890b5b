"""Greedy successor maps and their attractor/basin decomposition.

For a fixed goal ``g`` the greedy policy sends every valid state to exactly one
successor, so the map is a functional graph: each weakly connected component
holds one directed cycle (an attractor) with in-trees feeding it.
"""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .env import GridSpec, State
from .valuenet import NetParams, forward_batch


@dataclass(frozen=True)
class SuccessorMap:
    """A total map ``states[i] -> states[succ[i]]`` for one goal.

    ``actions`` holds the greedy action index per state when the map was built
    from a value network (``-1`` at the goal); it is ``None`` for hand-built maps.
    """

    states: tuple[State, ...]
    succ: tuple[int, ...]
    goal: State | None
    actions: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.states)
        if len(self.succ) != n:
            raise ValueError("successor table must cover every state")
        if any(not 0 <= j < n for j in self.succ):
            raise ValueError("successor index out of range")
        if self.goal is not None:
            gi = self.states.index(self.goal)
            if self.succ[gi] != gi:
                raise ValueError("the goal must map to itself")

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def goal_index(self) -> int | None:
        return None if self.goal is None else self.states.index(self.goal)

    @property
    def table(self) -> dict[State, State]:
        return {s: self.states[j] for s, j in zip(self.states, self.succ)}

    def __getitem__(self, s: State) -> State:
        return self.states[self.succ[self.states.index(tuple(s))]]

    @classmethod
    def from_table(cls, table: dict, goal=None, order: Sequence | None = None) -> "SuccessorMap":
        states = tuple(State(*s) for s in (order if order is not None else sorted(table, key=lambda c: (c[1], c[0]))))
        idx = {s: i for i, s in enumerate(states)}
        succ = tuple(idx[State(*table[s])] for s in states)
        return cls(states, succ, None if goal is None else State(*goal))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "next_x", "next_y"])
            for s, j in zip(self.states, self.succ):
                t = self.states[j]
                w.writerow([s.x, s.y, t.x, t.y])

    @classmethod
    def read_csv(cls, path: str | Path, goal=None) -> "SuccessorMap":
        table, order = {}, []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                s = State(int(row["x"]), int(row["y"]))
                table[s] = State(int(row["next_x"]), int(row["next_y"]))
                order.append(s)
        return cls.from_table(table, goal=goal, order=order)


class AttractorKind(str, Enum):
    GOAL = "Goal"
    FIXED_POINT = "SpuriousFixedPoint"
    CYCLE = "Cycle"


@dataclass(frozen=True)
class Attractor:
    states: tuple[State, ...]
    kind: AttractorKind
    indices: tuple[int, ...]


@dataclass(frozen=True)
class GraphDecomposition:
    attractors: tuple[Attractor, ...]
    basin: np.ndarray  # attractor index per state index
    transient: np.ndarray  # steps until the state first lies on its attractor
    states: tuple[State, ...]
    goal_attractor: int | None

    def basin_of(self, s: State) -> int:
        return int(self.basin[self.states.index(tuple(s))])

    def basin_sizes(self) -> np.ndarray:
        return np.bincount(self.basin, minlength=len(self.attractors))


# -- building maps from a value network ---------------------------------


def state_values(p: NetParams, grid: GridSpec, g: State) -> np.ndarray:
    """``V(s, g)`` for every valid state ``s`` in index order."""
    X = np.empty((grid.n_states, 4))
    X[:, :2] = grid.coords
    X[:, 2] = g[0]
    X[:, 3] = g[1]
    return forward_batch(p, X)


def greedy_actions(p: NetParams, grid: GridSpec, g: State) -> np.ndarray:
    """Greedy action per state: first maximiser of ``V(T(s, a), g)``."""
    v = state_values(p, grid, g)
    return np.argmax(v[grid.next_index], axis=1)


def greedy_successor(p: NetParams, grid: GridSpec, s: State, g: State) -> State:
    s, g = grid.require_valid(s), grid.require_valid(g)
    if s == g:
        return g
    a = greedy_actions(p, grid, g)[grid.index[s]]
    return grid.states[grid.next_index[grid.index[s], a]]


def build_successor_map(p: NetParams, grid: GridSpec, g: State) -> SuccessorMap:
    g = grid.require_valid(g)
    acts = greedy_actions(p, grid, g)
    succ = grid.next_index[np.arange(grid.n_states), acts].copy()
    gi = grid.index[g]
    succ[gi] = gi
    acts[gi] = -1
    return SuccessorMap(grid.states, tuple(succ.tolist()), g, tuple(acts.tolist()))


# -- decomposition ------------------------------------------------------


def decompose_indices(succ: Sequence[int]) -> tuple[list[list[int]], np.ndarray, np.ndarray]:
    """Cycles, basin labels and transient lengths of an index map.

    Walks forward from each unassigned state until reaching an assigned one or
    revisiting a state of the current walk. Linear in the number of states.
    """
    n = len(succ)
    basin = np.full(n, -1, dtype=np.int64)
    transient = np.full(n, -1, dtype=np.int64)
    on_walk = np.full(n, -1, dtype=np.int64)  # position within the current walk
    cycles: list[list[int]] = []
    for start in range(n):
        if basin[start] >= 0:
            continue
        walk = []
        i = start
        while basin[i] < 0 and on_walk[i] < 0:
            on_walk[i] = len(walk)
            walk.append(i)
            i = succ[i]
        if basin[i] < 0:
            # closed a new cycle inside this walk
            pos = on_walk[i]
            cyc = walk[pos:]
            label = len(cycles)
            cycles.append(cyc)
            for c in cyc:
                basin[c] = label
                transient[c] = 0
            tail = walk[:pos]
        else:
            tail = walk
        label, depth = basin[i], transient[i]
        for k, j in enumerate(reversed(tail), start=1):
            basin[j] = label
            transient[j] = depth + k
        for j in walk:
            on_walk[j] = -1
    return cycles, basin, transient


def decompose(m: SuccessorMap) -> GraphDecomposition:
    cycles, basin, transient = decompose_indices(m.succ)
    gi = m.goal_index
    attractors = []
    goal_attr = None
    for label, cyc in enumerate(cycles):
        # rotate so the cycle starts at its smallest state
        r = min(range(len(cyc)), key=lambda k: m.states[cyc[k]])
        cyc = cyc[r:] + cyc[:r]
        if gi is not None and cyc == [gi]:
            kind = AttractorKind.GOAL
            goal_attr = label
        elif len(cyc) == 1:
            kind = AttractorKind.FIXED_POINT
        else:
            kind = AttractorKind.CYCLE
        attractors.append(Attractor(tuple(m.states[c] for c in cyc), kind, tuple(cyc)))
    basin.setflags(write=False)
    transient.setflags(write=False)
    return GraphDecomposition(tuple(attractors), basin, transient, m.states, goal_attr)


# -- finite-horizon success ---------------------------------------------


def horizon_success_set(m: SuccessorMap, H: int) -> set[State]:
    """Non-goal states whose orbit hits the goal within ``H`` steps.

    Breadth-first search from the goal over reversed edges, capped at depth ``H``.
    """
    if H < 1:
        raise ValueError("horizon must be at least 1")
    gi = m.goal_index
    if gi is None:
        raise ValueError("map has no goal")
    preds: list[list[int]] = [[] for _ in range(m.n)]
    for i, j in enumerate(m.succ):
        if i != j:
            preds[j].append(i)
    depth = {gi: 0}
    queue = deque([gi])
    while queue:
        j = queue.popleft()
        if depth[j] == H:
            continue
        for i in preds[j]:
            if i not in depth:
                depth[i] = depth[j] + 1
                queue.append(i)
    return {m.states[i] for i in depth if i != gi}


def horizon_success_set_forward(m: SuccessorMap, H: int) -> set[State]:
    """Same set as :func:`horizon_success_set`, by direct rollout from every start."""
    gi = m.goal_index
    out = set()
    for start in range(m.n):
        if start == gi:
            continue
        i = start
        for _ in range(H):
            i = m.succ[i]
            if i == gi:
                out.add(m.states[start])
                break
    return out


def goal_hitting_times(m: SuccessorMap) -> np.ndarray:
    """Steps to reach the goal per state index, ``-1`` when never reached."""
    gi = m.goal_index
    out = np.full(m.n, -1, dtype=np.int64)
    if gi is None:
        return out
    preds: list[list[int]] = [[] for _ in range(m.n)]
    for i, j in enumerate(m.succ):
        if i != j:
            preds[j].append(i)
    out[gi] = 0
    queue = deque([gi])
    while queue:
        j = queue.popleft()
        for i in preds[j]:
            if out[i] < 0:
                out[i] = out[j] + 1
                queue.append(i)
    return out
