"""Per-goal structural metrics of a decomposed successor map.

Counts are kept as integers and divided once, so partition identities such as
``goal_basin + fail_basin == 1`` hold exactly.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, NamedTuple

from .env import GridSpec, State, neighbors
from .policy_graph import AttractorKind, GraphDecomposition, SuccessorMap, horizon_success_set


class UndefinedSupportError(ValueError):
    """The goal has no valid neighbours, so local support is undefined."""


class BasinMetrics(NamedTuple):
    goal_basin: float
    fail_basin: float
    comp_basin: float
    dominance: float
    fail_concentration: float | None  # undefined when there is no failure mass
    cycle_basin: float
    fp_basin: float
    n_attractors: int
    fragmentation: float


class HittingTimes(NamedTuple):
    mean_t_attractor: float
    mean_t_goal: float
    goal_only: bool  # goal basin is {g}; mean_t_goal reported as 0


def local_goal_support(m: SuccessorMap, grid: GridSpec, g: State) -> tuple[int, float]:
    nbrs = neighbors(grid, g)
    if not nbrs:
        raise UndefinedSupportError(f"goal {tuple(g)} has no valid neighbours")
    table = m.table
    count = sum(1 for s in nbrs if table[s] == tuple(g))
    return count, count / len(nbrs)


def success_rate(m: SuccessorMap, H: int) -> float:
    if m.n < 2:
        raise ValueError("need at least two states")
    return len(horizon_success_set(m, H)) / (m.n - 1)


def basin_metrics(d: GraphDecomposition, n_states: int | None = None) -> BasinMetrics:
    n = len(d.states) if n_states is None else n_states
    sizes = d.basin_sizes()
    gi = d.goal_attractor
    goal_size = int(sizes[gi]) if gi is not None else 0
    other = [int(sz) for k, sz in enumerate(sizes) if k != gi]
    comp = max(other, default=0)
    cyc = sum(int(sizes[k]) for k, a in enumerate(d.attractors) if a.kind is AttractorKind.CYCLE)
    fp = sum(int(sizes[k]) for k, a in enumerate(d.attractors) if a.kind is AttractorKind.FIXED_POINT)
    fail = n - goal_size
    sq = int(sum(int(sz) * int(sz) for sz in sizes))
    return BasinMetrics(
        goal_basin=goal_size / n,
        fail_basin=fail / n,
        comp_basin=comp / n,
        dominance=(goal_size - comp) / n,
        fail_concentration=None if fail == 0 else comp / fail,
        cycle_basin=cyc / n,
        fp_basin=fp / n,
        n_attractors=len(d.attractors),
        fragmentation=(n * n - sq) / (n * n),
    )


def hitting_times(d: GraphDecomposition) -> HittingTimes:
    t_attr = float(d.transient.sum()) / len(d.states)
    gi = d.goal_attractor
    if gi is None:
        return HittingTimes(t_attr, 0.0, True)
    in_goal = d.basin == gi
    count = int(in_goal.sum())
    return HittingTimes(t_attr, float(d.transient[in_goal].sum()) / count, count == 1)


@dataclass
class GoalRecord:
    condition: str
    seed: int
    goal_x: int
    goal_y: int
    succ_H: float
    lgs_count: int
    lgs_frac: float
    n_neighbors: int
    goal_basin: float
    fail_basin: float
    comp_basin: float
    dominance: float
    fail_concentration: float | None
    cycle_basin: float
    fp_basin: float
    n_attractors: int
    fragmentation: float
    mean_t_attractor: float
    mean_t_goal: float
    regime: str
    success_category: str

    @property
    def goal(self) -> State:
        return State(self.goal_x, self.goal_y)

    @property
    def is_failure(self) -> bool:
        return self.succ_H < FAIL_CUTOFF


FAIL_CUTOFF = 0.25

PER_GOAL_COLUMNS = [f.name for f in fields(GoalRecord)]
_INT_COLUMNS = {"seed", "goal_x", "goal_y", "lgs_count", "n_neighbors", "n_attractors"}
_STR_COLUMNS = {"condition", "regime", "success_category"}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(path: str | Path, records: Iterable[GoalRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PER_GOAL_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in PER_GOAL_COLUMNS])


def read_records(path: str | Path) -> list[GoalRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for c in PER_GOAL_COLUMNS:
                v = row[c]
                if c in _STR_COLUMNS:
                    kw[c] = v
                elif c in _INT_COLUMNS:
                    kw[c] = int(v)
                else:
                    kw[c] = None if v == "" else float(v)
            out.append(GoalRecord(**kw))
    return out

