"""Exhaustive greedy evaluation of a trained value network."""
from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .diagnostics import classify_taxonomy, success_category
from .env import GridSpec, manhattan, neighbors, path_distances
from .metrics import GoalRecord, basin_metrics, hitting_times, local_goal_support
from .policy_graph import SuccessorMap, build_successor_map, decompose, horizon_success_set
from .valuenet import NetParams


def goal_record(m: SuccessorMap, grid: GridSpec, H: int, condition: str = "", seed: int = 0) -> GoalRecord:
    """All per-goal metrics of one successor map."""
    g = m.goal
    d = decompose(m)
    count, frac = local_goal_support(m, grid, g)
    succ = len(horizon_success_set(m, H)) / (m.n - 1)
    bm = basin_metrics(d)
    ht = hitting_times(d)
    return GoalRecord(
        condition=condition,
        seed=seed,
        goal_x=g.x,
        goal_y=g.y,
        succ_H=succ,
        lgs_count=count,
        lgs_frac=frac,
        n_neighbors=len(neighbors(grid, g)),
        goal_basin=bm.goal_basin,
        fail_basin=bm.fail_basin,
        comp_basin=bm.comp_basin,
        dominance=bm.dominance,
        fail_concentration=bm.fail_concentration,
        cycle_basin=bm.cycle_basin,
        fp_basin=bm.fp_basin,
        n_attractors=bm.n_attractors,
        fragmentation=bm.fragmentation,
        mean_t_attractor=ht.mean_t_attractor,
        mean_t_goal=ht.mean_t_goal,
        regime=classify_taxonomy(bm.goal_basin, bm.comp_basin, bm.fragmentation).value,
        success_category=success_category(succ).value,
    )


def successor_maps(p: NetParams, grid: GridSpec) -> list[SuccessorMap]:
    return [build_successor_map(p, grid, g) for g in grid.states]


def evaluate_seed(
    p: NetParams, grid: GridSpec, H: int | None = None, condition: str = "", seed: int = 0,
    maps: Sequence[SuccessorMap] | None = None,
) -> list[GoalRecord]:
    """One record per valid goal, in state order."""
    H = grid.horizon if H is None else H
    maps = successor_maps(p, grid) if maps is None else maps
    return [goal_record(m, grid, H, condition, seed) for m in maps]


def edge_interior_split(records: Iterable[GoalRecord], grid: GridSpec) -> tuple[float | None, float | None]:
    edge, interior = [], []
    for r in records:
        (edge if grid.is_edge(r.goal) else interior).append(r.succ_H)
    return (float(np.mean(edge)) if edge else None, float(np.mean(interior)) if interior else None)


# -- distance-binned success --------------------------------------------


class DistanceBins(NamedTuple):
    names: tuple[str, ...]
    upper: tuple[float, ...]  # inclusive upper bound of each bin
    metric: str  # "manhattan" or "path"

    def bin_of(self, d: int) -> int:
        for k, hi in enumerate(self.upper):
            if d <= hi:
                return k
        raise ValueError(f"distance {d} exceeds the last bin")


def default_distance_bins(grid: GridSpec) -> DistanceBins:
    """Short/medium/long buckets; cutoffs 4 and 8 on an 8-wide grid, scaled with size."""
    scale = max(grid.width, grid.height) / 8.0
    short, medium = round(4 * scale), round(8 * scale)
    metric = "path" if grid.walls else "manhattan"
    return DistanceBins(("short", "medium", "long"), (short, medium, float("inf")), metric)


def pair_distances(grid: GridSpec, metric: str) -> np.ndarray:
    """``(n, n)`` distance matrix indexed ``[start, goal]``."""
    n = grid.n_states
    if metric == "path":
        return np.stack([path_distances(grid, s) for s in grid.states], axis=0)
    out = np.empty((n, n), dtype=np.int64)
    for i, s in enumerate(grid.states):
        for j, g in enumerate(grid.states):
            out[i, j] = manhattan(s, g)
    return out


def seed_distance_success(maps: Sequence[SuccessorMap], grid: GridSpec, H: int, bins: DistanceBins) -> list[float | None]:
    """Mean pair success per bin for one seed's maps (``None`` for empty bins)."""
    dist = pair_distances(grid, bins.metric)
    hits = np.zeros(len(bins.names))
    counts = np.zeros(len(bins.names))
    for m in maps:
        gj = grid.index[m.goal]
        ok = horizon_success_set(m, H)
        for i, s in enumerate(grid.states):
            if i == gj:
                continue
            k = bins.bin_of(int(dist[i, gj]))
            counts[k] += 1
            hits[k] += s in ok
    return [float(h / c) if c else None for h, c in zip(hits, counts)]


def distance_binned_success(
    maps_per_seed: Sequence[Sequence[SuccessorMap]], grid: GridSpec, H: int, bins: DistanceBins | None = None
) -> list[tuple[str, float | None, float | None]]:
    """``(bin, mean, std)`` across seeds of the per-seed bin success."""
    bins = default_distance_bins(grid) if bins is None else bins
    per_seed = [seed_distance_success(maps, grid, H, bins) for maps in maps_per_seed]
    return summarize_distance(per_seed, bins)


def summarize_distance(per_seed: Sequence[Sequence[float | None]], bins: DistanceBins):
    out = []
    for k, name in enumerate(bins.names):
        vals = [row[k] for row in per_seed if row[k] is not None]
        if vals:
            out.append((name, float(np.mean(vals)), float(np.std(vals))))
        else:
            out.append((name, None, None))
    return out
