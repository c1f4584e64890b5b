"""Built-in property checks, exposed through ``policygraph verify``.

Each check returns a :class:`CheckResult`; none of them needs a trained model.
"""
from __future__ import annotations

import time
from typing import Callable, NamedTuple

import numpy as np

from .env import GridSpec, State
from .metrics import local_goal_support
from .policy_graph import SuccessorMap, decompose, decompose_indices, horizon_success_set
from .valuenet import NetParams, init_params, loss_and_grad


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str
    seconds: float


def naive_decompose(succ) -> tuple[list[frozenset[int]], list[int], list[int]]:
    """Quadratic oracle: iterate each orbit ``n`` steps to land on its cycle.

    Returns the cycles as sets, a cycle id per state and the transient length
    (first step at which the orbit lies on its cycle).
    """
    n = len(succ)
    cycles: list[frozenset[int]] = []
    cid, trans = [0] * n, [0] * n
    for s in range(n):
        i = s
        for _ in range(n):
            i = succ[i]
        # i is on the cycle now; collect it
        cyc = {i}
        j = succ[i]
        while j != i:
            cyc.add(j)
            j = succ[j]
        cyc = frozenset(cyc)
        if cyc not in cycles:
            cycles.append(cyc)
        cid[s] = cycles.index(cyc)
        t, i = 0, s
        while i not in cyc:
            i = succ[i]
            t += 1
        trans[s] = t
    return cycles, cid, trans


def _components(succ) -> list[set[int]]:
    n = len(succ)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in enumerate(succ):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    comps: dict[int, set[int]] = {}
    for i in range(n):
        comps.setdefault(find(i), set()).add(i)
    return list(comps.values())


def random_functional_maps(rng: np.random.Generator, count: int, max_n: int = 200):
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        yield rng.integers(0, n, size=n).tolist()


def check_functional_graphs(count: int = 1000, max_n: int = 200, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    for k, succ in enumerate(random_functional_maps(rng, count, max_n)):
        cycles, basin, transient = decompose_indices(succ)
        o_cycles, o_cid, o_trans = naive_decompose(succ)
        got = [frozenset(c) for c in cycles]
        if set(got) != set(o_cycles) or len(got) != len(o_cycles):
            return CheckResult("functional_graphs", False, f"map {k}: cycle sets differ", time.perf_counter() - t0)
        remap = [o_cycles.index(c) for c in got]
        if any(remap[basin[s]] != o_cid[s] for s in range(len(succ))):
            return CheckResult("functional_graphs", False, f"map {k}: basin labels differ", time.perf_counter() - t0)
        if list(transient) != o_trans:
            return CheckResult("functional_graphs", False, f"map {k}: transients differ", time.perf_counter() - t0)
        for comp in _components(succ):
            if sum(1 for c in got if c <= comp) != 1:
                return CheckResult("functional_graphs", False, f"map {k}: component without one cycle",
                                   time.perf_counter() - t0)
        for s in range(len(succ)):
            i = s
            for _ in range(int(transient[s])):
                i = succ[i]
            if i not in got[basin[s]]:
                return CheckResult("functional_graphs", False, f"map {k}: orbit misses attractor",
                                   time.perf_counter() - t0)
    return CheckResult("functional_graphs", True, f"{count} random maps agree with the oracle",
                       time.perf_counter() - t0)


def random_grid_maps(rng: np.random.Generator, count: int, grid: GridSpec):
    """Random successor maps restricted to grid moves (plus staying put)."""
    nxt = grid.next_index
    for _ in range(count):
        gi = int(rng.integers(grid.n_states))
        cols = rng.integers(0, 5, size=grid.n_states)
        succ = [i if c == 4 else int(nxt[i, c]) for i, c in enumerate(cols)]
        succ[gi] = gi
        yield SuccessorMap(grid.states, tuple(succ), grid.states[gi])


def support_violations(maps, grid: GridSpec, H: int) -> tuple[int, int]:
    """Violations of ``LGS=0 => Succ=0`` and of ``LGS>0 => Succ>0``."""
    zero_bad = pos_bad = 0
    for m in maps:
        count, _ = local_goal_support(m, grid, m.goal)
        hit = bool(horizon_success_set(m, H))
        zero_bad += count == 0 and hit
        pos_bad += count > 0 and not hit
    return zero_bad, pos_bad


def check_local_support(count: int = 2000, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    grid = GridSpec(6, 6, 10)
    rng = np.random.default_rng(seed)
    zero_bad, pos_bad = support_violations(random_grid_maps(rng, count, grid), grid, 1)
    ok = zero_bad == 0 and pos_bad == 0
    return CheckResult("local_support", ok, f"violations: zero-support {zero_bad}, positive-support {pos_bad}",
                       time.perf_counter() - t0)


def check_gradient(draws: int = 100, coords: int = 24, h: float = 1e-5, seed: int = 0) -> CheckResult:
    """Central differences on randomly chosen parameters, skipping kink crossings."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, checked = 0.0, 0
    for _ in range(draws):
        p, _ = init_params(rng)
        p = NetParams(p.flat + rng.normal(0.0, 0.05, size=p.flat.shape))
        X = rng.uniform(0, 8, size=(1, 4))
        y = rng.uniform(-1, 1, size=1)
        _, grad = loss_and_grad(p, X, y)
        for k in rng.choice(p.flat.size, size=coords, replace=False):
            plus, minus = p.copy(), p.copy()
            plus.flat[k] += h
            minus.flat[k] -= h
            if _relu_mask(plus, X) != _relu_mask(minus, X):
                continue
            num = (loss_and_grad(plus, X, y)[0] - loss_and_grad(minus, X, y)[0]) / (2 * h)
            ana = grad.flat[k]
            scale = max(abs(num), abs(ana))
            if scale < 1e-7:
                continue
            worst = max(worst, abs(num - ana) / scale)
            checked += 1
    ok = worst < 1e-4 and checked > 0
    return CheckResult("gradient", ok, f"max relative error {worst:.2e} over {checked} coordinates",
                       time.perf_counter() - t0)


def _relu_mask(p: NetParams, X: np.ndarray) -> bytes:
    z1 = X @ p.W1.T + p.b1
    z2 = np.maximum(z1, 0.0) @ p.W2.T + p.b2
    return (z1 > 0).tobytes() + (z2 > 0).tobytes()


def check_fixture_metrics() -> CheckResult:
    """A 3x3 map with a two-state trap on the left column."""
    t0 = time.perf_counter()
    grid = GridSpec(3, 3, 8)
    table = {
        (0, 0): (0, 1), (0, 1): (0, 0), (0, 2): (0, 1),
        (1, 0): (1, 1), (1, 1): (1, 1), (1, 2): (1, 1),
        (2, 0): (2, 1), (2, 1): (1, 1), (2, 2): (2, 1),
    }
    m = SuccessorMap.from_table(table, goal=(1, 1), order=grid.states)
    d = decompose(m)
    sizes = sorted(int(x) for x in d.basin_sizes())
    succ = len(horizon_success_set(m, 8)) / 8
    ok = sizes == [3, 6] and succ == 5 / 8 and local_goal_support(m, grid, State(1, 1)) == (3, 0.75)
    return CheckResult("fixture_metrics", ok, f"basins {sizes}, success {succ}", time.perf_counter() - t0)


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "functional_graphs": check_functional_graphs,
    "local_support": check_local_support,
    "gradient": check_gradient,
    "fixture_metrics": check_fixture_metrics,
}


def run_checks(names=None) -> list[CheckResult]:
    return [CHECKS[n]() for n in (names or CHECKS)]
