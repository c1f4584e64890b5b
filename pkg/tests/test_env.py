import pytest

from policygraph.env import (
    ACTIONS,
    Action,
    GridSpec,
    InvalidStateError,
    State,
    bottleneck_grid,
    manhattan,
    neighbors,
    open_grid,
    path_distances,
    step,
    valid_states,
)


def test_boundary_clamp():
    g = open_grid(8, 16)
    assert step(g, State(0, 0), Action.LEFT) == (State(0, 0), 0)
    assert step(g, State(0, 0), Action.UP)[0] == State(0, 0)


def test_interior_moves_follow_axis_convention():
    g = open_grid(8, 16)
    s = State(3, 3)
    assert step(g, s, Action.UP)[0] == State(3, 2)
    assert step(g, s, Action.DOWN)[0] == State(3, 4)
    assert step(g, s, Action.LEFT)[0] == State(2, 3)
    assert step(g, s, Action.RIGHT)[0] == State(4, 3)


def test_wall_clamp():
    g = GridSpec(8, 8, 24, frozenset({State(4, 2)}))
    assert step(g, State(3, 2), Action.RIGHT)[0] == State(3, 2)


def test_reward_only_on_goal_entry():
    g = open_grid(8, 16)
    assert step(g, State(2, 3), Action.RIGHT, goal=State(3, 3)) == (State(3, 3), 1)
    assert step(g, State(2, 3), Action.LEFT, goal=State(3, 3))[1] == 0


def test_invalid_state_rejected():
    g = bottleneck_grid()
    with pytest.raises(InvalidStateError):
        step(g, State(4, 0), Action.UP)
    with pytest.raises(InvalidStateError):
        step(g, State(8, 0), Action.UP)


@pytest.mark.parametrize("grid,n", [
    (open_grid(8, 16), 64),
    (GridSpec(2, 2, 4, frozenset({State(1, 1)})), 3),
    (open_grid(12, 24), 144),
])
def test_valid_state_counts(grid, n):
    states = valid_states(grid)
    assert len(states) == n
    assert states == sorted(states, key=lambda s: (s.y, s.x))


def test_bottleneck_layout():
    g = bottleneck_grid()
    assert g.n_states == 64 - 7
    assert g.is_valid((4, 4))
    assert all(not g.is_valid((4, y)) for y in range(8) if y != 4)


@pytest.mark.parametrize("goal,k", [((0, 0), 2), ((3, 4), 4), ((0, 4), 3)])
def test_neighbor_counts(goal, k):
    nb = neighbors(open_grid(8, 16), State(*goal))
    assert len(nb) == k
    assert State(*goal) not in nb


def test_manhattan():
    assert manhattan((0, 0), (0, 0)) == 0
    assert manhattan((0, 0), (7, 7)) == 14
    assert manhattan((3, 4), (4, 3)) == 2


@pytest.mark.parametrize("grid", [open_grid(8, 16), open_grid(12, 24), bottleneck_grid()])
def test_step_total_and_local(grid):
    for s in grid.states:
        for a in ACTIONS:
            nxt, _ = step(grid, s, a)
            assert grid.is_valid(nxt)
            assert manhattan(s, nxt) <= 1


def test_reward_exactly_on_goal_successors():
    grid = bottleneck_grid()
    g = State(5, 4)
    for s in grid.states:
        for a in ACTIONS:
            nxt, r = step(grid, s, a, goal=g)
            assert r == int(nxt == g)


def test_edge_interior_counts():
    g = open_grid(8, 16)
    assert len(g.edge_states) == 28
    assert len(g.interior_states) == 36


def test_path_distances_detour_through_gap():
    g = bottleneck_grid()
    d = path_distances(g, State(3, 0))
    # (3,0) -> down to row 4, through the gap, back up to (5,0)
    assert d[g.index[State(5, 0)]] == 4 + 2 + 4
    assert g.diameter >= 14


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(0, 3, 4)
    with pytest.raises(ValueError):
        GridSpec(2, 2, 4, frozenset({State(2, 0)}))
    with pytest.raises(ValueError):
        GridSpec(1, 1, 4, frozenset({State(0, 0)}))


def test_gridspec_roundtrip():
    g = bottleneck_grid()
    assert GridSpec.from_dict(g.to_dict()) == g
