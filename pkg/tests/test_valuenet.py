import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from policygraph.valuenet import (
    N_PARAMS,
    AdamState,
    NetParams,
    NumericFault,
    batch_arrays,
    forward,
    forward_batch,
    init_params,
    load_checkpoint,
    loss_and_grad,
    param_shapes,
    save_checkpoint,
    train_step,
)


def reference_forward(p: NetParams, x) -> float:
    """Unvectorised three-layer evaluation, one neuron at a time."""
    h1 = []
    for i in range(128):
        z = p.b1[i] + sum(p.W1[i, k] * x[k] for k in range(4))
        h1.append(max(z, 0.0))
    h2 = []
    for i in range(128):
        z = p.b2[i] + sum(p.W2[i, k] * h1[k] for k in range(128))
        h2.append(max(z, 0.0))
    return p.b3[0] + sum(p.W3[0, k] * h2[k] for k in range(128))


def test_shapes_and_count():
    shapes = param_shapes()
    assert shapes == {"W1": (128, 4), "b1": (128,), "W2": (128, 128), "b2": (128,), "W3": (1, 128), "b3": (1,)}
    assert N_PARAMS == sum(int(np.prod(s)) for s in shapes.values())


def test_init_is_deterministic_with_zero_biases():
    p0, a0 = init_params(0)
    q0, _ = init_params(0)
    p1, _ = init_params(1)
    assert p0 == q0
    assert not np.array_equal(p0.W1, p1.W1)
    for b in (p0.b1, p0.b2, p0.b3):
        assert not b.any()
    assert a0.t == 0 and not a0.m.flat.any() and not a0.v.flat.any()


def test_init_bounds():
    p, _ = init_params(3)
    assert np.abs(p.W1).max() <= np.sqrt(6 / 4)
    assert np.abs(p.W2).max() <= np.sqrt(6 / 128)


def test_zero_and_constant_networks():
    p = NetParams.zeros()
    assert forward(p, (3, 4), (1, 1)) == 0.0
    p.b3[0] = 0.37
    assert forward(p, (0, 0), (7, 7)) == 0.37
    assert forward(p, (5, 2), (1, 6)) == 0.37


def test_forward_matches_reference():
    rng = np.random.default_rng(11)
    p, _ = init_params(rng)
    p = NetParams(p.flat + rng.normal(0, 0.1, N_PARAMS))
    for _ in range(3):
        x = rng.integers(0, 8, size=4).astype(float)
        assert forward(p, x[:2], x[2:]) == pytest.approx(reference_forward(p, x), abs=1e-12)


def test_forward_rejects_non_finite():
    p = NetParams.zeros()
    p.b3[0] = np.inf
    with pytest.raises(NumericFault):
        forward(p, (0, 0), (0, 0))


def test_zero_residual_leaves_params_unchanged():
    p, a = init_params(2)
    X, _ = batch_arrays([((1, 2), (3, 4), 0.0), ((0, 0), (7, 7), 0.0)])
    y = forward_batch(p, X)
    new_p, new_a, loss = train_step(p, a, X, y)
    assert loss == 0.0
    assert new_p == p
    assert new_a.t == 1


def test_train_step_does_not_mutate_inputs():
    p, a = init_params(4)
    before_p, before_m = p.flat.copy(), a.m.flat.copy()
    X = np.array([[1.0, 2.0, 3.0, 4.0]])
    new_p, new_a, _ = train_step(p, a, X, np.array([1.0]))
    assert np.array_equal(p.flat, before_p) and np.array_equal(a.m.flat, before_m) and a.t == 0
    assert new_a.t == 1 and not new_p == p
    for name, shape in param_shapes().items():
        assert getattr(new_p, name).shape == shape


def test_train_step_is_deterministic():
    p, a = init_params(5)
    X = np.array([[1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 7.0, 2.0]])
    y = np.array([0.5, -0.25])
    r1, r2 = train_step(p, a, X, y), train_step(p, a, X, y)
    assert r1[0] == r2[0] and r1[2] == r2[2]
    assert np.array_equal(r1[1].v.flat, r2[1].v.flat)


def test_train_step_preconditions():
    p, a = init_params(0)
    with pytest.raises(ValueError):
        train_step(p, a, np.empty((0, 4)), np.empty(0))
    with pytest.raises(ValueError):
        train_step(p, a, np.ones((1, 4)), np.array([np.nan]))


def test_non_finite_gradient_raises():
    p, a = init_params(0)
    p.W3[0, :] = 1e300
    p.W2[...] = 1e300
    with pytest.raises(NumericFault):
        train_step(p, a, np.array([[7.0, 7.0, 7.0, 7.0]]), np.array([0.0]))


def test_adam_first_step_size():
    # with bias correction the first step is lr * sign(g) up to eps
    p, a = init_params(6)
    X = np.array([[1.0, 2.0, 3.0, 4.0]])
    y = np.array([5.0])
    _, grad = loss_and_grad(p, X, y)
    new_p, _, _ = train_step(p, a, X, y)
    big = np.abs(grad.flat) > 1e-4
    step = new_p.flat - p.flat
    assert np.allclose(step[big], -1e-3 * np.sign(grad.flat[big]), rtol=1e-3)


def _mask(p, X):
    z1 = X @ p.W1.T + p.b1
    z2 = np.maximum(z1, 0) @ p.W2.T + p.b2
    return (z1 > 0).tobytes() + (z2 > 0).tobytes()


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        p, _ = init_params(rng)
        p = NetParams(p.flat + rng.normal(0, 0.05, N_PARAMS))
        X = rng.uniform(0, 8, size=(4, 4))
        y = rng.uniform(-1, 1, size=4)
        _, grad = loss_and_grad(p, X, y)
        for k in rng.choice(N_PARAMS, size=10, replace=False):
            plus, minus = p.copy(), p.copy()
            plus.flat[k] += h
            minus.flat[k] -= h
            if _mask(plus, X) != _mask(minus, X):
                continue  # straddles a kink
            num = (loss_and_grad(plus, X, y)[0] - loss_and_grad(minus, X, y)[0]) / (2 * h)
            scale = max(abs(num), abs(grad.flat[k]))
            if scale > 1e-7:
                worst = max(worst, abs(num - grad.flat[k]) / scale)
    assert worst < 1e-4


def test_single_example_converges():
    p, a = init_params(1)
    X = np.array([[2.0, 3.0, 5.0, 1.0]])
    y = np.array([0.8])
    for k in range(2000):
        p, a, loss = train_step(p, a, X, y)
        if loss < 1e-3:
            break
    assert loss < 1e-3
    assert a.t <= 2000


def test_checkpoint_roundtrip(tmp_path):
    p, a = init_params(9)
    p, a, _ = train_step(p, a, np.array([[1.0, 1.0, 2.0, 2.0]]), np.array([1.0]))
    save_checkpoint(tmp_path / "c.ckpt", p, a)
    q, b = load_checkpoint(tmp_path / "c.ckpt")
    assert q == p
    assert b.t == a.t and np.array_equal(b.m.flat, a.m.flat) and np.array_equal(b.v.flat, a.v.flat)
    save_checkpoint(tmp_path / "p.ckpt", p)
    q, b = load_checkpoint(tmp_path / "p.ckpt")
    assert q == p and b is None


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"nope\n")
    with pytest.raises(ValueError):
        load_checkpoint(path)
    p, _ = init_params(0)
    save_checkpoint(path, p)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        load_checkpoint(path)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 11), min_size=4, max_size=4))
def test_batch_forward_equals_single(seed, coords):
    p, _ = init_params(seed)
    x = np.array(coords, dtype=float)
    assert forward_batch(p, x[None, :])[0] == forward(p, x[:2], x[2:])
