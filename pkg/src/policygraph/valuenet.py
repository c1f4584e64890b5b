"""Goal-conditioned value MLP ``V(s, g)``: 4 -> 128 -> 128 -> 1 with ReLU.

Forward and backward passes are written out by hand in float64. Inputs are the
raw coordinates ``(s_x, s_y, g_x, g_y)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HIDDEN = 128
INPUT_DIM = 4

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LEARNING_RATE = 1e-3

TENSOR_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


class NumericFault(ArithmeticError):
    """A forward or backward pass produced a non-finite number."""


class NetParams:
    """Network weights stored as views into one contiguous float64 vector.

    ``W1`` (128, 4), ``b1`` (128,), ``W2`` (128, 128), ``b2`` (128,),
    ``W3`` (1, 128), ``b3`` (1,).
    """

    __slots__ = ("flat", "W1", "b1", "W2", "b2", "W3", "b3")

    def __init__(self, flat: np.ndarray):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters, got shape {flat.shape}")
        self.flat = flat
        for name, (lo, hi, shape) in _LAYOUT.items():
            setattr(self, name, flat[lo:hi].reshape(shape))

    @classmethod
    def from_tensors(cls, **tensors: np.ndarray) -> "NetParams":
        flat = np.empty(N_PARAMS)
        for name, (lo, hi, shape) in _LAYOUT.items():
            arr = np.asarray(tensors[name], dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
            flat[lo:hi] = arr.ravel()
        return cls(flat)

    @classmethod
    def zeros(cls) -> "NetParams":
        return cls(np.zeros(N_PARAMS))

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TENSOR_NAMES}

    def copy(self) -> "NetParams":
        return NetParams(self.flat.copy())

    def all_finite(self) -> bool:
        return bool(np.isfinite(self.flat).all())

    def __eq__(self, other) -> bool:
        return isinstance(other, NetParams) and np.array_equal(self.flat, other.flat)

    def __repr__(self) -> str:
        return f"NetParams(n={N_PARAMS})"


@dataclass
class AdamState:
    m: NetParams
    v: NetParams
    t: int = 0
    lr: float = LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def fresh(cls, lr: float = LEARNING_RATE) -> "AdamState":
        return cls(m=NetParams.zeros(), v=NetParams.zeros(), t=0, lr=lr)


def param_shapes(hidden: int = HIDDEN) -> dict[str, tuple[int, ...]]:
    return {
        "W1": (hidden, INPUT_DIM),
        "b1": (hidden,),
        "W2": (hidden, hidden),
        "b2": (hidden,),
        "W3": (1, hidden),
        "b3": (1,),
    }


def _layout() -> dict[str, tuple[int, int, tuple[int, ...]]]:
    out, lo = {}, 0
    for name, shape in param_shapes().items():
        hi = lo + int(np.prod(shape))
        out[name] = (lo, hi, shape)
        lo = hi
    return out


_LAYOUT = _layout()
N_PARAMS = max(hi for _, hi, _ in _LAYOUT.values())


def init_params(rng_seed: int | np.random.Generator, lr: float = LEARNING_RATE) -> tuple[NetParams, AdamState]:
    """Fan-in scaled uniform weights in ``[-sqrt(6/fan_in), sqrt(6/fan_in)]``, zero biases."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    p = NetParams.zeros()
    for name, shape in param_shapes().items():
        if name.startswith("W"):
            bound = np.sqrt(6.0 / shape[1])
            getattr(p, name)[...] = rng.uniform(-bound, bound, size=shape)
    return p, AdamState.fresh(lr)


def encode(s, g) -> np.ndarray:
    return np.array([s[0], s[1], g[0], g[1]], dtype=np.float64)


def forward_batch(p: NetParams, X: np.ndarray) -> np.ndarray:
    """Values for a ``(n, 4)`` input matrix."""
    with np.errstate(over="ignore", invalid="ignore"):
        h1 = np.maximum(X @ p.W1.T + p.b1, 0.0)
        h2 = np.maximum(h1 @ p.W2.T + p.b2, 0.0)
        out = h2 @ p.W3[0] + p.b3[0]
    if not np.isfinite(out).all():
        raise NumericFault("non-finite value in forward pass")
    return out


def forward(p: NetParams, s, g) -> float:
    return float(forward_batch(p, encode(s, g)[None, :])[0])


def loss_and_grad(p: NetParams, X: np.ndarray, y: np.ndarray) -> tuple[float, NetParams]:
    """Mean squared error ``mean((V(X) - y)^2)`` and its gradient."""
    n = X.shape[0]
    z1 = X @ p.W1.T + p.b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ p.W2.T + p.b2
    h2 = np.maximum(z2, 0.0)
    out = h2 @ p.W3[0] + p.b3[0]
    resid = out - y
    loss = float(resid @ resid) / n

    g = NetParams.zeros()
    d_out = (2.0 / n) * resid
    np.matmul(d_out, h2, out=g.W3[0])
    g.b3[0] = d_out.sum()
    # relu subgradient at 0 is 0
    d_z2 = d_out[:, None] * p.W3[0]
    d_z2 *= z2 > 0.0
    np.matmul(d_z2.T, h1, out=g.W2)
    d_z2.sum(axis=0, out=g.b2)
    d_z1 = d_z2 @ p.W2
    d_z1 *= z1 > 0.0
    np.matmul(d_z1.T, X, out=g.W1)
    d_z1.sum(axis=0, out=g.b1)
    return loss, g


def adam_update(p: NetParams, a: AdamState, grad: NetParams) -> tuple[NetParams, AdamState]:
    t = a.t + 1
    g = grad.flat
    m = a.beta1 * a.m.flat + (1.0 - a.beta1) * g
    v = a.beta2 * a.v.flat + (1.0 - a.beta2) * (g * g)
    # bias corrections folded into the step size and epsilon
    c1 = 1.0 - a.beta1**t
    c2 = 1.0 - a.beta2**t
    denom = np.sqrt(v / c2)
    denom += a.eps
    new = p.flat - (a.lr / c1) * m / denom
    state = AdamState(
        m=NetParams(m), v=NetParams(v), t=t,
        lr=a.lr, beta1=a.beta1, beta2=a.beta2, eps=a.eps,
    )
    return NetParams(new), state


def train_step(
    p: NetParams, a: AdamState, X: np.ndarray, y: np.ndarray
) -> tuple[NetParams, AdamState, float]:
    """One Adam step on the MSE of ``V(X)`` against ``y``; returns the pre-update loss.

    ``p`` and ``a`` are never modified. On a non-finite loss or gradient
    :class:`NumericFault` is raised and nothing is updated.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("batch must be a non-empty (n, 4) array")
    if not np.isfinite(y).all():
        raise ValueError("targets must be finite")
    with np.errstate(over="ignore", invalid="ignore"):
        loss, grad = loss_and_grad(p, X, y)
    if not np.isfinite(loss) or not grad.all_finite():
        raise NumericFault("non-finite loss or gradient")
    new_p, new_a = adam_update(p, a, grad)
    if not new_p.all_finite():
        raise NumericFault("non-finite parameters after update")
    return new_p, new_a, loss


def batch_arrays(batch) -> tuple[np.ndarray, np.ndarray]:
    """Convert ``[(s, g, target), ...]`` into ``(X, y)`` arrays."""
    X = np.array([[s[0], s[1], g[0], g[1]] for s, g, _ in batch], dtype=np.float64)
    y = np.array([t for _, _, t in batch], dtype=np.float64)
    return X, y


# Checkpoint layout:
#   line 1  magic "PGVN1"
#   line 2  JSON header {"tensors": [[name, shape], ...], "adam": {t, lr, beta1, beta2, eps} | null}
#   rest    little-endian float64: the parameters in header order, followed by
#           Adam first moments and second moments (same order) when "adam" is set.

_MAGIC = b"PGVN1\n"


def save_checkpoint(path: str | Path, p: NetParams, a: AdamState | None = None) -> None:
    header = {
        "tensors": [[name, list(shape)] for name, (_, _, shape) in _LAYOUT.items()],
        "adam": None if a is None else {
            "t": a.t, "lr": a.lr, "beta1": a.beta1, "beta2": a.beta2, "eps": a.eps,
        },
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(p.flat.astype("<f8").tobytes())
        if a is not None:
            fh.write(a.m.flat.astype("<f8").tobytes())
            fh.write(a.v.flat.astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[NetParams, AdamState | None]:
    with open(path, "rb") as fh:
        if fh.readline() != _MAGIC:
            raise ValueError(f"{path}: not a value-net checkpoint")
        header = json.loads(fh.readline())
        data = fh.read()
    expected = [[name, list(shape)] for name, (_, _, shape) in _LAYOUT.items()]
    if header["tensors"] != expected:
        raise ValueError(f"{path}: tensor layout does not match this network")
    vecs = np.frombuffer(data, dtype="<f8").astype(np.float64)
    n_blocks = 1 if header["adam"] is None else 3
    if vecs.size != n_blocks * N_PARAMS:
        raise ValueError(f"{path}: truncated checkpoint")
    p = NetParams(vecs[:N_PARAMS].copy())
    a = None
    if header["adam"] is not None:
        a = AdamState(
            m=NetParams(vecs[N_PARAMS:2 * N_PARAMS].copy()),
            v=NetParams(vecs[2 * N_PARAMS:].copy()),
            **header["adam"],
        )
    return p, a
