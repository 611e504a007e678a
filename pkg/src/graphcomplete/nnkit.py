"""Small dense numeric kernel: forward/backward primitives, Adam, grad checks.

Backward passes are composed by hand per model, so every primitive comes
as a pair ``op(...)`` / ``op_backward(..., grad_out)``. All arrays are
2-D float64 unless stated otherwise. Norm-based ops treat a zero row as
having zero direction: its normalized value, cosine and gradient are all 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "ShapeError",
    "matmul", "matmul_backward",
    "add_bias", "add_bias_backward",
    "relu", "relu_backward",
    "leaky_relu", "leaky_relu_backward",
    "sigmoid", "sigmoid_backward",
    "softplus", "softplus_backward",
    "row_l2_normalize", "row_l2_normalize_backward",
    "cosine_rows", "cosine_rows_backward",
    "softmax_rows", "softmax_rows_backward",
    "glorot",
    "ParamStore", "AdamState", "adam_step",
    "grad_check",
    "save_checkpoint", "load_checkpoint",
]

_EPS_NORM = 1e-12


class ShapeError(ValueError):
    pass


def _need(cond: bool, op: str, *arrays) -> None:
    if not cond:
        shapes = ", ".join(str(np.shape(a)) for a in arrays)
        raise ShapeError(f"{op}: incompatible shapes {shapes}")


def matmul(A, B):
    _need(A.ndim == 2 and B.ndim == 2 and A.shape[1] == B.shape[0], "matmul", A, B)
    return A @ B


def matmul_backward(A, B, G):
    return G @ B.T, A.T @ G


def add_bias(X, b):
    _need(b.ndim == 2 and b.shape[0] == 1 and b.shape[1] == X.shape[1], "add_bias", X, b)
    return X + b


def add_bias_backward(G):
    return G, G.sum(axis=0, keepdims=True)


def relu(X):
    return np.maximum(X, 0.0)


def relu_backward(X, G):
    return G * (X > 0)


def leaky_relu(X, slope: float = 0.2):
    return np.where(X > 0, X, slope * X)


def leaky_relu_backward(X, G, slope: float = 0.2):
    return G * np.where(X > 0, 1.0, slope)


def sigmoid(X):
    X = np.asarray(X, dtype=np.float64)
    out = np.empty_like(X)
    pos = X >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-X[pos]))
    ex = np.exp(X[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(X, G):
    s = sigmoid(X)
    return G * s * (1.0 - s)


def softplus(X):
    """log(1 + exp(x)), stable for large |x|."""
    return np.logaddexp(0.0, X)


def softplus_backward(X, G):
    return G * sigmoid(X)


def row_l2_normalize(X):
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    safe = np.where(norms > _EPS_NORM, norms, 1.0)
    return np.where(norms > _EPS_NORM, X / safe, 0.0)


def row_l2_normalize_backward(X, G):
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    safe = np.where(norms > _EPS_NORM, norms, 1.0)
    U = X / safe
    dX = (G - U * np.sum(G * U, axis=1, keepdims=True)) / safe
    return np.where(norms > _EPS_NORM, dX, 0.0)


def cosine_rows(A, B):
    """Row-wise cosine similarity, a vector of length ``A.shape[0]``."""
    _need(A.ndim == 2 and A.shape == B.shape, "cosine_rows", A, B)
    return np.sum(row_l2_normalize(A) * row_l2_normalize(B), axis=1)


def cosine_rows_backward(A, B, g):
    g = np.asarray(g, dtype=np.float64).reshape(-1, 1)
    UA, UB = row_l2_normalize(A), row_l2_normalize(B)
    return row_l2_normalize_backward(A, g * UB), row_l2_normalize_backward(B, g * UA)


def softmax_rows(X):
    Z = X - X.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def softmax_rows_backward(X, G):
    S = softmax_rows(X)
    return S * (G - np.sum(G * S, axis=1, keepdims=True))


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    a = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-a, a, size=(rows, cols))


class ParamStore:
    """Named 2-D parameters with matching gradient buffers, in insertion order."""

    def __init__(self):
        self._params: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value) -> np.ndarray:
        if name in self._params:
            raise KeyError(f"duplicate parameter name {name!r}")
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ShapeError(f"parameter {name!r} must be 2-D, got shape {arr.shape}")
        self._params[name] = arr
        self._grads[name] = np.zeros_like(arr)
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def accumulate(self, name: str, g) -> None:
        buf = self._grads[name]
        if np.shape(g) != buf.shape:
            raise ShapeError(f"gradient for {name!r} has shape {np.shape(g)}, expected {buf.shape}")
        buf += g

    def zero_grad(self) -> None:
        for g in self._grads.values():
            g.fill(0.0)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self._params.items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        for k, v in snap.items():
            self._params[k][...] = v

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for k, v in self._params.items():
            out.add(k, v)
        return out

    def num_values(self) -> int:
        return sum(v.size for v in self._params.values())


@dataclass
class AdamState:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(store: ParamStore, state: AdamState) -> None:
    """One bias-corrected Adam update in place; gradients are zeroed after."""
    for name, _ in store.items():
        if not np.all(np.isfinite(store.grad(name))):
            raise FloatingPointError(f"non-finite gradient in parameter {name!r}")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, p in store.items():
        g = store.grad(name)
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    store.zero_grad()


def grad_check(loss_fn: Callable[[ParamStore], float], store: ParamStore, h: float = 1e-5,
               max_coords: int | None = None, seed: int = 0, floor: float = 1e-8) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``loss_fn(store)`` must return the loss and write gradients into the
    store's buffers. With ``max_coords`` set, a seeded sample of that many
    coordinates is checked instead of all of them. The relative error of a
    coordinate is ``|a - n| / max(|a|, |n|, floor)``.
    """
    store.zero_grad()
    base = loss_fn(store)
    if not np.isfinite(base):
        raise FloatingPointError("loss is not finite")
    analytic = {k: store.grad(k).copy() for k in store.names()}

    coords = [(k, i) for k in store.names() for i in range(store[k].size)]
    if max_coords is not None and len(coords) > max_coords:
        rng = np.random.default_rng(seed)
        coords = [coords[j] for j in sorted(rng.choice(len(coords), max_coords, replace=False))]

    worst = 0.0
    for name, i in coords:
        flat = store[name].reshape(-1)
        old = flat[i]
        flat[i] = old + h
        store.zero_grad()
        up = loss_fn(store)
        flat[i] = old - h
        store.zero_grad()
        down = loss_fn(store)
        flat[i] = old
        if not (np.isfinite(up) and np.isfinite(down)):
            raise FloatingPointError(f"loss is not finite while perturbing {name}[{i}]")
        num = (up - down) / (2.0 * h)
        a = analytic[name].reshape(-1)[i]
        rel = abs(a - num) / max(abs(a), abs(num), floor)
        worst = max(worst, rel)
    store.zero_grad()
    return worst


_VERSION = 1


def save_checkpoint(store: ParamStore, path) -> None:
    """Binary layout (little endian):

    u32 format version, u32 parameter count, then per parameter
    u32 name length, UTF-8 name, u64 rows, u64 cols, rows*cols f64 values.
    """
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", _VERSION, len(store)))
        for name, arr in store.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<QQ", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> ParamStore:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise ValueError(f"{path}: truncated checkpoint header")
    version, count = struct.unpack_from("<II", data, 0)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off = 8
    store = ParamStore()
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<I", data, off)
            off += 4
            if off + nlen > len(data):
                raise struct.error("name runs past end of file")
            name = data[off:off + nlen].decode("utf-8")
            off += nlen
            rows, cols = struct.unpack_from("<QQ", data, off)
            off += 16
            nbytes = 8 * rows * cols
            if off + nbytes > len(data):
                raise struct.error(f"values of {name!r} run past end of file")
            vals = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
            off += nbytes
            store.add(name, vals)
    except (struct.error, UnicodeDecodeError) as exc:
        raise ValueError(f"{path}: truncated or corrupt checkpoint ({exc})") from None
    if off != len(data):
        raise ValueError(f"{path}: {len(data) - off} trailing bytes")
    return store
