"""Fully-connected ReLU network in NumPy with hand-written backprop.

All weights and biases live in one flat float64 vector; the per-layer
matrices are views into it. Gradients use the same flat layout, so an
optimizer step is a single vectorised update.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

ACTIVATIONS = ("relu", "identity")
_MAGIC = b"DYNPEN-NET 1\n"


class ShapeError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    """A loss, gradient or parameter became non-finite."""


@dataclass(frozen=True)
class LayerSpec:
    n_in: int
    n_out: int
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError(f"layer widths must be >= 1, got {self.n_in}x{self.n_out}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def mlp_layers(n_in: int, hidden: Sequence[int], n_out: int) -> list[LayerSpec]:
    """ReLU hidden layers followed by a linear output layer."""
    widths = [n_in, *hidden, n_out]
    return [
        LayerSpec(a, b, "relu" if k < len(widths) - 2 else "identity")
        for k, (a, b) in enumerate(zip(widths[:-1], widths[1:]))
    ]


def mse_loss(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.size == 0:
        raise ShapeError(f"mse_loss needs equal non-empty shapes, got {p.shape} and {t.shape}")
    return float(np.mean((p - t) ** 2))


class Network:
    """Feedforward network ``y = W_L relu(... relu(W_1 x + b_1) ...) + b_L``.

    Weight matrices are stored output-by-input. ``params`` is the flat vector
    holding, per layer, the row-major weights followed by the bias.
    """

    def __init__(self, layers: Sequence[LayerSpec], params: np.ndarray | None = None):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for a, b in zip(layers[:-1], layers[1:]):
            if a.n_out != b.n_in:
                raise ShapeError(f"layer widths do not chain: {a.n_out} -> {b.n_in}")
        self.layers = layers
        size = sum(l.n_out * l.n_in + l.n_out for l in layers)
        if params is None:
            params = np.zeros(size)
        params = np.array(params, dtype=float).ravel()
        if params.size != size:
            raise ShapeError(f"expected {size} parameters, got {params.size}")
        self.params = params
        self.weights, self.biases = self._views(self.params)

    def _views(self, flat: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        weights, biases = [], []
        offset = 0
        for l in self.layers:
            n = l.n_out * l.n_in
            weights.append(flat[offset:offset + n].reshape(l.n_out, l.n_in))
            offset += n
            biases.append(flat[offset:offset + l.n_out])
            offset += l.n_out
        return weights, biases

    @classmethod
    def init(cls, layers: Sequence[LayerSpec], rng: np.random.Generator) -> "Network":
        """He-normal weights (std ``sqrt(2 / fan_in)``) and zero biases."""
        net = cls(layers)
        for layer, w in zip(net.layers, net.weights):
            w[...] = rng.normal(0.0, np.sqrt(2.0 / layer.n_in), size=w.shape)
        return net

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    def copy(self) -> "Network":
        return Network(self.layers, self.params.copy())

    def load_params(self, other: "Network") -> None:
        if other.layers != self.layers:
            raise ShapeError("cannot copy parameters between different architectures")
        self.params[...] = other.params

    def _as_batch(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"expected input width {self.n_in}, got shape {x.shape}")
        return x, single

    def _activations(self, x: np.ndarray) -> list[np.ndarray]:
        acts = [x]
        h = x
        for layer, w, b in zip(self.layers, self.weights, self.biases):
            h = h @ w.T + b
            if layer.activation == "relu":
                h = np.maximum(h, 0.0)
            acts.append(h)
        return acts

    def forward(self, x) -> np.ndarray:
        """Evaluate on one input vector or a batch of row vectors."""
        batch, single = self._as_batch(x)
        out = self._activations(batch)[-1]
        return out[0] if single else out

    __call__ = forward

    def _backprop(self, acts: list[np.ndarray], dout: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(self.params)
        gw, gb = self._views(grad)
        d = dout
        for k in range(len(self.layers) - 1, -1, -1):
            if self.layers[k].activation == "relu":
                # subgradient of relu at 0 is taken as 0
                d = d * (acts[k + 1] > 0.0)
            gw[k][...] = d.T @ acts[k]
            gb[k][...] = d.sum(axis=0)
            if k:
                d = d @ self.weights[k]
        return grad

    def backward(self, inputs, targets) -> tuple[np.ndarray, float]:
        """Flat gradient of the mean squared error over all outputs, and that loss."""
        x, _ = self._as_batch(inputs)
        acts = self._activations(x)
        t = np.asarray(targets, dtype=float)
        if t.size != acts[-1].size:
            raise ShapeError(f"targets of shape {t.shape} do not match outputs {acts[-1].shape}")
        diff = acts[-1] - t.reshape(acts[-1].shape)
        loss = float(np.mean(diff ** 2))
        return self._backprop(acts, 2.0 * diff / diff.size), loss

    def backward_selected(self, inputs, columns, targets) -> tuple[np.ndarray, float]:
        """Like :meth:`backward`, but the error only counts output ``columns[i]`` of row ``i``.

        This is the Q-learning loss: one taken action per transition.
        """
        x, _ = self._as_batch(inputs)
        acts = self._activations(x)
        out = acts[-1]
        rows = np.arange(out.shape[0])
        columns = np.asarray(columns, dtype=int)
        t = np.asarray(targets, dtype=float)
        if columns.shape != (out.shape[0],) or t.shape != (out.shape[0],):
            raise ShapeError("columns and targets must have one entry per input row")
        diff = out[rows, columns] - t
        loss = float(np.mean(diff ** 2))
        dout = np.zeros_like(out)
        dout[rows, columns] = 2.0 * diff / diff.size
        return self._backprop(acts, dout), loss

    def save(self, path: str | Path) -> None:
        """Write a checkpoint: magic line, JSON header line, raw little-endian float64 parameters."""
        header = {
            "layers": [[l.n_in, l.n_out, l.activation] for l in self.layers],
            "dtype": "<f8",
            "count": int(self.params.size),
        }
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(json.dumps(header).encode() + b"\n")
            fh.write(self.params.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "Network":
        with open(path, "rb") as fh:
            if fh.readline() != _MAGIC:
                raise ValueError(f"{path} is not a network checkpoint")
            header = json.loads(fh.readline())
            params = np.frombuffer(fh.read(), dtype=header["dtype"]).astype(float)
        if params.size != header["count"]:
            raise ValueError(f"{path}: truncated parameter block")
        return cls([LayerSpec(*l) for l in header["layers"]], params)


def _check_gradient(grad: np.ndarray) -> None:
    if not np.all(np.isfinite(grad)):
        raise TrainingDiverged("non-finite gradient")


class SGD:
    def __init__(self, lr: float = 1e-2):
        if not lr > 0:
            raise ValueError("learning rate must be positive")
        self.lr = lr
        self.t = 0

    def step(self, net: Network, grad: np.ndarray) -> None:
        _check_gradient(grad)
        net.params -= self.lr * grad
        self.t += 1


class Adam:
    """Adaptive-moment optimizer with bias correction."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if not lr > 0:
            raise ValueError("learning rate must be positive")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None

    def step(self, net: Network, grad: np.ndarray) -> None:
        _check_gradient(grad)
        if self.m is None:
            self.m = np.zeros_like(net.params)
            self.v = np.zeros_like(net.params)
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        net.params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        if not np.all(np.isfinite(net.params)):
            raise TrainingDiverged("parameters became non-finite")


def make_optimizer(name: str, lr: float):
    if name == "adam":
        return Adam(lr)
    if name == "sgd":
        return SGD(lr)
    raise ValueError(f"unknown optimizer {name!r}")
