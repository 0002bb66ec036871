"""Minimal dense-network engine in float64 numpy: Dense / BatchNorm / ReLU
layers with exact reverse-mode gradients, softmax cross-entropy on hard or
soft targets, SGD-momentum and AdamW steps, mixup, and a JSON+blob
checkpoint format.

Everything is deliberately explicit so analytic gradients can be audited
against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRAIN = "train"
EVAL = "eval"


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        # He-uniform fan-in initialization, zero bias
        limit = np.sqrt(6.0 / in_dim)
        self.weight = rng.uniform(-limit, limit, size=(in_dim, out_dim))
        self.bias = np.zeros(out_dim)
        self._x = None

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._x = x if train else None
        return x @ self.weight + self.bias

    def backward(self, dout: np.ndarray):
        dw = self._x.T @ dout
        db = dout.sum(axis=0)
        return dout @ self.weight.T, [dw, db]

    def params(self):
        return [self.weight, self.bias]

    def spec(self) -> dict:
        return {"type": "dense", "in_dim": self.in_dim, "out_dim": self.out_dim}


class BatchNorm:
    def __init__(self, dim: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.eps = eps
        self._cache = None

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if train:
            if x.shape[0] < 2:
                raise ValueError("BatchNorm needs a batch of at least 2 in train mode")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std) if train else None
        return self.gamma * xhat + self.beta

    def backward(self, dout: np.ndarray):
        xhat, inv_std = self._cache
        n = dout.shape[0]
        dgamma = (dout * xhat).sum(axis=0)
        dbeta = dout.sum(axis=0)
        # gradient through the batch statistics (population variance)
        dxhat = dout * self.gamma
        dx = (inv_std / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        return dx, [dgamma, dbeta]

    def params(self):
        return [self.gamma, self.beta]

    def spec(self) -> dict:
        return {"type": "batchnorm", "dim": self.dim, "momentum": self.momentum, "eps": self.eps}


class Relu:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._mask = x > 0 if train else None
        return np.maximum(x, 0.0)

    def backward(self, dout: np.ndarray):
        return dout * self._mask, []

    def params(self):
        return []

    def spec(self) -> dict:
        return {"type": "relu"}


class Mlp:
    """Ordered layer stack with a train/eval mode flag.

    `forward` in train mode caches activations; `backward` consumes them and
    returns one gradient array per entry of `parameters()`, in order.
    """

    def __init__(self, layers: list):
        self.layers = layers
        self.mode = TRAIN
        self._forward_ready = False
        _check_dims(layers)

    def train(self) -> "Mlp":
        self.mode = TRAIN
        return self

    def eval(self) -> "Mlp":
        self.mode = EVAL
        self._forward_ready = False
        return self

    @property
    def input_dim(self) -> int:
        for layer in self.layers:
            if isinstance(layer, Dense):
                return layer.in_dim
        raise ValueError("network has no Dense layer")

    @property
    def output_dim(self) -> int:
        for layer in reversed(self.layers):
            if isinstance(layer, Dense):
                return layer.out_dim
        raise ValueError("network has no Dense layer")

    def forward(self, x: np.ndarray, mode: str | None = None) -> np.ndarray:
        mode = self.mode if mode is None else mode
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected input of width {self.input_dim}, got shape {x.shape}")
        train = mode == TRAIN
        for layer in self.layers:
            x = layer.forward(x, train)
        self._forward_ready = train
        return x

    def backward(self, dlogits: np.ndarray) -> list[np.ndarray]:
        if not self._forward_ready:
            raise RuntimeError("backward requires a preceding train-mode forward")
        self._forward_ready = False
        grads: list[np.ndarray] = []
        d = dlogits
        for layer in reversed(self.layers):
            d, layer_grads = layer.backward(d)
            grads = layer_grads + grads
        return grads

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out


def _check_dims(layers: list) -> None:
    width = None
    for layer in layers:
        if isinstance(layer, Dense):
            if width is not None and layer.in_dim != width:
                raise ValueError(f"layer width mismatch: {width} feeds Dense({layer.in_dim})")
            width = layer.out_dim
        elif isinstance(layer, BatchNorm):
            if width is not None and layer.dim != width:
                raise ValueError(f"layer width mismatch: {width} feeds BatchNorm({layer.dim})")


def build_mlp(input_dim: int, hidden: tuple[int, ...], output_dim: int, seed: int,
              batchnorm: bool = True) -> Mlp:
    """Dense -> [BatchNorm] -> ReLU blocks followed by a linear output layer."""
    rng = np.random.default_rng(seed)
    layers: list = []
    width = input_dim
    for h in hidden:
        layers.append(Dense(width, h, rng))
        if batchnorm:
            layers.append(BatchNorm(h))
        layers.append(Relu())
        width = h
    layers.append(Dense(width, output_dim, rng))
    return Mlp(layers)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy between softmax(logits) and target distributions.

    Returns (loss, dLoss/dLogits). Targets may be one-hot or soft; rows must
    sum to 1.
    """
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    if not np.allclose(targets.sum(axis=1), 1.0, atol=1e-8):
        raise ValueError("target rows must sum to 1")
    n = logits.shape[0]
    loss = -(targets * log_softmax(logits)).sum() / n
    grad = (softmax(logits) - targets) / n
    return loss, grad


@dataclass
class SgdMomentum:
    """v <- momentum*v + g + weight_decay*w;  w <- w - lr*v."""

    lr: float
    momentum: float = 0.9
    weight_decay: float = 0.0
    _velocity: list = field(default_factory=list, repr=False)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self._velocity:
            self._velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self._velocity, strict=True):
            v *= self.momentum
            v += g + self.weight_decay * p
            p -= self.lr * v


@dataclass
class AdamW:
    """Adam moments with decoupled weight decay (w <- w - lr*weight_decay*w)."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    _m: list = field(default_factory=list, repr=False)
    _v: list = field(default_factory=list, repr=False)
    _t: int = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self._m:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self._t += 1
        bc1 = 1.0 - self.beta1 ** self._t
        bc2 = 1.0 - self.beta2 ** self._t
        for p, g, m, v in zip(params, grads, self._m, self._v, strict=True):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p -= self.lr * self.weight_decay * p


def mixup(batch_a: np.ndarray, targets_a: np.ndarray, batch_b: np.ndarray, targets_b: np.ndarray,
          alpha: float, rng: np.random.Generator, lam: np.ndarray | float | None = None):
    """Convex combinations with per-pair lambda ~ Beta(alpha, alpha); the same
    lambda mixes a pair's features and targets. `lam` overrides sampling."""
    if alpha <= 0:
        raise ValueError("mixup alpha must be positive")
    if batch_a.shape != batch_b.shape or targets_a.shape != targets_b.shape:
        raise ValueError("mixup batches must have matching shapes")
    if lam is None:
        lam = rng.beta(alpha, alpha, size=batch_a.shape[0])
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (batch_a.shape[0],))
    lx = lam[:, None]
    return lx * batch_a + (1 - lx) * batch_b, lx * targets_a + (1 - lx) * targets_b


def save_checkpoint(net: Mlp, path: str | Path) -> None:
    """Write <path>.json (layer manifest) and <path>.bin (little-endian
    float64 blob of parameters followed by BatchNorm running stats)."""
    path = Path(path)
    arrays = list(net.parameters())
    for layer in net.layers:
        if isinstance(layer, BatchNorm):
            arrays.extend([layer.running_mean, layer.running_var])
    manifest = {"layers": [layer.spec() for layer in net.layers]}
    path.with_suffix(".json").write_text(json.dumps(manifest, indent=2) + "\n")
    blob = np.concatenate([a.ravel() for a in arrays]).astype("<f8")
    path.with_suffix(".bin").write_bytes(blob.tobytes())


def load_checkpoint(path: str | Path) -> Mlp:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    rng = np.random.default_rng(0)
    layers: list = []
    for spec in manifest["layers"]:
        if spec["type"] == "dense":
            layers.append(Dense(spec["in_dim"], spec["out_dim"], rng))
        elif spec["type"] == "batchnorm":
            layers.append(BatchNorm(spec["dim"], spec["momentum"], spec["eps"]))
        elif spec["type"] == "relu":
            layers.append(Relu())
        else:
            raise ValueError(f"unknown layer type {spec['type']!r} in manifest")
    net = Mlp(layers)
    arrays = list(net.parameters())
    for layer in net.layers:
        if isinstance(layer, BatchNorm):
            arrays.extend([layer.running_mean, layer.running_var])
    blob = np.frombuffer(Path(path).with_suffix(".bin").read_bytes(), dtype="<f8")
    expected = sum(a.size for a in arrays)
    if blob.size != expected:
        raise ValueError(f"checkpoint blob holds {blob.size} values, manifest expects {expected}")
    offset = 0
    for a in arrays:
        a[...] = blob[offset:offset + a.size].reshape(a.shape)
        offset += a.size
    return net.eval()
