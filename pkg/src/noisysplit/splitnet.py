"""The learnable clean/noisy splitter: a small MLP over (current prediction,
prediction delta, observed label) trained on the risk-hedged subset, scoring
every sample with a clean/noisy softmax pair."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hedging import CLEAN, HedgedSet
from .nn import AdamW, BatchNorm, Dense, Mlp, Relu, softmax, softmax_cross_entropy

MIN_TRAIN_BATCH = 2  # BatchNorm floor


@dataclass
class PredictionHistory:
    """Current and previous-iteration class distributions of the main model.

    `previous` starts at zeros, so the first delta block equals the current
    predictions.
    """

    current: np.ndarray  # (N, r)
    previous: np.ndarray  # (N, r)

    @classmethod
    def initial(cls, n: int, class_count: int) -> "PredictionHistory":
        return cls(current=np.zeros((n, class_count)), previous=np.zeros((n, class_count)))

    def roll(self, new_current: np.ndarray) -> None:
        self.previous = self.current
        self.current = new_current


@dataclass
class SplitScores:
    """Softmax (clean, noisy) pairs; confidence is the row max, in [0.5, 1]."""

    probs: np.ndarray  # (N, 2)

    @property
    def s_clean(self) -> np.ndarray:
        return self.probs[:, 0]

    @property
    def s_noisy(self) -> np.ndarray:
        return self.probs[:, 1]

    @property
    def confidence(self) -> np.ndarray:
        return self.probs.max(axis=1)


@dataclass
class SplitNetModel:
    net: Mlp
    optimizer: AdamW
    class_count: int
    use_delta: bool = True
    trained: bool = False  # flips once any training round completes


def build_splitnet(class_count: int, hidden: int = 64, blocks: int = 3,
                   batchnorm: bool = True, use_delta: bool = True,
                   lr: float = 1e-3, weight_decay: float = 5e-4,
                   seed: int = 0) -> SplitNetModel:
    """Dense->BatchNorm->ReLU blocks over the 3r-wide input (2r without the
    delta block) and a final 2-way projection. The batchnorm and delta knobs
    exist for structure ablations only."""
    rng = np.random.default_rng(seed)
    width = (3 if use_delta else 2) * class_count
    layers: list = []
    for _ in range(blocks):
        layers.append(Dense(width, hidden, rng))
        if batchnorm:
            layers.append(BatchNorm(hidden))
        layers.append(Relu())
        width = hidden
    layers.append(Dense(width, 2, rng))
    net = Mlp(layers).eval()
    return SplitNetModel(
        net=net,
        optimizer=AdamW(lr=lr, weight_decay=weight_decay),
        class_count=class_count,
        use_delta=use_delta,
    )


def build_input(history: PredictionHistory, noisy_labels: np.ndarray,
                use_delta: bool = True) -> np.ndarray:
    """Row i = concat(current_i, current_i - previous_i, label_i)."""
    if history.current.shape != history.previous.shape:
        raise ValueError("prediction history shapes differ")
    if history.current.shape != noisy_labels.shape:
        raise ValueError(
            f"history shape {history.current.shape} != labels shape {noisy_labels.shape}"
        )
    if use_delta:
        return np.concatenate(
            [history.current, history.current - history.previous, noisy_labels], axis=1
        )
    return np.concatenate([history.current, noisy_labels], axis=1)


def can_train(hedged: HedgedSet) -> bool:
    return hedged.size >= 2 * MIN_TRAIN_BATCH and hedged.n_clean > 0 and hedged.n_noisy > 0


def train_splitnet(model: SplitNetModel, hedged: HedgedSet, inputs: np.ndarray,
                   epochs: int, batch_size: int, rng: np.random.Generator) -> bool:
    """Cross-entropy training on the hedged subset only, warm-started from the
    model's current parameters. Returns False (and touches nothing) when the
    hedged set is too small or single-class; leaves the net in eval mode."""
    if not can_train(hedged):
        return False

    x = inputs[hedged.indices]
    targets = np.zeros((hedged.size, 2))
    targets[np.arange(hedged.size), hedged.labels] = 1.0

    net = model.net.train()
    for _ in range(epochs):
        order = rng.permutation(hedged.size)
        for start in range(0, hedged.size, batch_size):
            batch = order[start:start + batch_size]
            if len(batch) < MIN_TRAIN_BATCH:
                continue
            logits = net.forward(x[batch])
            _, dlogits = softmax_cross_entropy(logits, targets[batch])
            grads = net.backward(dlogits)
            model.optimizer.step(net.parameters(), grads)
    net.eval()
    model.trained = True
    return True


def split_scores(model: SplitNetModel, inputs: np.ndarray) -> SplitScores:
    return SplitScores(probs=softmax(model.net.forward(inputs, mode="eval")))


def posterior_scores(w: np.ndarray) -> SplitScores:
    """Scores taken directly from the mixture posterior (s_clean = w); used
    before any splitter exists and by the no-splitter ablation."""
    w = np.asarray(w, dtype=np.float64)
    return SplitScores(probs=np.stack([w, 1.0 - w], axis=1))
