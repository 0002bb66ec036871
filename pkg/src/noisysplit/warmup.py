"""Warm-up: K-fold cross-filtering selects presumed-clean samples via
out-of-fold agreement plus confidence, then a semi-supervised pass (mixup
supervision on the filtered set, consistency regularization on everything)
warms the main model without ever trusting unfiltered labels."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import AugmentSpec, NoisyDataset, strong_augment, weak_augment
from .nn import Mlp, SgdMomentum, build_mlp, log_softmax, mixup, softmax, softmax_cross_entropy


@dataclass
class FoldPlan:
    n_folds: int
    assignment: np.ndarray  # (N,) fold index per sample

    def fold_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)

    def out_of_fold_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != k)


@dataclass
class FilteredSet:
    indices: np.ndarray  # sorted, presumed-clean sample indices

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass
class FilterSpec:
    """Architecture and optimizer settings for the per-fold filtering nets
    (same MLP family as the main model)."""

    hidden: tuple[int, ...]
    batchnorm: bool = True
    lr: float = 0.02
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 128


def kfold_partition(n: int, k: int, seed: int) -> FoldPlan:
    """Random permutation sliced into K folds whose sizes differ by at most 1."""
    if not 2 <= k <= n:
        raise ValueError(f"fold count must satisfy 2 <= K <= N, got K={k}, N={n}")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=int)
    for fold, chunk in enumerate(np.array_split(perm, k)):
        assignment[chunk] = fold
    return FoldPlan(n_folds=k, assignment=assignment)


def ce_epoch(net: Mlp, features: np.ndarray, targets: np.ndarray, batch_size: int,
             optimizer: SgdMomentum, rng: np.random.Generator) -> float:
    """One shuffled epoch of plain cross-entropy; returns the mean batch loss."""
    order = rng.permutation(len(features))
    net.train()
    losses = []
    for start in range(0, len(order), batch_size):
        batch = order[start:start + batch_size]
        if len(batch) < 2:
            continue
        loss, dlogits = softmax_cross_entropy(net.forward(features[batch]), targets[batch])
        optimizer.step(net.parameters(), net.backward(dlogits))
        losses.append(loss)
    net.eval()
    return float(np.mean(losses)) if losses else 0.0


def cross_filter(ds: NoisyDataset, plan: FoldPlan, spec: FilterSpec, tau_label: float,
                 epochs: int, seed: int) -> FilteredSet:
    """Train a fresh filtering net per fold on the other folds, predict
    out-of-fold, and admit a sample only when the prediction argmax agrees
    with its observed label AND clears the confidence threshold."""
    seeds = np.random.SeedSequence(seed).spawn(plan.n_folds)
    admitted: list[np.ndarray] = []
    for k in range(plan.n_folds):
        init_seed, shuffle_seed = seeds[k].generate_state(2)
        net = build_mlp(ds.feature_dim, spec.hidden, ds.class_count,
                        seed=init_seed, batchnorm=spec.batchnorm)
        optimizer = SgdMomentum(lr=spec.lr, momentum=spec.momentum,
                                weight_decay=spec.weight_decay)
        train_idx = plan.out_of_fold_indices(k)
        rng = np.random.default_rng(shuffle_seed)
        for _ in range(epochs):
            ce_epoch(net, ds.features[train_idx], ds.noisy_labels[train_idx],
                     spec.batch_size, optimizer, rng)
        fold_idx = plan.fold_indices(k)
        probs = softmax(net.forward(ds.features[fold_idx], mode="eval"))
        agree = probs.argmax(axis=1) == ds.noisy_label_indices[fold_idx]
        confident = probs.max(axis=1) >= tau_label
        admitted.append(fold_idx[agree & confident])
    indices = np.sort(np.concatenate(admitted)) if admitted else np.array([], dtype=int)
    return FilteredSet(indices=indices)


def warmup_train(net: Mlp, ds: NoisyDataset, filtered: FilteredSet, aug: AugmentSpec,
                 mixup_alpha: float, epochs: int, tau_fixed: float, seed: int,
                 lr: float = 0.02, momentum: float = 0.9, weight_decay: float = 5e-4,
                 batch_size: int = 128) -> Mlp:
    """SSL warm-up: per batch, mixup cross-entropy on pairs drawn from the
    filtered set plus fixed-threshold consistency (weak-view pseudo-label,
    strong-view cross-entropy) over the full dataset, equally weighted."""
    if filtered.size == 0:
        raise ValueError("filtered set is empty; lower tau_label and re-filter")
    optimizer = SgdMomentum(lr=lr, momentum=momentum, weight_decay=weight_decay)
    rng = np.random.default_rng(seed)

    for _ in range(epochs):
        order = rng.permutation(ds.n)
        net.train()
        for start in range(0, ds.n, batch_size):
            batch = order[start:start + batch_size]
            if len(batch) < 2:
                continue
            xb = ds.features[batch]

            # weak-view pseudo-labels, gradient-free
            net.eval()
            weak_p = softmax(net.forward(weak_augment(xb, aug, rng)))
            net.train()
            conf_mask = weak_p.max(axis=1) >= tau_fixed
            pseudo = np.zeros_like(weak_p)
            pseudo[np.arange(len(batch)), weak_p.argmax(axis=1)] = 1.0

            lab = rng.choice(filtered.indices, size=len(batch), replace=True)
            pair = lab[rng.permutation(len(lab))]
            mixed_x, mixed_y = mixup(ds.features[lab], ds.noisy_labels[lab],
                                     ds.features[pair], ds.noisy_labels[pair],
                                     mixup_alpha, rng)

            strong = strong_augment(xb, aug, rng)
            stacked = np.concatenate([mixed_x, strong], axis=0)
            logits = net.forward(stacked)
            probs = softmax(logits)
            n_lab, n_unl = len(lab), len(batch)
            dlogits = np.empty_like(probs)
            dlogits[:n_lab] = (probs[:n_lab] - mixed_y) / n_lab
            dlogits[n_lab:] = conf_mask[:, None] * (probs[n_lab:] - pseudo) / n_unl
            optimizer.step(net.parameters(), net.backward(dlogits))
    return net.eval()


def save_filtered(filtered: FilteredSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps({"indices": filtered.indices.tolist()}) + "\n")


def load_filtered(path: str | Path) -> FilteredSet:
    data = json.loads(Path(path).read_text())
    return FilteredSet(indices=np.asarray(sorted(data["indices"]), dtype=int))
