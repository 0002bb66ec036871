"""The alternating main-model training loop: per epoch, fit the loss-based
mixture, hedge thresholds, retrain the splitter on the confident subset, then
run one pass of clean-set supervision plus dynamic-threshold consistency
regularization over the whole dataset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import AugmentSpec, NoisyDataset, strong_augment, weak_augment
from .gmm import clean_posterior, fit_gmm_1d, normalize_losses
from .hedging import CLEAN, NOISY, HedgedSet, compute_thresholds, hedge_stats, select_hedged_set
from .metrics import pseudo_label_counts, split_metrics
from .nn import Mlp, SgdMomentum, log_softmax, softmax
from .splitnet import (PredictionHistory, SplitScores, build_input, build_splitnet,
                       posterior_scores, split_scores, train_splitnet)


@dataclass
class LoopConfig:
    """Main-loop hyper-parameters. beta1/beta2 bound the dynamic threshold
    from above/below; fixed_tau (ablation) replaces it with a constant."""

    epochs: int = 50
    batch_size: int = 128
    lr: float = 0.02
    lr_decay_factor: float = 0.1
    lr_decay_epoch: int | None = None  # defaults to 2/3 of epochs
    momentum: float = 0.9
    weight_decay: float = 5e-4
    beta1: float = 0.95
    beta2: float = 0.5
    tau_label: float = 0.95
    pivot: float = 0.5
    splitnet_hidden: int = 64
    splitnet_blocks: int = 3
    splitnet_batchnorm: bool = True
    splitnet_use_delta: bool = True
    splitnet_epochs: int = 5
    splitnet_batch_size: int = 128
    splitnet_lr: float = 1e-3
    splitnet_weight_decay: float = 5e-4
    gmm_tol: float = 1e-6
    gmm_max_iter: int = 200
    use_splitnet: bool = True
    use_hedging: bool = True
    fixed_tau: float | None = None
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.beta2 <= self.beta1 <= 1.0:
            raise ValueError(f"need 0 < beta2 <= beta1 <= 1, got ({self.beta1}, {self.beta2})")
        if not 0.0 < self.tau_label <= 1.0:
            raise ValueError(f"tau_label must lie in (0, 1], got {self.tau_label}")
        if not 0.0 < self.pivot < 1.0:
            raise ValueError(f"pivot must lie in (0, 1), got {self.pivot}")
        if self.epochs < 0 or self.batch_size < 2:
            raise ValueError("epochs must be >= 0 and batch_size >= 2")

    @property
    def decay_epoch(self) -> int:
        return (2 * self.epochs) // 3 if self.lr_decay_epoch is None else self.lr_decay_epoch


@dataclass
class EpochReport:
    """Per-epoch diagnostics; field order matches the epochs.csv columns."""

    epoch: int
    tau_mu: float
    tau_nu: float
    n_clean_set: int
    eta: float
    mask_count: int
    pseudo_correct: int
    pseudo_wrong: int
    split_f1_splitnet: float
    split_f1_gmm: float
    split_acc_splitnet: float
    split_acc_gmm: float
    test_acc: float


def make_pseudo_labels(net: Mlp, batch: np.ndarray, aug: AugmentSpec,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One-hot argmax of the weak-view prediction plus its confidence.
    Argmax ties resolve to the lowest class index."""
    probs = softmax(net.forward(weak_augment(batch, aug, rng), mode="eval"))
    q = np.zeros_like(probs)
    q[np.arange(len(probs)), probs.argmax(axis=1)] = 1.0
    return q, probs.max(axis=1)


def dynamic_threshold(confidence: np.ndarray | float, beta1: float, beta2: float):
    """tau_dyn = (1 - max(s)) * beta1 + max(s) * beta2: confidently split
    samples get the loose bound, boundary samples the strict one."""
    c = np.asarray(confidence, dtype=np.float64)
    return (1.0 - c) * beta1 + c * beta2


def unsupervised_loss(net: Mlp, batch: np.ndarray, scores: SplitScores, aug: AugmentSpec,
                      beta1: float, beta2: float, rng: np.random.Generator) -> tuple[float, int]:
    """Consistency loss over the full batch: cross-entropy of the strong view
    against the weak-view pseudo-label, gated per sample by the dynamic
    threshold; the denominator is the full batch size."""
    if len(scores.probs) != len(batch):
        raise ValueError("scores must align with the batch")
    q, weak_conf = make_pseudo_labels(net, batch, aug, rng)
    mask = weak_conf >= dynamic_threshold(scores.confidence, beta1, beta2)
    logp = log_softmax(net.forward(strong_augment(batch, aug, rng), mode="eval"))
    per_sample = -(q * logp).sum(axis=1)
    return float((mask * per_sample).sum() / len(batch)), int(mask.sum())


def clean_set(s_clean: np.ndarray, tau_label: float) -> np.ndarray:
    """Indices whose clean score reaches the clean-label threshold."""
    return np.flatnonzero(np.asarray(s_clean) >= tau_label)


def total_loss(loss_clean: float, loss_unsup: float, n_clean: int, n: int) -> float:
    """eta * L_C + (1 - eta) * L_U with eta = |C| / N."""
    if n_clean > n:
        raise ValueError("clean set cannot exceed the dataset")
    eta = n_clean / n
    return eta * loss_clean + (1.0 - eta) * loss_unsup


def _hedge_everything(w: np.ndarray) -> HedgedSet:
    """No-hedging ablation: every sample labeled by thresholding w at 0.5."""
    labels = np.where(np.asarray(w) >= 0.5, CLEAN, NOISY)
    return HedgedSet(indices=np.arange(len(labels)), labels=labels)


def run_training(ds: NoisyDataset, ds_test: NoisyDataset, net: Mlp, config: LoopConfig,
                 aug: AugmentSpec, epoch_hook=None) -> tuple[Mlp, list[EpochReport]]:
    """Run the full alternating loop on a warmed-up main model.

    `epoch_hook(epoch, dict)` receives per-epoch internals (losses, w,
    scores, hedged set) for flag-gated dumps.
    """
    config.validate()
    init_seed, split_seed, loop_seed = np.random.SeedSequence(config.seed).generate_state(3)
    split_rng = np.random.default_rng(split_seed)
    loop_rng = np.random.default_rng(loop_seed)

    splitter = None
    if config.use_splitnet:
        splitter = build_splitnet(
            ds.class_count, hidden=config.splitnet_hidden, blocks=config.splitnet_blocks,
            batchnorm=config.splitnet_batchnorm, use_delta=config.splitnet_use_delta,
            lr=config.splitnet_lr, weight_decay=config.splitnet_weight_decay,
            seed=init_seed,
        )
    optimizer = SgdMomentum(lr=config.lr, momentum=config.momentum,
                            weight_decay=config.weight_decay)
    history = PredictionHistory.initial(ds.n, ds.class_count)
    noisy_idx = ds.noisy_label_indices
    reports: list[EpochReport] = []

    for epoch in range(config.epochs):
        optimizer.lr = config.lr * (config.lr_decay_factor if epoch >= config.decay_epoch else 1.0)

        # mixture over the normalized loss distribution -> clean posterior
        logp_all = log_softmax(net.forward(ds.features, mode="eval"))
        losses = -logp_all[np.arange(ds.n), noisy_idx]
        normalized = normalize_losses(losses)
        gmm = fit_gmm_1d(normalized, tol=config.gmm_tol, max_iter=config.gmm_max_iter)
        w = clean_posterior(gmm, normalized)
        history.roll(np.exp(logp_all))

        mu, var = hedge_stats(w)
        thresholds = compute_thresholds(mu, var, config.pivot)

        hedged = None
        if config.use_splitnet:
            inputs = build_input(history, ds.noisy_labels, use_delta=config.splitnet_use_delta)
            hedged = (select_hedged_set(w, noisy_idx, thresholds) if config.use_hedging
                      else _hedge_everything(w))
            train_splitnet(splitter, hedged, inputs, config.splitnet_epochs,
                           config.splitnet_batch_size, split_rng)
            # an untrainable hedged set falls back to the previous splitter,
            # or to the raw posterior before any splitter exists
            scores = split_scores(splitter, inputs) if splitter.trained else posterior_scores(w)
        else:
            scores = posterior_scores(w)

        members = clean_set(scores.s_clean, config.tau_label)
        in_clean_set = np.zeros(ds.n, dtype=bool)
        in_clean_set[members] = True
        eta = len(members) / ds.n

        if config.fixed_tau is not None:
            tau_dyn = np.full(ds.n, config.fixed_tau)
        else:
            tau_dyn = dynamic_threshold(scores.confidence, config.beta1, config.beta2)

        mask_count = 0
        pseudo_correct = 0
        pseudo_wrong = 0
        order = loop_rng.permutation(ds.n)
        for start in range(0, ds.n, config.batch_size):
            batch = order[start:start + config.batch_size]
            if len(batch) < 2:
                continue
            q, weak_conf = make_pseudo_labels(net, ds.features[batch], aug, loop_rng)
            mask = weak_conf >= tau_dyn[batch]
            correct, wrong = pseudo_label_counts(q, ds.true_labels[batch], mask)
            mask_count += int(mask.sum())
            pseudo_correct += correct
            pseudo_wrong += wrong

            strong = strong_augment(ds.features[batch], aug, loop_rng)
            clean_rows = batch[in_clean_set[batch]]
            stacked = (np.concatenate([strong, ds.features[clean_rows]], axis=0)
                       if len(clean_rows) else strong)
            net.train()
            probs = softmax(net.forward(stacked))
            dlogits = np.empty_like(probs)
            n_u = len(batch)
            dlogits[:n_u] = (1.0 - eta) * mask[:, None] * (probs[:n_u] - q) / n_u
            if len(clean_rows):
                dlogits[n_u:] = eta * (probs[n_u:] - ds.noisy_labels[clean_rows]) / len(clean_rows)
            optimizer.step(net.parameters(), net.backward(dlogits))
        net.eval()

        test_acc = evaluate_accuracy(net, ds_test)
        gmm_split = split_metrics(w >= 0.5, ds.clean_mask)
        net_split = split_metrics(scores.s_clean >= 0.5, ds.clean_mask)
        reports.append(EpochReport(
            epoch=epoch,
            tau_mu=thresholds.tau_mu,
            tau_nu=thresholds.tau_nu,
            n_clean_set=len(members),
            eta=eta,
            mask_count=mask_count,
            pseudo_correct=pseudo_correct,
            pseudo_wrong=pseudo_wrong,
            split_f1_splitnet=net_split.f1,
            split_f1_gmm=gmm_split.f1,
            split_acc_splitnet=net_split.accuracy,
            split_acc_gmm=gmm_split.accuracy,
            test_acc=test_acc,
        ))
        if epoch_hook is not None:
            epoch_hook(epoch, {
                "losses": losses, "normalized": normalized, "w": w,
                "scores": scores, "hedged": hedged,
            })
    return net, reports


def run_plain_ce(ds: NoisyDataset, ds_test: NoisyDataset, net: Mlp,
                 config: LoopConfig) -> tuple[Mlp, list[EpochReport]]:
    """Baseline: cross-entropy on the observed labels with the same optimizer
    and schedule. Mixture split diagnostics are still logged per epoch."""
    config.validate()
    optimizer = SgdMomentum(lr=config.lr, momentum=config.momentum,
                            weight_decay=config.weight_decay)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).generate_state(3)[2])
    noisy_idx = ds.noisy_label_indices
    reports: list[EpochReport] = []
    from .warmup import ce_epoch

    for epoch in range(config.epochs):
        optimizer.lr = config.lr * (config.lr_decay_factor if epoch >= config.decay_epoch else 1.0)
        ce_epoch(net, ds.features, ds.noisy_labels, config.batch_size, optimizer, rng)

        logp_all = log_softmax(net.forward(ds.features, mode="eval"))
        losses = -logp_all[np.arange(ds.n), noisy_idx]
        normalized = normalize_losses(losses)
        gmm = fit_gmm_1d(normalized, tol=config.gmm_tol, max_iter=config.gmm_max_iter)
        gmm_split = split_metrics(clean_posterior(gmm, normalized) >= 0.5, ds.clean_mask)
        reports.append(EpochReport(
            epoch=epoch, tau_mu=0.0, tau_nu=0.0, n_clean_set=0, eta=0.0,
            mask_count=0, pseudo_correct=0, pseudo_wrong=0,
            split_f1_splitnet=0.0, split_f1_gmm=gmm_split.f1,
            split_acc_splitnet=0.0, split_acc_gmm=gmm_split.accuracy,
            test_acc=evaluate_accuracy(net, ds_test),
        ))
    return net, reports


def evaluate_accuracy(net: Mlp, ds: NoisyDataset) -> float:
    """Fraction of eval-mode argmax predictions matching the true labels."""
    pred = net.forward(ds.features, mode="eval").argmax(axis=1)
    return float((pred == ds.true_label_indices).mean())
