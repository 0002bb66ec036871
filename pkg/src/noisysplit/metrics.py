"""Split-quality and pseudo-label correctness metrics. These are the only
operations that may read ground-truth labels or the clean mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SplitMetrics:
    """Confusion counts with clean as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    accuracy: float


def split_metrics(pred_clean: np.ndarray, truth_clean: np.ndarray) -> SplitMetrics:
    """Confusion counts and derived scores; F1 falls back to 0 when
    precision + recall is 0."""
    pred_clean = np.asarray(pred_clean, dtype=bool)
    truth_clean = np.asarray(truth_clean, dtype=bool)
    if pred_clean.shape != truth_clean.shape:
        raise ValueError(f"length mismatch: {pred_clean.shape} vs {truth_clean.shape}")
    tp = int((pred_clean & truth_clean).sum())
    fp = int((pred_clean & ~truth_clean).sum())
    fn = int((~pred_clean & truth_clean).sum())
    tn = int((~pred_clean & ~truth_clean).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(pred_clean) if len(pred_clean) else 0.0
    return SplitMetrics(tp=tp, fp=fp, fn=fn, tn=tn,
                        precision=precision, recall=recall, f1=f1, accuracy=accuracy)


def subset_precision(indices: np.ndarray, truth_clean: np.ndarray) -> float:
    """Fraction of an index set that is actually clean; 0 for an empty set."""
    indices = np.asarray(indices, dtype=int)
    if len(indices) == 0:
        return 0.0
    return float(np.asarray(truth_clean, dtype=bool)[indices].mean())


def pseudo_label_counts(q: np.ndarray, true_labels: np.ndarray, mask: np.ndarray) -> tuple[int, int]:
    """Among mask-passing samples, how many pseudo-labels match the true
    label and how many do not."""
    if len(q) != len(true_labels) or len(q) != len(mask):
        raise ValueError("q, true_labels and mask must be aligned")
    mask = np.asarray(mask, dtype=bool)
    hits = q.argmax(axis=1) == true_labels.argmax(axis=1)
    correct = int((hits & mask).sum())
    return correct, int(mask.sum()) - correct
