"""Synthetic noisy-label datasets: Gaussian blob generation, controlled label
corruption with a retained ground-truth mask, and feature-space weak/strong
augmentations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"


@dataclass
class CleanDataset:
    """Labeled feature matrix with one-hot labels over `class_count` classes."""

    features: np.ndarray  # (N, d) float64
    labels: np.ndarray  # (N, r) one-hot float64
    class_count: int
    feature_dim: int

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def label_indices(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1)


@dataclass
class NoiseSpec:
    """Label corruption recipe: symmetric uniform flips or an asymmetric
    class-pair permutation applied to an exact round(ratio*N) subset."""

    kind: str
    ratio: float
    pair_map: np.ndarray | None = None  # asymmetric only; pair_map[c] != c

    def validate(self, class_count: int) -> None:
        if self.kind not in (SYMMETRIC, ASYMMETRIC):
            raise ValueError(f"noise kind must be symmetric or asymmetric, got {self.kind!r}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"noise ratio must lie in [0, 1], got {self.ratio}")
        if self.kind == ASYMMETRIC:
            if class_count < 2:
                raise ValueError("asymmetric noise needs at least 2 classes")
            pm = self.resolved_pair_map(class_count)
            if pm.shape != (class_count,) or np.any(pm == np.arange(class_count)):
                raise ValueError("pair_map must map every class to a different class")

    def resolved_pair_map(self, class_count: int) -> np.ndarray:
        if self.pair_map is not None:
            return np.asarray(self.pair_map, dtype=int)
        # default next-class swap: c -> (c + 1) mod r
        return (np.arange(class_count) + 1) % class_count


@dataclass
class NoisyDataset:
    """Corrupted dataset; `true_labels`/`clean_mask` are for evaluation only."""

    features: np.ndarray
    noisy_labels: np.ndarray  # (N, r) one-hot
    true_labels: np.ndarray  # (N, r) one-hot, evaluation-only
    clean_mask: np.ndarray  # (N,) bool, noisy == true
    class_count: int
    feature_dim: int

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def noisy_label_indices(self) -> np.ndarray:
        return np.argmax(self.noisy_labels, axis=1)

    @property
    def true_label_indices(self) -> np.ndarray:
        return np.argmax(self.true_labels, axis=1)


@dataclass
class AugmentSpec:
    """Feature-space stand-ins for image augmentation: Gaussian jitter scaled
    by per-feature std (weak), plus coordinate masking (strong)."""

    weak_sigma: float = 0.1
    strong_sigma: float = 0.25
    mask_fraction: float = 0.25
    feature_std: np.ndarray | float = field(default=1.0)

    def validate(self) -> None:
        if not 0.0 <= self.weak_sigma <= self.strong_sigma:
            raise ValueError("need 0 <= weak_sigma <= strong_sigma")
        if not 0.0 <= self.mask_fraction < 1.0:
            raise ValueError("mask_fraction must lie in [0, 1)")


def one_hot(indices: np.ndarray, class_count: int) -> np.ndarray:
    out = np.zeros((len(indices), class_count), dtype=np.float64)
    out[np.arange(len(indices)), indices] = 1.0
    return out


def generate_blobs(classes: int, per_class: int, dim: int, spread: float, seed: int) -> CleanDataset:
    """Balanced Gaussian clusters with class means evenly spaced on the unit
    circle in the first two feature dimensions; remaining dimensions carry
    only the isotropic `spread` noise."""
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    if dim < 2:
        raise ValueError(f"need at least 2 feature dimensions, got {dim}")
    if spread <= 0:
        raise ValueError(f"spread must be positive, got {spread}")

    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(classes) / classes
    means = np.zeros((classes, dim))
    means[:, 0] = np.cos(angles)
    means[:, 1] = np.sin(angles)

    label_idx = np.repeat(np.arange(classes), per_class)
    features = means[label_idx] + rng.normal(0.0, spread, size=(classes * per_class, dim))
    return CleanDataset(
        features=features,
        labels=one_hot(label_idx, classes),
        class_count=classes,
        feature_dim=dim,
    )


def inject_noise(ds: CleanDataset, spec: NoiseSpec, seed: int) -> NoisyDataset:
    """Corrupt exactly round(ratio*N) labels, chosen uniformly without
    replacement. Symmetric flips draw a uniformly random *different* class;
    asymmetric flips follow the pair map."""
    spec.validate(ds.class_count)
    rng = np.random.default_rng(seed)
    n = ds.n
    n_flip = int(np.floor(spec.ratio * n + 0.5))

    true_idx = ds.label_indices
    noisy_idx = true_idx.copy()
    flip = rng.choice(n, size=n_flip, replace=False)

    if spec.kind == SYMMETRIC:
        # draw from r-1 classes, then shift past the original class
        draw = rng.integers(0, ds.class_count - 1, size=n_flip)
        noisy_idx[flip] = draw + (draw >= true_idx[flip])
    else:
        pair_map = spec.resolved_pair_map(ds.class_count)
        noisy_idx[flip] = pair_map[true_idx[flip]]

    return NoisyDataset(
        features=ds.features.copy(),
        noisy_labels=one_hot(noisy_idx, ds.class_count),
        true_labels=one_hot(true_idx, ds.class_count),
        clean_mask=noisy_idx == true_idx,
        class_count=ds.class_count,
        feature_dim=ds.feature_dim,
    )


def weak_augment(x: np.ndarray, spec: AugmentSpec, rng: np.random.Generator) -> np.ndarray:
    """Add per-coordinate Gaussian jitter of scale weak_sigma * feature_std."""
    spec.validate()
    return x + rng.standard_normal(x.shape) * (spec.weak_sigma * np.asarray(spec.feature_std))


def strong_augment(x: np.ndarray, spec: AugmentSpec, rng: np.random.Generator) -> np.ndarray:
    """Jitter with strong_sigma, then zero floor(mask_fraction * d) uniformly
    chosen coordinates per sample."""
    spec.validate()
    out = x + rng.standard_normal(x.shape) * (spec.strong_sigma * np.asarray(spec.feature_std))
    d = x.shape[-1]
    k = int(spec.mask_fraction * d)
    if k > 0:
        if out.ndim == 1:
            out[rng.choice(d, size=k, replace=False)] = 0.0
        else:
            # per-row masks: take the k smallest of a random matrix per row
            order = np.argsort(rng.random(out.shape), axis=1)[:, :k]
            np.put_along_axis(out, order, 0.0, axis=1)
    return out


def feature_std(features: np.ndarray) -> np.ndarray:
    """Per-feature population std, floored away from zero for constant columns."""
    return np.maximum(features.std(axis=0), 1e-12)


def export_csv(ds: NoisyDataset, path: str | Path, spec: NoiseSpec | None = None, seed: int | None = None) -> None:
    """Write features plus integer noisy/true labels as CSV, with a JSON
    sidecar (same stem, .json) recording shape and generation parameters."""
    path = Path(path)
    header = [f"f{i}" for i in range(ds.feature_dim)] + ["noisy_label", "true_label"]
    body = np.column_stack(
        [ds.features, ds.noisy_label_indices.astype(float), ds.true_label_indices.astype(float)]
    )
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in body:
            feats = ",".join(repr(v) for v in row[: ds.feature_dim])
            fh.write(f"{feats},{int(row[-2])},{int(row[-1])}\n")
    sidecar = {
        "classes": ds.class_count,
        "dim": ds.feature_dim,
        "n": ds.n,
        "spec": None
        if spec is None
        else {"kind": spec.kind, "ratio": spec.ratio,
              "pair_map": None if spec.pair_map is None else list(map(int, spec.pair_map))},
        "seed": seed,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def import_csv(path: str | Path) -> NoisyDataset:
    """Load a dataset written by export_csv, validating against its sidecar."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    raw = np.loadtxt(path, delimiter=",", skiprows=1)
    raw = np.atleast_2d(raw)
    d, r = meta["dim"], meta["classes"]
    if raw.shape != (meta["n"], d + 2):
        raise ValueError(f"CSV shape {raw.shape} does not match sidecar (n={meta['n']}, dim={d})")
    noisy = raw[:, d].astype(int)
    true = raw[:, d + 1].astype(int)
    return NoisyDataset(
        features=raw[:, :d],
        noisy_labels=one_hot(noisy, r),
        true_labels=one_hot(true, r),
        clean_mask=noisy == true,
        class_count=r,
        feature_dim=d,
    )
