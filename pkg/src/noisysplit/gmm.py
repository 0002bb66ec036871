"""Per-sample loss extraction and a two-component 1-D Gaussian mixture fit by
EM, producing the per-sample clean probability used for sample selection.

The mixture is fit on min-max normalized losses so the posterior statistics
downstream stay inside [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import NoisyDataset
from .nn import Mlp, log_softmax

VARIANCE_FLOOR = 1e-6


@dataclass
class GmmParams:
    """Two univariate Gaussians; `clean_component` indexes the lower mean."""

    means: np.ndarray  # (2,)
    variances: np.ndarray  # (2,), floored at VARIANCE_FLOOR
    weights: np.ndarray  # (2,), sums to 1
    clean_component: int
    log_likelihoods: list[float] = field(default_factory=list)


def per_sample_losses(net: Mlp, ds: NoisyDataset) -> np.ndarray:
    """Eval-mode cross-entropy of each sample against its observed label,
    computed without augmentation."""
    if ds.feature_dim != net.input_dim:
        raise ValueError(f"dataset width {ds.feature_dim} != network input {net.input_dim}")
    logp = log_softmax(net.forward(ds.features, mode="eval"))
    return -logp[np.arange(ds.n), ds.noisy_label_indices]


def normalize_losses(losses: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; a (near-)constant vector maps to all 0.5."""
    losses = np.asarray(losses, dtype=np.float64)
    if not np.all(np.isfinite(losses)):
        raise ValueError("losses must be finite")
    lo, hi = losses.min(), losses.max()
    if hi - lo < 1e-9:
        return np.full_like(losses, 0.5)
    return (losses - lo) / (hi - lo)


def _log_gaussian(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def _responsibilities(values: np.ndarray, means, variances, weights):
    logp = np.stack(
        [np.log(weights[k]) + _log_gaussian(values, means[k], variances[k]) for k in (0, 1)],
        axis=1,
    )
    norm = np.logaddexp(logp[:, 0], logp[:, 1])
    return np.exp(logp - norm[:, None]), norm.sum()


def fit_gmm_1d(values: np.ndarray, tol: float = 1e-6, max_iter: int = 200,
               seed: int | None = None) -> GmmParams:
    """EM for a 2-component mixture on scalars in [0, 1].

    Initialization is deterministic (10th/90th percentile means, equal
    weights, pooled sample variance); `seed` is accepted for interface
    stability but unused. Stops when the log-likelihood gain drops below
    `tol`. Raises if the likelihood ever decreases beyond float slack.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ValueError("GMM fit needs at least 2 values")

    means = np.array([np.percentile(values, 10), np.percentile(values, 90)])
    variances = np.full(2, max(values.var(), VARIANCE_FLOOR))
    weights = np.array([0.5, 0.5])

    lls: list[float] = []
    for _ in range(max_iter):
        resp, ll = _responsibilities(values, means, variances, weights)
        if lls and ll < lls[-1] - 1e-9:
            raise RuntimeError(f"EM log-likelihood decreased: {lls[-1]} -> {ll}")
        done = bool(lls) and ll - lls[-1] < tol
        lls.append(float(ll))
        if done:
            break
        mass = resp.sum(axis=0)
        weights = mass / values.size
        means = (resp * values[:, None]).sum(axis=0) / mass
        variances = np.maximum(
            (resp * (values[:, None] - means) ** 2).sum(axis=0) / mass, VARIANCE_FLOOR
        )

    return GmmParams(
        means=means,
        variances=variances,
        weights=weights,
        clean_component=int(np.argmin(means)),
        log_likelihoods=lls,
    )


def clean_posterior(gmm: GmmParams, values: np.ndarray) -> np.ndarray:
    """Posterior responsibility of the clean (lower-mean) component at each value."""
    resp, _ = _responsibilities(np.asarray(values, dtype=np.float64),
                                gmm.means, gmm.variances, gmm.weights)
    return np.clip(resp[:, gmm.clean_component], 0.0, 1.0)
