"""Risk hedging: clean/noisy selection thresholds computed from the mean and
variance of the clean-probability distribution, and the confident subset they
admit.

With w in [0,1]^N the variance is at most 1/4 (two-point extremal vectors
achieve it), so P = 1 - 4*var lies in [0,1]. Around a pivot z the thresholds

    tau_mu = z + (1-z) * (1-mu) * P        in [z, 1]
    tau_nu = z * (1 - mu * P)              in [0, z]

tighten toward z as the posterior spreads out (var up, P down) and drop as
the dataset looks cleaner overall (mu up), admitting more samples as clean.
tau_mu resolves the imaginary-unit shorthand x^F = (1-x)j, j^2 = -1: the
product of two F-marked factors contributes -(1-z)(1-mu), flipping the sign
of the subtracted term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CLEAN = 0
NOISY = 1

VAR_SLACK = 1e-12


@dataclass
class ThresholdPair:
    tau_mu: float
    tau_nu: float
    pivot: float
    mean: float
    variance: float


@dataclass
class HedgedSet:
    """Indices confidently labeled clean/noisy; supervision for the splitter."""

    indices: np.ndarray  # (M,) int
    labels: np.ndarray  # (M,) int, CLEAN or NOISY

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def n_clean(self) -> int:
        return int((self.labels == CLEAN).sum())

    @property
    def n_noisy(self) -> int:
        return int((self.labels == NOISY).sum())


def hedge_stats(w: np.ndarray) -> tuple[float, float]:
    """Population mean and variance (divide by N) of the clean probabilities."""
    w = np.asarray(w, dtype=np.float64)
    if w.size == 0:
        raise ValueError("cannot take statistics of an empty posterior")
    return float(w.mean()), float(w.var())


def compute_thresholds(mean: float, variance: float, pivot: float) -> ThresholdPair:
    if not 0.0 <= mean <= 1.0:
        raise ValueError(f"mean must lie in [0, 1], got {mean}")
    if not 0.0 < pivot < 1.0:
        raise ValueError(f"pivot must lie in (0, 1), got {pivot}")
    if variance < 0.0 or variance > 0.25 + VAR_SLACK:
        raise ValueError(f"variance {variance} outside [0, 1/4] admitted by w in [0,1]")
    variance = min(variance, 0.25)

    p = 1.0 - 4.0 * variance
    tau_mu = pivot + (1.0 - pivot) * (1.0 - mean) * p
    tau_nu = pivot * (1.0 - mean * p)
    return ThresholdPair(tau_mu=tau_mu, tau_nu=tau_nu, pivot=pivot, mean=mean, variance=variance)


def select_hedged_set(w: np.ndarray, noisy_labels: np.ndarray, thresholds: ThresholdPair) -> HedgedSet:
    """CLEAN where w >= tau_mu, NOISY where w <= tau_nu, everything else
    excluded. A sample sitting exactly on coincident thresholds is CLEAN
    (>= wins the tie)."""
    w = np.asarray(w, dtype=np.float64)
    if len(w) != len(noisy_labels):
        raise ValueError("posterior and label lengths differ")
    clean = w >= thresholds.tau_mu
    noisy = (w <= thresholds.tau_nu) & ~clean
    indices = np.concatenate([np.flatnonzero(clean), np.flatnonzero(noisy)])
    labels = np.concatenate([
        np.full(int(clean.sum()), CLEAN, dtype=int),
        np.full(int(noisy.sum()), NOISY, dtype=int),
    ])
    order = np.argsort(indices, kind="stable")
    return HedgedSet(indices=indices[order], labels=labels[order])
