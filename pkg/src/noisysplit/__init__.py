"""noisysplit: learnable clean/noisy label splitting with risk-hedged
threshold supervision and dynamic-threshold semi-supervised training, plus an
experiment harness for synthetic noisy-label benchmarks."""

from .config import ExperimentConfig
from .data import (AugmentSpec, CleanDataset, NoiseSpec, NoisyDataset, generate_blobs,
                   inject_noise, strong_augment, weak_augment)
from .gmm import GmmParams, clean_posterior, fit_gmm_1d, normalize_losses, per_sample_losses
from .harness import compare_reports, run_experiment, run_sweep
from .hedging import (CLEAN, NOISY, HedgedSet, ThresholdPair, compute_thresholds, hedge_stats,
                      select_hedged_set)
from .metrics import SplitMetrics, pseudo_label_counts, split_metrics, subset_precision
from .nn import AdamW, Mlp, SgdMomentum, build_mlp, mixup, softmax_cross_entropy
from .splitnet import (PredictionHistory, SplitNetModel, SplitScores, build_input,
                       build_splitnet, posterior_scores, split_scores, train_splitnet)
from .training import (EpochReport, LoopConfig, clean_set, dynamic_threshold,
                       make_pseudo_labels, run_plain_ce, run_training, total_loss,
                       unsupervised_loss)
from .warmup import (FilteredSet, FilterSpec, FoldPlan, cross_filter, kfold_partition,
                     warmup_train)

__version__ = "0.1.0"
