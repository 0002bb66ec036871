"""Experiment runner: builds the synthetic benchmark, dispatches the selected
variant end-to-end, and writes epochs.csv / summary.json (plus flag-gated
per-sample dumps) into the output directory. Per-stage seeds derive from the
master seed through a fixed counter scheme, so stages reproduce independently."""

from __future__ import annotations

import itertools
import json
import logging
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .data import (AugmentSpec, NoiseSpec, NoisyDataset, feature_std, generate_blobs,
                   inject_noise)
from .hedging import CLEAN, NOISY
from .metrics import subset_precision
from .nn import Mlp, SgdMomentum, build_mlp
from .training import EpochReport, run_plain_ce, run_training
from .warmup import (FilteredSet, FilterSpec, ce_epoch, cross_filter, kfold_partition,
                     load_filtered, save_filtered, warmup_train)

logger = logging.getLogger(__name__)

EPOCH_COLUMNS = (
    "epoch", "tau_mu", "tau_nu", "n_clean_set", "eta", "mask_count",
    "pseudo_correct", "pseudo_wrong", "split_f1_splitnet", "split_f1_gmm",
    "split_acc_splitnet", "split_acc_gmm", "test_acc",
)

# counter scheme for deriving per-stage seeds from the master seed
_STAGES = ("train_data", "test_data", "noise", "fold", "filter", "warmup", "net_init", "loop")


def stage_seed(master_seed: int, stage: str) -> int:
    return int(np.random.SeedSequence([master_seed, _STAGES.index(stage)]).generate_state(1)[0])


def build_datasets(cfg: ExperimentConfig) -> tuple[NoisyDataset, NoisyDataset]:
    """Train set with injected noise plus an untouched held-out test set drawn
    from the same blob layout."""
    train = generate_blobs(cfg.classes, cfg.per_class, cfg.dim, cfg.spread,
                           seed=stage_seed(cfg.seed, "train_data"))
    test = generate_blobs(cfg.classes, cfg.test_per_class, cfg.dim, cfg.spread,
                          seed=stage_seed(cfg.seed, "test_data"))
    spec = NoiseSpec(kind=cfg.noise_kind, ratio=cfg.noise_ratio,
                     pair_map=None if cfg.pair_map is None else np.asarray(cfg.pair_map))
    noisy_train = inject_noise(train, spec, seed=stage_seed(cfg.seed, "noise"))
    clean_test = inject_noise(test, NoiseSpec(kind="symmetric", ratio=0.0), seed=0)
    return noisy_train, clean_test


def augment_spec(cfg: ExperimentConfig, train: NoisyDataset) -> AugmentSpec:
    return AugmentSpec(weak_sigma=cfg.weak_sigma, strong_sigma=cfg.strong_sigma,
                       mask_fraction=cfg.mask_fraction,
                       feature_std=feature_std(train.features))


def run_filtering(cfg: ExperimentConfig, train: NoisyDataset,
                  cache_path: Path | None = None) -> FilteredSet:
    """K-fold cross-filtering, optionally served from a cached index list."""
    if cfg.use_filter_cache and cache_path is not None and cache_path.exists():
        logger.info("loading filtered set from %s", cache_path)
        return load_filtered(cache_path)
    plan = kfold_partition(train.n, cfg.kfold, seed=stage_seed(cfg.seed, "fold"))
    spec = FilterSpec(hidden=tuple(cfg.hidden), batchnorm=cfg.batchnorm, lr=cfg.lr,
                      momentum=cfg.momentum, weight_decay=cfg.weight_decay,
                      batch_size=cfg.batch_size)
    filtered = cross_filter(train, plan, spec, cfg.tau_label, cfg.filter_epochs,
                            seed=stage_seed(cfg.seed, "filter"))
    if cache_path is not None:
        save_filtered(filtered, cache_path)
    return filtered


def plain_ce_warmup(cfg: ExperimentConfig, net: Mlp, train: NoisyDataset) -> Mlp:
    """Baseline warm-up used by the no_warmup ablation: plain cross-entropy on
    the observed labels."""
    optimizer = SgdMomentum(lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(stage_seed(cfg.seed, "warmup"))
    for _ in range(cfg.plain_warmup_epochs):
        ce_epoch(net, train.features, train.noisy_labels, cfg.batch_size, optimizer, rng)
    return net


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path) -> dict:
    """Execute one configured variant end-to-end and write its report files.
    Returns the summary dict (also written as summary.json)."""
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    train, test = build_datasets(cfg)
    aug = augment_spec(cfg, train)
    net = build_mlp(cfg.dim, tuple(cfg.hidden), cfg.classes,
                    seed=stage_seed(cfg.seed, "net_init"), batchnorm=cfg.batchnorm)

    filtered = None
    if cfg.variant == "plain_ce":
        pass  # no warm-up phase; the baseline is cross-entropy throughout
    elif cfg.variant == "no_warmup":
        plain_ce_warmup(cfg, net, train)
    else:
        filtered = run_filtering(cfg, train, cache_path=out / "filtered.json")
        warmup_train(net, train, filtered, aug, cfg.mixup_alpha, cfg.warmup_epochs,
                     cfg.tau_fixed, seed=stage_seed(cfg.seed, "warmup"), lr=cfg.lr,
                     momentum=cfg.momentum, weight_decay=cfg.weight_decay,
                     batch_size=cfg.batch_size)

    loop_cfg = cfg.loop_config()
    loop_cfg.seed = stage_seed(cfg.seed, "loop")

    dump_rows: list[str] = []
    hook = _per_sample_hook(dump_rows, train) if cfg.dump_per_sample else None

    if cfg.variant == "plain_ce":
        _, reports = run_plain_ce(train, test, net, loop_cfg)
    else:
        _, reports = run_training(train, test, net, loop_cfg, aug, epoch_hook=hook)

    write_epochs_csv(reports, out / "epochs.csv")
    if dump_rows:
        (out / "per_sample.csv").write_text("".join(dump_rows))

    summary = summarize(cfg, reports, train, filtered)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def summarize(cfg: ExperimentConfig, reports: list[EpochReport], train: NoisyDataset,
              filtered: FilteredSet | None) -> dict:
    accs = [r.test_acc for r in reports]
    f1s = [r.split_f1_splitnet for r in reports]
    summary = {
        "variant": cfg.variant,
        "seed": cfg.seed,
        "noise_kind": cfg.noise_kind,
        "noise_ratio": cfg.noise_ratio,
        "epochs": len(reports),
        "best_test_acc": max(accs) if accs else 0.0,
        "last_test_acc": accs[-1] if accs else 0.0,
        "best_split_f1": max(f1s) if f1s else 0.0,
        "last_split_f1": f1s[-1] if f1s else 0.0,
        "filtered_size": 0 if filtered is None else filtered.size,
        "filtered_precision": 0.0 if filtered is None
        else subset_precision(filtered.indices, train.clean_mask),
        "config": {k: v for k, v in cfg.to_dict().items()},
    }
    return summary


def write_epochs_csv(reports: list[EpochReport], path: Path) -> None:
    lines = [",".join(EPOCH_COLUMNS)]
    for r in reports:
        lines.append(",".join(_csv_cell(getattr(r, col)) for col in EPOCH_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def _csv_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def read_epochs_csv(path: str | Path) -> list[EpochReport]:
    lines = Path(path).read_text().strip().splitlines()
    if lines[0] != ",".join(EPOCH_COLUMNS):
        raise ValueError(f"unexpected epochs.csv header in {path}")
    out = []
    for line in lines[1:]:
        cells = line.split(",")
        kwargs = {}
        for col, cell in zip(EPOCH_COLUMNS, cells, strict=True):
            kind = EpochReport.__dataclass_fields__[col].type
            kwargs[col] = int(cell) if kind == "int" else float(cell)
        out.append(EpochReport(**kwargs))
    return out


def _per_sample_hook(rows: list[str], train: NoisyDataset):
    header = "epoch,index,loss,loss_norm,w,s_clean,confidence,hedged_label,clean_true\n"

    def hook(epoch: int, internals: dict) -> None:
        if not rows:
            rows.append(header)
        hedged = internals["hedged"]
        hedge_label = np.full(train.n, "", dtype=object)
        if hedged is not None:
            hedge_label[hedged.indices] = np.where(hedged.labels == CLEAN, "clean", "noisy")
        scores = internals["scores"]
        for i in range(train.n):
            rows.append(
                f"{epoch},{i},{internals['losses'][i]!r},{internals['normalized'][i]!r},"
                f"{internals['w'][i]!r},{scores.s_clean[i]!r},{scores.confidence[i]!r},"
                f"{hedge_label[i]},{int(train.clean_mask[i])}\n"
            )

    return hook


def compare_reports(dir_a: str | Path, dir_b: str | Path, tol: float = 0.0) -> tuple[dict, bool]:
    """Numeric deltas (b - a) between two summary.json files; ok is False when
    any |delta| exceeds the tolerance."""
    summaries = []
    for d in (dir_a, dir_b):
        path = Path(d) / "summary.json"
        if not path.exists():
            raise FileNotFoundError(f"missing {path}")
        summaries.append(json.loads(path.read_text()))
    a, b = summaries
    deltas = {}
    for key in sorted(set(a) & set(b)):
        if isinstance(a[key], (int, float)) and not isinstance(a[key], bool):
            deltas[key] = b[key] - a[key]
    ok = all(abs(v) <= tol for v in deltas.values())
    return deltas, ok


def run_sweep(base: ExperimentConfig, grid: dict[str, list], out_root: str | Path) -> list[dict]:
    """Cartesian product of grid overrides; each point runs in its own
    subdirectory and one row lands in sweep.csv."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    keys = sorted(grid)
    summaries = []
    for values in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, values))
        name = "_".join(f"{k}={v}" for k, v in overrides.items())
        cfg = base.override(**overrides)
        logger.info("sweep point %s", name)
        summaries.append(run_experiment(cfg, out_root / name))
    rows = [",".join(keys + ["best_test_acc", "last_test_acc", "best_split_f1"])]
    for summary in summaries:
        cells = [str(summary["config"][k]) for k in keys]
        cells += [repr(summary["best_test_acc"]), repr(summary["last_test_acc"]),
                  repr(summary["best_split_f1"])]
        rows.append(",".join(cells))
    (out_root / "sweep.csv").write_text("\n".join(rows) + "\n")
    return summaries
