"""Flat JSON experiment configuration. Every run is described by one
document; CLI flags override file values; unknown keys are rejected so typos
fail loudly."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .training import LoopConfig

VARIANTS = ("full", "no_splitnet", "no_warmup", "no_hedging", "fixed_threshold", "plain_ce")


@dataclass
class ExperimentConfig:
    # dataset
    classes: int = 4
    per_class: int = 500
    test_per_class: int = 250
    dim: int = 16
    spread: float = 0.4
    # noise
    noise_kind: str = "symmetric"
    noise_ratio: float = 0.5
    pair_map: list[int] | None = None  # asymmetric only; default is next-class
    # augmentation
    weak_sigma: float = 0.1
    strong_sigma: float = 0.3
    mask_fraction: float = 0.25
    # main / filtering network
    hidden: list[int] = dataclasses.field(default_factory=lambda: [128, 128])
    batchnorm: bool = True
    # warm-up
    kfold: int = 8
    filter_epochs: int = 20
    warmup_epochs: int = 10
    plain_warmup_epochs: int = 10
    mixup_alpha: float = 4.0
    tau_fixed: float = 0.95
    use_filter_cache: bool = False
    # main loop
    epochs: int = 50
    batch_size: int = 128
    lr: float = 0.02
    lr_decay_factor: float = 0.1
    lr_decay_epoch: int | None = None
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
    # experiment
    variant: str = "full"
    fixed_tau: float = 0.95  # used only by the fixed_threshold variant
    seed: int = 0
    dump_per_sample: bool = False

    def validate(self) -> None:
        checks = [
            (self.classes >= 2, "classes", "must be >= 2"),
            (self.per_class >= 1, "per_class", "must be >= 1"),
            (self.test_per_class >= 1, "test_per_class", "must be >= 1"),
            (self.dim >= 2, "dim", "must be >= 2"),
            (self.spread > 0, "spread", "must be positive"),
            (self.noise_kind in ("symmetric", "asymmetric"), "noise_kind",
             "must be 'symmetric' or 'asymmetric'"),
            (0.0 <= self.noise_ratio <= 1.0, "noise_ratio", "must lie in [0, 1]"),
            (0.0 <= self.weak_sigma <= self.strong_sigma, "weak_sigma",
             "needs 0 <= weak_sigma <= strong_sigma"),
            (0.0 <= self.mask_fraction < 1.0, "mask_fraction", "must lie in [0, 1)"),
            (len(self.hidden) >= 1 and all(h >= 1 for h in self.hidden), "hidden",
             "must be a non-empty list of positive widths"),
            (self.kfold >= 2, "kfold", "must be >= 2"),
            (self.variant in VARIANTS, "variant", f"must be one of {', '.join(VARIANTS)}"),
            (0.0 < self.fixed_tau <= 1.0, "fixed_tau", "must lie in (0, 1]"),
        ]
        for ok, fieldname, message in checks:
            if not ok:
                raise ValueError(f"config.{fieldname}: {message} "
                                 f"(got {getattr(self, fieldname)!r})")
        self.loop_config().validate()

    def loop_config(self) -> LoopConfig:
        """Main-loop settings with variant semantics applied."""
        return LoopConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            lr_decay_factor=self.lr_decay_factor,
            lr_decay_epoch=self.lr_decay_epoch,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            beta1=self.beta1,
            beta2=self.beta2,
            tau_label=self.tau_label,
            pivot=self.pivot,
            splitnet_hidden=self.splitnet_hidden,
            splitnet_blocks=self.splitnet_blocks,
            splitnet_batchnorm=self.splitnet_batchnorm,
            splitnet_use_delta=self.splitnet_use_delta,
            splitnet_epochs=self.splitnet_epochs,
            splitnet_batch_size=self.splitnet_batch_size,
            splitnet_lr=self.splitnet_lr,
            splitnet_weight_decay=self.splitnet_weight_decay,
            gmm_tol=self.gmm_tol,
            gmm_max_iter=self.gmm_max_iter,
            use_splitnet=self.variant != "no_splitnet",
            use_hedging=self.variant != "no_hedging",
            fixed_tau=self.fixed_tau if self.variant == "fixed_threshold" else None,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def override(self, **updates) -> "ExperimentConfig":
        """New config with the given fields replaced (validated)."""
        cfg = dataclasses.replace(self, **updates)
        cfg.validate()
        return cfg
