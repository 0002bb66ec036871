"""Command-line entry points: run one experiment, sweep a grid, compare two
report directories, export a generated dataset, or re-render figures for a
finished run. The NOISYSPLIT_OUT environment variable sets the default
output root."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import ExperimentConfig
from .data import NoiseSpec, export_csv, generate_blobs, inject_noise
from .harness import compare_reports, run_experiment, run_sweep

logger = logging.getLogger(__name__)


def default_out_root() -> Path:
    return Path(os.environ.get("NOISYSPLIT_OUT", "runs"))


def _load_config(path: str | None, variant: str | None, seed: int | None,
                 sets: list[str]) -> ExperimentConfig:
    data = json.loads(Path(path).read_text()) if path else {}
    cfg = ExperimentConfig.from_dict(data)
    overrides = {}
    if variant is not None:
        overrides["variant"] = variant
    if seed is not None:
        overrides["seed"] = seed
    for item in sets:
        key, _, raw = item.partition("=")
        if not raw:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        overrides[key] = json.loads(raw) if raw[0] in "[{0123456789-.tfn\"" else raw
    return cfg.override(**overrides) if overrides else cfg


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args.variant, args.seed, args.set or [])
    out = Path(args.out) if args.out else default_out_root() / f"{cfg.variant}_seed{cfg.seed}"
    summary = run_experiment(cfg, out)
    if not args.no_plots:
        from .plots import render_run_figures

        for path in render_run_figures(out):
            logger.info("wrote %s", path)
    print(json.dumps({k: summary[k] for k in
                      ("variant", "seed", "noise_ratio", "best_test_acc", "last_test_acc",
                       "best_split_f1")}, indent=2))
    print(f"report written to {out}")
    return 0


def cmd_sweep(args) -> int:
    base = _load_config(args.config, None, None, args.set or [])
    grid = json.loads(Path(args.grid).read_text())
    out = Path(args.out) if args.out else default_out_root() / "sweep"
    summaries = run_sweep(base, grid, out)
    if not args.no_plots:
        from .plots import render_run_figures

        for summary in summaries:
            name = "_".join(f"{k}={summary['config'][k]}" for k in sorted(grid))
            render_run_figures(out / name)
    print(f"{len(summaries)} runs written under {out}")
    return 0


def cmd_compare(args) -> int:
    deltas, ok = compare_reports(args.dir_a, args.dir_b, tol=args.tol)
    for key, value in deltas.items():
        print(f"{key}: {value:+.6g}")
    if not ok:
        print(f"regression: at least one delta exceeds tolerance {args.tol}", file=sys.stderr)
        return 1
    return 0


def cmd_gen_data(args) -> int:
    spec = json.loads(Path(args.spec).read_text())
    allowed = {"classes", "per_class", "dim", "spread", "noise_kind", "noise_ratio",
               "pair_map", "seed"}
    unknown = sorted(set(spec) - allowed)
    if unknown:
        raise SystemExit(f"unknown dataset spec keys: {', '.join(unknown)}")
    clean = generate_blobs(spec.get("classes", 4), spec.get("per_class", 500),
                           spec.get("dim", 16), spec.get("spread", 0.4),
                           seed=spec.get("seed", 0))
    noise = NoiseSpec(kind=spec.get("noise_kind", "symmetric"),
                      ratio=spec.get("noise_ratio", 0.0),
                      pair_map=spec.get("pair_map"))
    noisy = inject_noise(clean, noise, seed=spec.get("seed", 0))
    out = Path(args.out) if args.out else Path("dataset.csv")
    export_csv(noisy, out, spec=noise, seed=spec.get("seed", 0))
    print(f"wrote {out} and {out.with_suffix('.json')}")
    return 0


def cmd_plot(args) -> int:
    from .plots import render_run_figures

    for path in render_run_figures(args.dir):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisysplit",
                                     description="noisy-label splitting experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment variant")
    p_run.add_argument("--config", help="flat JSON config file (defaults apply if omitted)")
    p_run.add_argument("--variant", choices=("full", "no_splitnet", "no_warmup", "no_hedging",
                                             "fixed_threshold", "plain_ce"))
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config field (repeatable)")
    p_run.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid of experiments")
    p_sweep.add_argument("--config", help="base config file")
    p_sweep.add_argument("--grid", required=True, help='JSON grid, e.g. {"noise_ratio": [0.2, 0.8]}')
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_sweep.add_argument("--no-plots", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="diff two run directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--tol", type=float, default=0.0)
    p_cmp.set_defaults(func=cmd_compare)

    p_gen = sub.add_parser("gen-data", help="export a synthetic noisy dataset as CSV")
    p_gen.add_argument("--spec", required=True, help="JSON dataset spec")
    p_gen.add_argument("--out", help="CSV path (sidecar JSON lands next to it)")
    p_gen.set_defaults(func=cmd_gen_data)

    p_plot = sub.add_parser("plot", help="re-render figures for a run directory")
    p_plot.add_argument("dir")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
