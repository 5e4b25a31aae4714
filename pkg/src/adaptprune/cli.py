"""Command-line interface.

Every command emits machine-readable JSON plus, where a human view exists,
an aligned-text table; the table goes to stderr when JSON occupies stdout so
scripts and eyes never fight over a stream.  Exit codes: 0 success, 2 for
usage, validation, or format problems (one-line diagnostic on stderr), 1 for
anything unexpected.  ADAPTPRUNE_THREADS caps worker parallelism for the
multi-dump commands.
"""

from __future__ import annotations

import argparse
import glob
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import synth
from .analysis import compute_metrics, save_field_figure, save_metrics_figure
from .analysis.aggregate import AttentionAggregate
from .analysis.heatmap import PALETTES, render_heatmap
from .core import PruneConfig, STRATEGIES, select
from .core.select import adaptprune_select
from .errors import DumpFormatError, ValidationError
from .flops import FlopsSpec, baseline_flops, pruned_flops, reduction
from .io import read_dump, write_dump
from .oracle import reference_select

STRATEGY_ALIASES = {"fastv": "fastv_topk", "fitprune": "fitprune_single"}


def _strategy_name(name: str) -> str:
    resolved = STRATEGY_ALIASES.get(name, name)
    if resolved not in STRATEGIES:
        valid = ", ".join(list(STRATEGIES) + sorted(STRATEGY_ALIASES))
        raise ValidationError(f"strategy: unknown strategy {name!r}; valid: {valid}")
    return resolved


def _gaussian_sigma(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"gaussian-sigma: expected a number or 'auto', got {text!r}") from None


def _worker_count(n_jobs: int) -> int:
    cap = os.environ.get("ADAPTPRUNE_THREADS")
    if cap is not None:
        try:
            cap = int(cap)
        except ValueError:
            raise ValidationError(f"ADAPTPRUNE_THREADS: expected an integer, got {cap!r}") from None
        if cap < 1:
            raise ValidationError("ADAPTPRUNE_THREADS: must be >= 1")
        return max(1, min(cap, n_jobs))
    return max(1, min(os.cpu_count() or 1, n_jobs))


def _emit_json(doc, output: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if output:
        Path(output).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)


def _human_stream(output: str | None):
    # the aligned-text view must not corrupt JSON on stdout
    return sys.stdout if output else sys.stderr


def _config_from(args, strategy: str) -> PruneConfig:
    return PruneConfig(
        sigma_d=args.sigma_d,
        sigma_s=args.sigma_s,
        keep_fraction=args.keep,
        gaussian_sigma=_gaussian_sigma(args.gaussian_sigma),
        gaussian_enabled=False if args.no_gaussian else None,
        similarity_enabled=False if args.no_similarity else None,
        strategy=strategy,
        seed=args.seed,
    )


def _run_report(grid, config: PruneConfig, trace: bool = False) -> dict:
    start = time.perf_counter()
    result = select(grid, config, trace=trace)
    wall = time.perf_counter() - start
    metrics = compute_metrics(grid, result.retained)
    cfg = config.resolved()
    report = {
        "strategy": cfg.strategy,
        "config": {
            "keep_fraction": cfg.keep_fraction,
            "sigma_d": cfg.sigma_d,
            "sigma_s": cfg.sigma_s,
            "gaussian_sigma": cfg.gaussian_sigma,
            "gaussian_enabled": cfg.gaussian_enabled,
            "similarity_enabled": cfg.similarity_enabled,
            "cutoff_multiplier": cfg.cutoff_multiplier,
            "strategy": cfg.strategy,
            "seed": cfg.seed,
        },
        "n_tokens": grid.n_tokens,
        "retained": list(result.retained),
        "final_scores": [float(x) for x in result.final_scores],
        "metrics": {
            "dispersion": metrics.dispersion,
            "redundancy": metrics.redundancy,
            "score_mass": metrics.score_mass,
            "position_centroid": list(metrics.position_centroid),
        },
        "wall_time_s": wall,
    }
    if trace and result.trace is not None:
        report["trace"] = [list(entry) for entry in result.trace]
    return report


def cmd_prune(args) -> int:
    grid = read_dump(args.input)
    config = _config_from(args, _strategy_name(args.strategy))
    report = _run_report(grid, config, trace=args.trace)
    _emit_json(report, args.output)
    return 0


_TABLE_COLS = ("strategy", "n_kept", "dispersion", "redundancy", "score_mass")


def _metrics_table(reports: list[dict]) -> str:
    rows = [
        (
            r["strategy"],
            str(len(r["retained"])),
            f"{r['metrics']['dispersion']:.4f}",
            f"{r['metrics']['redundancy']:.4f}",
            f"{r['metrics']['score_mass']:.4f}",
        )
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(_TABLE_COLS)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(_TABLE_COLS))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    strategies = [_strategy_name(s.strip()) for s in args.strategies.split(",") if s.strip()]
    if not strategies:
        raise ValidationError("strategies: empty list")
    grid = read_dump(args.input)
    reports = [_run_report(grid, _config_from(args, s)) for s in strategies]
    _emit_json({"input": args.input, "reports": reports}, args.output)
    _human_stream(args.output).write(_metrics_table(reports))
    if args.figure:
        save_metrics_figure({r["strategy"]: r["metrics"] for r in reports}, args.figure)
    return 0


def cmd_verify(args) -> int:
    if (args.input is None) == (args.random is None):
        raise ValidationError("input: give exactly one of --input or --random")
    if args.random is not None and args.random < 1:
        raise ValidationError("random: must be >= 1")

    cutoff = args.cutoff_multiplier if args.cutoff_multiplier is not None else math.inf
    config = PruneConfig(keep_fraction=args.keep, cutoff_multiplier=cutoff)

    if args.input is not None:
        grids = [read_dump(args.input)]
    else:
        rng = np.random.default_rng(args.seed)
        grids = [synth.make_mixed(rng) for _ in range(args.random)]

    failures = 0
    for i, grid in enumerate(grids):
        fast = adaptprune_select(grid, config)
        ref = reference_select(grid, config)
        if fast.retained == ref.retained:
            print(f"grid {i:03d}: ok n_retained={len(ref.retained)}")
            continue
        failures += 1
        differing = len(set(fast.retained) ^ set(ref.retained)) // 2
        denom = np.maximum(np.maximum(np.abs(fast.final_scores), np.abs(ref.final_scores)), 1e-300)
        rel = float(np.max(np.abs(fast.final_scores - ref.final_scores) / denom))
        print(
            f"grid {i:03d}: MISMATCH differing_indices={differing} "
            f"max_rel_score_diff={rel:.3e}\n  core:   {fast.retained}\n  oracle: {ref.retained}"
        )
    print(f"verify: {len(grids) - failures}/{len(grids)} grids match")
    return 0 if failures == 0 else 1


def cmd_flops(args) -> int:
    spec = FlopsSpec(
        hidden_dim=args.hidden,
        ffn_dim=args.ffn,
        num_layers=args.layers,
        visual_tokens=args.visual_tokens,
        text_tokens=args.text_tokens,
        prune_layer=args.prune_layer,
        keep_fraction=args.keep,
    )
    base = baseline_flops(spec)
    pruned = pruned_flops(spec)
    print(f"baseline_flops  {base}")
    print(f"pruned_flops    {pruned}")
    print(f"reduction       {100.0 * reduction(spec):.2f}%")
    return 0


def cmd_stats(args) -> int:
    paths = sorted(glob.glob(args.inputs))
    if not paths:
        raise ValidationError(f"inputs: no dumps match {args.inputs!r}")

    agg: AttentionAggregate | None = None
    with ThreadPoolExecutor(max_workers=_worker_count(len(paths))) as pool:
        # reads run in parallel; the fold stays in sorted path order
        for grid in pool.map(read_dump, paths):
            if agg is None:
                if grid.n_subimages != 1:
                    raise ValidationError("grid_dims: aggregation requires single-sub-image dumps")
                agg = AttentionAggregate(grid.grid_dims[0])
            agg.add(grid)

    doc = {
        "grid_dims": list(agg.grid_dims),
        "sample_count": agg.sample_count,
        "mean_scores": [[float(v) for v in row] for row in agg.mean_scores],
    }
    _emit_json(doc, args.output)
    if args.render:
        suffix = Path(args.render).suffix.lower()
        if suffix not in (".ppm", ".svg"):
            raise ValidationError(f"render: expected a .ppm or .svg path, got {args.render!r}")
        Path(args.render).write_bytes(render_heatmap(agg.mean_scores, args.palette, suffix[1:]))
    if args.figure:
        save_field_figure(agg.mean_scores, args.figure)
    return 0


def cmd_synth(args) -> int:
    try:
        h_text, w_text = args.grid.lower().split("x")
        h, w = int(h_text), int(w_text)
    except ValueError:
        raise ValidationError(f"grid: expected HxW, got {args.grid!r}") from None
    if h < 1 or w < 1:
        raise ValidationError("grid: dims must be >= 1")
    if args.count < 1:
        raise ValidationError("count: must be >= 1")
    if args.key_dim < 1:
        raise ValidationError("key-dim: must be >= 1")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, grid in enumerate(synth.generate(args.preset, h, w, args.key_dim, args.count, args.seed)):
        write_dump(grid, "binary", outdir / f"{args.preset}_{args.seed}_{i:05d}.atpk")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptprune",
        description="Attention-aware visual token pruning: adaptive NMS engine, "
        "baselines, FLOPs model, and dump tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_prune_knobs(p):
        p.add_argument("--keep", type=float, default=0.1, help="fraction of tokens to retain")
        p.add_argument("--sigma-d", type=float, default=2.0, help="spatial decay bandwidth (patches)")
        p.add_argument("--sigma-s", type=float, default=0.5, help="similarity decay bandwidth")
        p.add_argument("--gaussian-sigma", default="auto", help="correction width, number or 'auto'")
        p.add_argument("--no-gaussian", action="store_true", help="disable the score correction")
        p.add_argument("--no-similarity", action="store_true", help="suppress by distance only")
        p.add_argument("--seed", type=int, default=None, help="RNG seed for randomized strategies")

    p = sub.add_parser("prune", help="prune one dump and write a run report")
    p.add_argument("--input", required=True, help="ATPK or JSON dump")
    add_prune_knobs(p)
    p.add_argument("--strategy", default="adaptprune", help="selection strategy")
    p.add_argument("--output", default=None, help="report path (default: stdout)")
    p.add_argument("--trace", action="store_true", help="include per-iteration suppression trace")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("compare", help="run several strategies on one dump")
    p.add_argument("--input", required=True)
    add_prune_knobs(p)
    p.add_argument("--strategies", default="adaptprune,fastv,random", help="comma-separated names")
    p.add_argument("--output", default=None)
    p.add_argument("--figure", default=None, help="write a metrics bar chart (png)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="differential-test the engine against the reference")
    p.add_argument("--input", default=None, help="verify this dump")
    p.add_argument("--random", type=int, default=None, metavar="N", help="verify N generated grids")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep", type=float, default=0.1)
    p.add_argument("--cutoff-multiplier", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("flops", help="analytic FLOPs reduction for pruning at layer K")
    p.add_argument("--hidden", type=int, default=4096)
    p.add_argument("--ffn", type=int, default=11008)
    p.add_argument("--layers", type=int, default=32)
    p.add_argument("--visual-tokens", type=int, default=576)
    p.add_argument("--text-tokens", type=int, default=0)
    p.add_argument("--prune-layer", type=int, default=3)
    p.add_argument("--keep", type=float, default=0.10)
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("stats", help="aggregate attention over dumps, render heatmaps")
    p.add_argument("--inputs", required=True, help="glob of single-tile dumps")
    p.add_argument("--output", default=None)
    p.add_argument("--render", default=None, help="heatmap path (.ppm or .svg)")
    p.add_argument("--palette", default="viridis", choices=sorted(PALETTES))
    p.add_argument("--figure", default=None, help="write a matplotlib heatmap (png)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate synthetic dumps")
    p.add_argument("--preset", required=True, choices=synth.PRESETS)
    p.add_argument("--grid", default="24x24", help="patch grid as HxW")
    p.add_argument("--key-dim", type=int, default=16)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DumpFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI must never dump a stack trace
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
