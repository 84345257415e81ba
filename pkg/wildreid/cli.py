"""
CLI entry point: wildreid synth | ingest | split | extract | verify | predict | score | report | compare | run | presets | config
argparse-based. Exit codes: 0 ok, 1 invalid input or config, 2 stage failure, 130 interrupted.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from wildreid import __version__
from wildreid.core.errors import StageError, ValidationError, WildReidError
from wildreid.utils.output import print_banner, print_error, print_status, print_table

PIPELINE_COMMANDS = ("split", "extract", "verify", "predict", "score", "report")
_STAGE_OF = {"split": "splits"}


def _load_config(args):
    from wildreid.config import PipelineConfig, preset_path

    path = preset_path(args.preset) if getattr(args, "preset", None) else getattr(args, "config", None)
    cfg = PipelineConfig.load(path)
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "log_level", None):
        cfg.log_level = args.log_level
    cfg.apply_overrides(getattr(args, "set", None) or [])
    return cfg


def _print_result(res) -> None:
    from wildreid.evaluation.reports import CLOSED_COLUMNS, COMPARISON_COLUMNS, OPEN_COLUMNS

    if res.closed:
        print_table(CLOSED_COLUMNS, [r.row() for r in res.closed], "Closed set")
    if res.open:
        print_table(OPEN_COLUMNS, [r.row() for r in res.open], "Open set")
    if res.comparisons:
        print_table(COMPARISON_COLUMNS, [s.row() for s in res.comparisons], "Random vs time-aware")
    if res.curve is not None:
        rows = [[b.name, b.n_pairs, b.n_accepted, "NA" if b.proportion is None else f"{100 * b.proportion:.1f}"]
                for b in res.curve.buckets]
        print_table(["gap", "pairs", "accepted", "percent"], rows, "Same-individual match rate by time gap")


def cmd_run(args) -> None:
    from wildreid.main import run_pipeline

    cfg = _load_config(args)
    print_banner(__version__, cfg.out_dir)
    until = _STAGE_OF.get(args.command, args.command) if args.command in PIPELINE_COMMANDS else "report"
    # stage subcommands pick up where an earlier invocation with the same config stopped
    res = run_pipeline(cfg, until, resume=args.command in PIPELINE_COMMANDS)
    _print_result(res)
    if res.loaded:
        print_status(f"read from disk: {', '.join(res.loaded)}")
    print_status(f"stages: {', '.join(res.stages)}; output in {res.out_dir}")


def cmd_synth(args) -> None:
    from wildreid.core.pool import WorkerPool
    from wildreid.synth.generator import generate_dataset

    cfg = _load_config(args)
    if args.master_seed is not None:
        cfg.synth.master_seed = args.master_seed
    catalog = generate_dataset(cfg.synth, args.out_dir, WorkerPool(cfg.workers))
    print_status(f"{len(catalog)} images of {len(catalog.individuals)} individuals → {args.out_dir}")


def cmd_ingest(args) -> None:
    from wildreid.catalog import compute_stats, ingest_manifest, write_manifest
    from wildreid.config import as_date

    span = None
    if args.span_start or args.span_end:
        span = (as_date(args.span_start, "--span-start"), as_date(args.span_end, "--span-end"))
    catalog = ingest_manifest(args.manifest, span)
    stats = compute_stats(catalog)
    print_table(["n_image", "n_indiv", "n_enc", "span_days", "timestamp_coverage"],
                [[stats.n_image, stats.n_indiv, stats.n_enc, stats.span_days,
                  f"{100 * stats.timestamp_coverage:.1f}%"]], "Catalog")
    if args.write:
        write_manifest(catalog, args.write)
        print_status(f"normalized manifest → {args.write}")


def cmd_compare(args) -> None:
    from wildreid.evaluation import compare_splits, read_closed_reports, read_open_reports
    from wildreid.evaluation.reports import COMPARISON_COLUMNS

    rep = Path(args.reports)
    reports = {**read_closed_reports(rep / "closed_set.csv"), **read_open_reports(rep / "open_set.csv")}
    missing = [n for n in (args.split_a, args.split_b) if n not in reports]
    if missing:
        raise ValidationError(f"no report rows for {', '.join(missing)} in {rep}")
    summary = compare_splits(reports[args.split_a], reports[args.split_b])
    print_table(COMPARISON_COLUMNS, [summary.row()], "Comparison")


def cmd_presets(args) -> None:
    from wildreid.config import PipelineConfig, list_presets

    presets = list_presets()
    print("\nAvailable presets:")
    print("=" * 60)
    for p in presets:
        desc = PipelineConfig.load(p).description
        print(f"  wildreid run --preset {p.stem}")
        if desc:
            print(f"      {desc}")
    if not presets:
        print("  (none)")
    print()


def cmd_config(args) -> None:
    cfg = _load_config(args)
    print(f"# source: {cfg.source or 'defaults'}")
    print(cfg.dump(), end="")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", "-c", help="YAML config file (default: packaged config.yaml)")
    src.add_argument("--preset", "-p", help="Named preset from presets/")
    p.add_argument("--out", "-o", help="Output directory")
    p.add_argument("--workers", "-w", type=int, help="Worker processes (0 = one per physical core)")
    p.add_argument("--seed", type=int, help="Seed for random_matched splits")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="Override any config key, e.g. --set verify.top_k=12 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wildreid",
        description=f"wildreid {__version__} — time-aware evaluation of photo re-identification",
    )
    parser.add_argument("--version", action="version", version=f"wildreid {__version__}")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="Run the whole pipeline")
    _add_config_args(p_run)

    for name, help_text in (
        ("split", "Build, validate and write splits"),
        ("extract", "Extract features, reusing the catalog and splits on disk"),
        ("verify", "Verify pairs, reusing the catalog and splits on disk"),
        ("predict", "Propagate identities from the decisions on disk"),
        ("score", "Score predictions built from the decisions on disk"),
        ("report", "Write reports from the decisions on disk"),
    ):
        _add_config_args(sub.add_parser(name, help=help_text))

    p_synth = sub.add_parser("synth", help="Generate a synthetic encounter dataset")
    p_synth.add_argument("out_dir", help="Directory for images/, manifest.csv and synth-meta.json")
    p_synth.add_argument("--master-seed", type=int)
    _add_config_args(p_synth)

    p_ingest = sub.add_parser("ingest", help="Validate a manifest and print dataset statistics")
    p_ingest.add_argument("manifest")
    p_ingest.add_argument("--span-start")
    p_ingest.add_argument("--span-end")
    p_ingest.add_argument("--write", help="Write the normalized manifest here")

    p_cmp = sub.add_parser("compare", help="Compare two splits from an existing report directory")
    p_cmp.add_argument("split_a", help="e.g. the random split")
    p_cmp.add_argument("split_b", help="e.g. the time-aware split")
    p_cmp.add_argument("--reports", "-r", default="runs/default/reports", help="Report directory")

    p_pre = sub.add_parser("presets", help="List ready-made configs")
    p_pre.add_argument("--list", "-l", action="store_true", help="List presets (default)")

    p_cfg = sub.add_parser("config", help="Show the effective configuration")
    _add_config_args(p_cfg)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    dispatch = {
        "run":     cmd_run,
        "synth":   cmd_synth,
        "ingest":  cmd_ingest,
        "compare": cmd_compare,
        "presets": cmd_presets,
        "config":  cmd_config,
        **{name: cmd_run for name in PIPELINE_COMMANDS},
    }

    if args.command not in dispatch:
        parser.print_help()
        return 1
    try:
        dispatch[args.command](args)
    except KeyboardInterrupt:
        print("\nInterrupted.")
        return 130
    except ValidationError as exc:
        print_error(str(exc))
        return 1
    except StageError as exc:
        print_error(str(exc))
        return 2
    except WildReidError as exc:
        print_error(str(exc))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
