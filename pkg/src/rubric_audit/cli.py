"""Command-line entry point: ``rubric-audit <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import AnnotationInterrupted, ConsistencyError, ConsoleChannel
from .experiment import (
    EmptyRunError,
    ExperimentConfig,
    MissingArtifactError,
    build_report,
    gen_rubrics,
    run_alignment,
    run_all,
    run_annotation,
    run_grading,
    run_stats,
)
from .gateway import CacheIntegrityError
from .items import ItemParseError, ItemValidationError
from .prompts import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_INTEGRITY = 4
EXIT_MISSING = 5

log = logging.getLogger("rubric_audit")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--items", help="item file")
    p.add_argument("--backend", help="mock:<fixture.json>, sim, or an http(s) base URL")
    p.add_argument("--cache", help="response cache (JSON lines)")
    p.add_argument("--seed", type=int)
    p.add_argument("--settings", help="comma-separated setting names")
    p.add_argument("--n", type=int, help="responses sampled per item")
    p.add_argument("--out", help="run directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rubric-audit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("gen-rubrics", "obtain a rubric per item and setting"),
        ("align", "score rubrics against the human rules"),
        ("grade", "grade the sampled responses with each setting's rubric"),
        ("stats", "Spearman and t-tests over the stored summaries"),
        ("report", "render the markdown and JSON reports"),
        ("run", "gen-rubrics, align, grade, stats and report in order"),
    ]:
        _common(sub.add_parser(name, help=help_))
    stats = sub.choices["stats"]
    stats.add_argument("--ttest", action="append", metavar="A:B", help="setting pair to t-test on F1")
    stats.add_argument("--unpaired", action="store_true", help="pooled-variance t-test instead of paired")

    ann = sub.add_parser("annotate", help="label the causes of incorrect generated rules")
    _common(ann)
    ann.add_argument("--setting", required=True, dest="annotate_setting")
    ann.add_argument("--annotator", default="annotator")
    ann.add_argument("--only-items", help="comma-separated item ids")
    ann.add_argument(
        "--reference-setting",
        help="keep only items for which this setting produced no incorrect rule",
    )
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {
        "items": args.items,
        "backend": args.backend,
        "cache": args.cache,
        "seed": args.seed,
        "n": args.n,
        "out": args.out,
        "settings": args.settings.split(",") if args.settings else None,
    }
    if getattr(args, "ttest", None):
        overrides["ttests"] = [pair.split(":", 1) for pair in args.ttest]
    if getattr(args, "unpaired", False):
        overrides["unpaired"] = True
    return cfg.with_overrides(**overrides)


def _run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    failures = []
    if args.command == "gen-rubrics":
        failures = gen_rubrics(cfg).failures
    elif args.command == "align":
        run_alignment(cfg)
    elif args.command == "grade":
        failures = run_grading(cfg).failures
    elif args.command == "stats":
        doc = run_stats(cfg)
        sp = doc["spearman"]
        print(f"spearman rho={sp['rho']:.4f} p={sp['p_value']:.4g} n={sp['n']}")
    elif args.command == "report":
        build_report(cfg)
        print((cfg.out.rstrip("/") + "/report/report.md"))
    elif args.command == "run":
        failures = run_all(cfg)
    elif args.command == "annotate":
        only = args.only_items.split(",") if args.only_items else None
        try:
            done = run_annotation(
                cfg, args.annotate_setting, ConsoleChannel(),
                annotator=args.annotator, only_items=only,
                reference_setting=args.reference_setting,
            )
        except AnnotationInterrupted as exc:
            print(f"\n{exc}; progress saved, rerun to resume", file=sys.stderr)
            return EXIT_PARTIAL
        print(f"{len(done)} rules annotated")
    for f in failures:
        print(f"failed: {f['item']} / {f['setting']}: {f['error']}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return _run(args)
    except (CacheIntegrityError, ConsistencyError) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (MissingArtifactError, EmptyRunError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ConfigurationError, ItemParseError, ItemValidationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
