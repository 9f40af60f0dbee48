"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigInvalid, SynthMetricError
from .pipeline import (
    default_config,
    dump_json,
    ingest_external_synthetic,
    build_report,
    load_config,
    refit_weights,
    resolve_seed,
    run_pipeline,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("synthmetric")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthmetric", description="Benchmark synthetic tabular data fidelity against utility."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full benchmark pipeline")
    run.add_argument("--config", type=Path, help="JSON run config (default: builtin 10x5 benchmark)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", type=Path, help="override the config out_dir")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (output is identical)")

    ingest = sub.add_parser("ingest", help="benchmark an external synthetic CSV inside a run")
    ingest.add_argument("--run", type=Path, required=True, help="existing run directory")
    ingest.add_argument("--real", required=True, help="dataset id from the run config")
    ingest.add_argument("--syn", type=Path, required=True, help="synthetic CSV")
    ingest.add_argument("--as", dest="generator_id", required=True, help="generator id to file it under")

    report = sub.add_parser("report", help="recompute analysis and figures from persisted runs")
    report.add_argument("--run", type=Path, required=True)

    fit = sub.add_parser("fit-weights", help="refit Super-Metric weights for one dataset")
    fit.add_argument("--run", type=Path, required=True)
    fit.add_argument("--dataset", required=True)
    fit.add_argument("--lambda", dest="lambda_gap", type=float, help="recall/F1 gap penalty")
    return parser


def _run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config) if args.config else default_config()
    cfg = resolve_seed(cfg, args.seed)
    if args.out is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "out_dir": str(args.out)})
    if args.jobs < 1:
        raise ConfigInvalid("--jobs must be >= 1")
    root = run_pipeline(cfg, jobs=args.jobs)
    print(root)
    return EXIT_OK


def _ingest(args: argparse.Namespace) -> int:
    records = ingest_external_synthetic(args.run, args.real, args.syn, args.generator_id)
    print(f"ingested {len(records)} fold records for {args.generator_id!r} on {args.real!r}")
    return EXIT_OK


def _report(args: argparse.Namespace) -> int:
    fits = build_report(args.run)
    for did, fit in fits.items():
        print(f"{did}: J={fit.objective:.4f} rho_recall={fit.corr_recall:.4f} rho_f1={fit.corr_f1:.4f}")
    return EXIT_OK


def _fit_weights(args: argparse.Namespace) -> int:
    result = refit_weights(args.run, args.dataset, args.lambda_gap)
    sys.stdout.write(dump_json(result.to_dict()))
    return EXIT_OK


COMMANDS = {"run": _run, "ingest": _ingest, "report": _report, "fit-weights": _fit_weights}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SynthMetricError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
