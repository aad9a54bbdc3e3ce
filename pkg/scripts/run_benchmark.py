# Benchmark harness: generates topologies, runs scheduler kind x {none, schedex, incrementer} x rho
# and writes plot-ready records plus grouped summaries.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import argparse
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.config import settings
from app.core.bench_service import display_summary, run_benchmark, summarize, write_records
from app.core.exceptions import SchedulingError
from app.core.logger import console
from app.models.network import Extension, SchedulerKind
from app.models.schemas import DEFAULT_RHOS, DEFAULT_SIZES, BenchConfig


def _csv(cast):
    def parse(text: str):
        try:
            return [cast(item.strip()) for item in text.split(",") if item.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Benchmark SchedEx against the Incrementer over the four baseline schedulers.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--sizes", type=_csv(int), default=list(DEFAULT_SIZES), help="Comma-separated topology sizes.")
    parser.add_argument("--topologies", type=int, default=10, help="Topologies per size.")
    parser.add_argument("--rhos", type=_csv(float), default=list(DEFAULT_RHOS), help="Comma-separated reliability bounds.")
    parser.add_argument(
        "--kinds", type=_csv(SchedulerKind), default=list(SchedulerKind),
        help="Comma-separated scheduler kinds: " + ", ".join(k.value for k in SchedulerKind),
    )
    parser.add_argument(
        "--extensions", type=_csv(Extension), default=list(Extension),
        help="Comma-separated extensions: " + ", ".join(e.value for e in Extension),
    )
    parser.add_argument("--seed", type=int, default=0, help="Master seed of the topology seeds.")
    parser.add_argument(
        "--trials", type=int, default=None,
        help="Monte-Carlo trials per record (0 disables; default depends on the topology size).",
    )
    parser.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format.")
    parser.add_argument("--out", default=None, help="Output path (default: RESULTS_DIR/bench-<seed>.<format>).")
    parser.add_argument("--scenario", default=None, help="Run on this scenario file instead of generating topologies.")
    parser.add_argument("--snr-db", type=float, default=None, help="Reference SNR in dB (60 or 50 in the usual setups).")
    parser.add_argument("--timing-strict", action="store_true", help="Run all cells sequentially for clean timings.")
    parser.add_argument("--workers", type=int, default=1, help="Worker processes (one topology per task).")
    parser.add_argument("--no-summary", action="store_true", help="Skip the summary tables.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Returns 0 iff no record failed, 1 otherwise and 2 on an invalid configuration."""
    args = build_parser().parse_args(argv)
    console.rule("WSN Reliability Scheduling Benchmark")
    try:
        cfg = BenchConfig(
            sizes=args.sizes,
            topologies=args.topologies,
            rhos=args.rhos,
            kinds=args.kinds,
            extensions=args.extensions,
            seed=args.seed,
            trials=args.trials,
            format=args.format,
            out=args.out,
            scenario=args.scenario,
            snr_db=args.snr_db,
            timing_strict=args.timing_strict,
            workers=args.workers,
        )
    except ValidationError as e:
        console.error(f"Invalid benchmark configuration:\n{e}")
        return 2
    console.display_data_as_table(cfg.model_dump(mode="json", exclude_none=True), "Benchmark Configuration")

    try:
        records = run_benchmark(cfg)
    except SchedulingError as e:
        console.display_error_panel(cfg.scenario or "benchmark", str(e))
        return 1

    out = cfg.out or os.path.join(settings.RESULTS_DIR, f"bench-{cfg.seed}.{cfg.format}")
    write_records(records, out, cfg.format)

    if not args.no_summary and any(record.status == "ok" for record in records):
        display_summary(summarize(records))

    failed = [record for record in records if record.status == "failed"]
    console.rule("Benchmark Finished", style="green")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
