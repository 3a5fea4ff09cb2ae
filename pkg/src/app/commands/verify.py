"""
``verify``: run the independent derivation checks.
"""
import argparse
from pathlib import Path

from src.app.commands.common import bind, emit_table
from src.app.exceptions import EXIT_NUMERIC, EXIT_OK
from src.app.oracles.runner import run_verification, write_report
from src.settings import settings


def handle(args: argparse.Namespace) -> int:
    reports = run_verification(seed=args.seed, draws=args.draws)
    out = args.out or Path(settings.RUNS_DIR) / "verify_report.json"
    write_report(reports, out)

    emit_table(
        [
            {
                "check": r.check,
                "status": r.status.value,
                "error": f"{r.error:.3e}",
                "tolerance": f"{r.tolerance:.1e}",
                "samples": r.samples,
                "seed": r.seed,
            }
            for r in reports
        ],
        ("check", "status", "error", "tolerance", "samples", "seed"),
    )
    print(f"report: {out}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_NUMERIC


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="Run the oracle checks and write a JSON report")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--draws", type=int, default=100_000, help="Monte Carlo draws for the moment checks")
    parser.add_argument("--out", type=Path, help="Report path (default: RUNS_DIR/verify_report.json)")
    bind(parser, handle, "verify")
