"""
``schedule``: dump the coefficient tables as CSV.
"""
import argparse
import csv
import sys
from pathlib import Path

from src.app.commands.common import add_config_arguments, bind, run_config
from src.app.exceptions import EXIT_OK
from src.app.services.schedule import SCHEDULE_COLUMNS, build_tables, schedule_rows


def handle(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    tables = build_tables(cfg.schedule, sigma0=cfg.model.sigma0)
    rows = schedule_rows(tables)

    if args.out is None:
        writer = csv.DictWriter(sys.stdout, fieldnames=list(SCHEDULE_COLUMNS))
        writer.writeheader()
        writer.writerows(rows)
        return EXIT_OK

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(SCHEDULE_COLUMNS))
        writer.writeheader()
        writer.writerows(rows)
    print(args.out)
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("schedule", help="Write schedule coefficient tables as CSV")
    add_config_arguments(parser)
    parser.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    bind(parser, handle, "schedule")
