"""
Arguments and helpers shared by the subcommands.
"""
import argparse
import json
from pathlib import Path
from typing import Any, Iterable, List

from src.app.middleware.logging_middleware import LoggingMiddleware
from src.app.services.config_service import PROFILES, load_config
from src.schemas.config import RunConfig


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """``--config``, ``--profile`` and repeated ``--set`` overrides."""
    parser.add_argument("--config", type=Path, help="INI or JSON run config")
    parser.add_argument("--profile", choices=sorted(PROFILES), help="Experiment profile (default from settings)")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="Override a config value; may be repeated",
    )


def run_config(args: argparse.Namespace) -> RunConfig:
    return load_config(args.config, profile=args.profile, overrides=args.overrides)


def parse_int_list(text: str) -> List[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def bind(parser: argparse.ArgumentParser, handler, name: str) -> None:
    parser.set_defaults(handler=LoggingMiddleware(handler, name))


def emit(payload: Any) -> None:
    """Print a result as indented JSON on stdout."""
    print(json.dumps(payload, indent=2, default=str))


def emit_table(rows: Iterable[dict], columns: Iterable[str]) -> None:
    columns = list(columns)
    rows = [[str(row.get(col, "")) for col in columns] for row in rows]
    widths = [max([len(col)] + [len(r[i]) for r in rows]) for i, col in enumerate(columns)]
    print("  ".join(col.ljust(w) for col, w in zip(columns, widths)))
    for r in rows:
        print("  ".join(value.ljust(w) for value, w in zip(r, widths)))
