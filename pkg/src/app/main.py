"""
Command-line entry point: ``python -m src.app.main <command> ...``.
"""
import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from src.app.commands import COMMANDS
from src.app.exceptions import EXIT_CONFIG, EXIT_IO, OffsetDiffusionError
from src.app.logging_config import get_logger, setup_logging
from src.settings import settings

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=settings.APP_TITLE, description=settings.APP_DESCRIPTION,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level (default: LOG_LEVEL)")
    parser.add_argument("--log-format", choices=("json", "text"), default=settings.LOG_FORMAT,
                        help="Log record format (default: LOG_FORMAT)")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run the command and map failures to exit codes.

    Returns:
        0 on success, 2 for configuration errors, 3 for numeric failures,
        4 for I/O errors
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_format)

    try:
        return args.handler(args)
    except OffsetDiffusionError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
