"""
Logging middleware for CLI command execution.
"""
import argparse
import time
import uuid
from typing import Callable

from src.app.logging_config import get_logger

logger = get_logger(__name__)

Command = Callable[[argparse.Namespace], int]


class LoggingMiddleware:
    """
    Wraps a command handler to log its start, completion and failure.
    Adds a run_id to the namespace for traceability.
    """

    def __init__(self, handler: Command, name: str):
        self.handler = handler
        self.name = name

    def __call__(self, args: argparse.Namespace) -> int:
        """
        Run the wrapped command and log details.

        Args:
            args: Parsed command-line arguments

        Returns:
            The command's exit code
        """
        run_id = str(uuid.uuid4())
        args.run_id = run_id
        start_time = time.time()

        logger.info(
            "Command started",
            extra={"run_id": run_id, "command": self.name},
        )

        try:
            exit_code = self.handler(args)
            duration_ms = (time.time() - start_time) * 1000

            logger.info(
                "Command completed",
                extra={
                    "run_id": run_id,
                    "command": self.name,
                    "exit_code": exit_code,
                    "duration_ms": round(duration_ms, 2),
                },
            )
            return exit_code

        except Exception as e:
            duration_ms = (time.time() - start_time) * 1000

            logger.error(
                "Command failed",
                extra={
                    "run_id": run_id,
                    "command": self.name,
                    "error": str(e),
                    "error_type": type(e).__name__,
                    "duration_ms": round(duration_ms, 2),
                },
                exc_info=True,
            )

            raise
