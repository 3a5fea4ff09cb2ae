"""
Error hierarchy shared by services and the CLI.

Every error carries the process exit code the CLI reports for it.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class OffsetDiffusionError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = EXIT_NUMERIC


class ConfigError(OffsetDiffusionError):
    """Invalid or inconsistent run configuration."""

    exit_code = EXIT_CONFIG


class UnsupportedCombinationError(ConfigError):
    """A variant / parameterization pairing the math does not allow."""


class ScheduleError(OffsetDiffusionError):
    """Invalid schedule parameters or tables."""


class DegenerateScheduleError(ScheduleError):
    """Schedule whose coefficients divide by zero."""


class ProcessError(OffsetDiffusionError):
    """Forward / reverse process called outside its domain."""


class LossError(OffsetDiffusionError):
    """Malformed training pairs or predictions."""


class DenoiserError(OffsetDiffusionError):
    """Bad network shapes or non-finite network inputs."""


class NumericFailureError(OffsetDiffusionError):
    """Training or sampling could not continue numerically."""


class CheckpointError(OffsetDiffusionError):
    """Missing, truncated or corrupt checkpoint file."""

    exit_code = EXIT_IO


class SampleFileError(OffsetDiffusionError):
    """Sample / dataset CSV that fails validation."""

    exit_code = EXIT_IO


class MetricError(OffsetDiffusionError):
    """Metric inputs that are empty or of mismatched dimension."""
