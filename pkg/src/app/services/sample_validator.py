"""
Sample CSV file validation service.
"""
import csv
import io
import hashlib
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from src.app.exceptions import SampleFileError
from src.app.logging_config import get_logger

logger = get_logger(__name__)

# 2 GB; a 5000 x 200 float file at 17 significant digits is ~20 MB
MAX_FILE_SIZE = 2 * 1024 * 1024 * 1024

COLUMN_PREFIX = "x"


def column_names(n: int) -> List[str]:
    """Header for an n-dimensional sample file: x1..xn."""
    return [f"{COLUMN_PREFIX}{i}" for i in range(1, n + 1)]


class SampleCSVValidator:
    """Service for validating sample and dataset CSV files."""

    @staticmethod
    def validate_file_size(file_size: int) -> None:
        """
        Validate that file size is within limits.

        Args:
            file_size: File size in bytes

        Raises:
            SampleFileError: If file is empty or too large
        """
        if file_size > MAX_FILE_SIZE:
            raise SampleFileError(
                f"File size ({file_size / 1024 / 1024:.2f}MB) exceeds maximum allowed size "
                f"({MAX_FILE_SIZE / 1024 / 1024:.0f}MB)"
            )
        if file_size == 0:
            raise SampleFileError("File is empty")

    @staticmethod
    def validate_file_format(filename: str) -> None:
        """
        Validate that file has a CSV extension.

        Raises:
            SampleFileError: If file format is invalid
        """
        if not str(filename).lower().endswith(".csv"):
            raise SampleFileError(f"{filename}: sample files must have a .csv extension")

    @staticmethod
    def validate_header(header: List[str], expected_dim: Optional[int] = None) -> int:
        """
        Check the header is exactly x1..xn.

        Args:
            header: Parsed header row
            expected_dim: Required n, if known

        Returns:
            The dimension n

        Raises:
            SampleFileError: On malformed headers or a dimension mismatch
        """
        cleaned = [h.strip() for h in header]
        n = len(cleaned)
        if n == 0:
            raise SampleFileError("sample file has an empty header row")
        if cleaned != column_names(n):
            raise SampleFileError(
                f"sample file header must be {', '.join(column_names(min(n, 3)))}...; "
                f"found {', '.join(cleaned[:3])}..."
            )
        if expected_dim is not None and n != expected_dim:
            raise SampleFileError(f"sample file has {n} columns, expected {expected_dim}")
        return n

    @staticmethod
    def validate_csv_content(file_content: bytes, expected_dim: Optional[int] = None) -> Tuple[np.ndarray, str]:
        """
        Parse and validate CSV content.

        Args:
            file_content: CSV file content as bytes
            expected_dim: Required column count, if known

        Returns:
            Tuple of (data matrix, file_hash)

        Raises:
            SampleFileError: If the CSV is malformed, has no rows, or holds non-finite values
        """
        try:
            content_str = file_content.decode("utf-8")
        except UnicodeDecodeError:
            raise SampleFileError("sample files must be UTF-8 encoded")

        if not content_str.strip():
            raise SampleFileError("CSV file is empty")

        try:
            rows = list(csv.reader(io.StringIO(content_str)))
        except csv.Error as e:
            raise SampleFileError(f"Invalid CSV format: {str(e)}")

        rows = [row for row in rows if row]
        n = SampleCSVValidator.validate_header(rows[0], expected_dim)
        body = rows[1:]
        if not body:
            raise SampleFileError("CSV file has no data rows (only header)")

        for line, row in enumerate(body, start=2):
            if len(row) != n:
                raise SampleFileError(f"line {line}: expected {n} values, found {len(row)}")
        try:
            data = np.array(body, dtype=np.float64)
        except ValueError as e:
            raise SampleFileError(f"non-numeric value in sample file: {e}")

        if not np.all(np.isfinite(data)):
            bad = int(np.sum(~np.all(np.isfinite(data), axis=1)))
            raise SampleFileError(f"sample file contains {bad} rows with non-finite values")

        file_hash = hashlib.sha256(file_content).hexdigest()
        logger.debug(
            "CSV content validated",
            extra={
                "data_rows": data.shape[0],
                "dim": n,
                "file_hash": file_hash[:16] + "...",
            },
        )
        return data, file_hash

    @staticmethod
    def validate_path(path: Path, expected_dim: Optional[int] = None) -> Tuple[np.ndarray, str]:
        """
        Validate a sample file on disk.

        This method performs all validations:
        1. File format (must be .csv)
        2. File size (not empty, within limit)
        3. Header (x1..xn)
        4. Content (rectangular, numeric, finite)

        Returns:
            Tuple of (data matrix, file_hash)

        Raises:
            SampleFileError: If validation fails or the file cannot be read
        """
        path = Path(path)
        try:
            SampleCSVValidator.validate_file_format(path.name)
            try:
                file_content = path.read_bytes()
            except OSError as e:
                raise SampleFileError(f"cannot read sample file {path}: {e}") from e
            SampleCSVValidator.validate_file_size(len(file_content))
            data, file_hash = SampleCSVValidator.validate_csv_content(file_content, expected_dim)
        except SampleFileError as e:
            logger.warning(
                "Sample file validation failed",
                extra={"file_name": str(path), "error": str(e)},
            )
            raise

        logger.info(
            "Sample file validation passed",
            extra={
                "file_name": str(path),
                "file_size": len(file_content),
                "row_count": data.shape[0],
            },
        )
        return data, file_hash


# Singleton instance
sample_validator = SampleCSVValidator()
