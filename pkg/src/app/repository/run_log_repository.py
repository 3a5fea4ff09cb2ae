"""
Repository for run-log CSV files.
"""
import csv
from pathlib import Path
from typing import Iterable, List

from pydantic import ValidationError

from src.app.exceptions import SampleFileError
from src.app.logging_config import get_logger
from src.schemas.metrics import RUN_LOG_COLUMNS, MetricRecord

logger = get_logger(__name__)


class RunLogRepository:
    """Repository for metric-row persistence."""

    @staticmethod
    def append(path: Path, records: Iterable[MetricRecord]) -> int:
        """
        Append rows, writing the header when the file is new.

        Returns:
            Number of rows written
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        new_file = not path.exists() or path.stat().st_size == 0
        written = 0
        with open(path, "a", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(RUN_LOG_COLUMNS))
            if new_file:
                writer.writeheader()
            for record in records:
                row = record.model_dump(mode="json")
                writer.writerow({col: _format(row[col]) for col in RUN_LOG_COLUMNS})
                written += 1

        logger.debug("Run log rows appended", extra={"path": str(path), "rows": written})
        return written

    @staticmethod
    def read(path: Path) -> List[MetricRecord]:
        """
        Parse a run log back into records.

        Raises:
            SampleFileError: Missing file, wrong header or invalid rows
        """
        path = Path(path)
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh)
                if tuple(reader.fieldnames or ()) != RUN_LOG_COLUMNS:
                    raise SampleFileError(f"{path} does not have the run-log header")
                rows = list(reader)
        except OSError as e:
            raise SampleFileError(f"cannot read run log {path}: {e}") from e

        records = []
        for line, row in enumerate(rows, start=2):
            try:
                records.append(MetricRecord.model_validate(row))
            except ValidationError as e:
                raise SampleFileError(f"{path} line {line}: {e}") from e
        return records

    @staticmethod
    def read_many(paths: Iterable[Path]) -> List[MetricRecord]:
        records: List[MetricRecord] = []
        for path in paths:
            records.extend(RunLogRepository.read(path))
        return records


def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


run_log_repository = RunLogRepository()
