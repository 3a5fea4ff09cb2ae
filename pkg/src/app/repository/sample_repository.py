"""
Repository for sample and dataset files.

A sample file is a CSV with header x1..xn and one row per point. Its
provenance lives in a JSON sidecar at ``<file>.meta.json``.
"""
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from src.app.exceptions import SampleFileError
from src.app.logging_config import get_logger
from src.app.services.sample_validator import column_names, sample_validator
from src.models.batch import SampleBatch
from src.models.variant import SampleSource
from src.schemas.sample import SampleMeta
from src.settings import settings

logger = get_logger(__name__)

SIDECAR_SUFFIX = ".meta.json"


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + SIDECAR_SUFFIX)


def dataset_path(n: int, seed: int, split: str, data_dir: Optional[Path] = None) -> Path:
    """Conventional location of a generated Cylinder split."""
    root = Path(data_dir) if data_dir is not None else Path(settings.DATA_DIR)
    return root / f"cylinder_n{n}_seed{seed}_{split}.csv"


class SampleRepository:
    """Repository for sample-file operations."""

    @staticmethod
    def save(path: Path, batch: SampleBatch) -> Path:
        """
        Write the batch as CSV plus its sidecar.

        Args:
            path: Target .csv path
            batch: Points and provenance

        Returns:
            The CSV path
        """
        path = Path(path)
        sample_validator.validate_file_format(path.name)
        path.parent.mkdir(parents=True, exist_ok=True)

        np.savetxt(
            path, batch.data, fmt="%.17g", delimiter=",",
            header=",".join(column_names(batch.dim)), comments="",
        )
        meta = batch.meta.model_copy(update={"rows": len(batch), "dim": batch.dim})
        sidecar_path(path).write_text(meta.model_dump_json(indent=2), encoding="utf-8")

        logger.debug(
            "Sample file written",
            extra={"path": str(path), "rows": len(batch), "dim": batch.dim, "source": meta.source.value},
        )
        return path

    @staticmethod
    def load_meta(path: Path) -> Optional[SampleMeta]:
        """Sidecar of a sample file, or None when absent."""
        meta_file = sidecar_path(path)
        if not meta_file.exists():
            return None
        try:
            return SampleMeta.model_validate_json(meta_file.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise SampleFileError(f"malformed sidecar {meta_file}: {e}") from e

    @staticmethod
    def load(path: Path, expected_dim: Optional[int] = None) -> SampleBatch:
        """
        Read a validated sample file.

        Files without a sidecar get a minimal ``external`` provenance record.

        Raises:
            SampleFileError: Missing or invalid file, or sidecar disagreeing with the data
        """
        path = Path(path)
        data, file_hash = sample_validator.validate_path(path, expected_dim)
        meta = SampleRepository.load_meta(path)
        if meta is None:
            meta = SampleMeta(source=SampleSource.EXTERNAL, rows=data.shape[0], dim=data.shape[1], seed=0)
        elif meta.dim != data.shape[1] or meta.rows != data.shape[0]:
            raise SampleFileError(
                f"sidecar of {path} records {meta.rows}x{meta.dim}, file holds {data.shape[0]}x{data.shape[1]}"
            )

        logger.debug("Sample file loaded", extra={"path": str(path), "file_hash": file_hash[:16]})
        return SampleBatch(data=data, meta=meta)


sample_repository = SampleRepository()
