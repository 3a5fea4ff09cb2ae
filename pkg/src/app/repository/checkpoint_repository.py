"""
Repository for denoiser checkpoint files.

Layout: a magic line, a little-endian uint64 header length, the header as
JSON, then for each array W0, b0, W1, b1, ... a little-endian uint64
element count followed by that many little-endian float32 values.
"""
import json
from pathlib import Path
from typing import Tuple

import numpy as np
from pydantic import ValidationError

from src.app.exceptions import CheckpointError
from src.app.logging_config import get_logger
from src.models.denoiser import DenoiserParams
from src.schemas.checkpoint import CheckpointHeader

logger = get_logger(__name__)

MAGIC = b"OFFSETDIFF-CKPT 1\n"
_U64 = np.dtype("<u8")
_F32 = np.dtype("<f4")


class CheckpointRepository:
    """Repository for checkpoint persistence."""

    @staticmethod
    def save(path: Path, params: DenoiserParams, header: CheckpointHeader) -> Path:
        """
        Write params and header; arrays are stored as float32.

        Raises:
            CheckpointError: If the header disagrees with the parameters
        """
        if list(header.layer_dims) != list(params.layer_dims) or header.embed_dim != params.embed_dim:
            raise CheckpointError("checkpoint header does not match the parameter shapes")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header_bytes = header.model_dump_json().encode("utf-8")

        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(np.array([len(header_bytes)], dtype=_U64).tobytes())
            fh.write(header_bytes)
            for arr in params.arrays():
                flat = np.ascontiguousarray(arr, dtype=_F32).ravel()
                fh.write(np.array([flat.size], dtype=_U64).tobytes())
                fh.write(flat.tobytes())
        tmp.replace(path)

        logger.info(
            "Checkpoint saved",
            extra={"path": str(path), "step": header.step, "parameter_count": params.parameter_count()},
        )
        return path

    @staticmethod
    def load(path: Path) -> Tuple[DenoiserParams, CheckpointHeader]:
        """
        Read a checkpoint back into float32 parameters.

        Raises:
            CheckpointError: Missing file, bad magic, truncated or malformed content
        """
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

        if not raw.startswith(MAGIC):
            raise CheckpointError(f"{path} is not a checkpoint file")
        offset = len(MAGIC)

        def take(count: int, what: str) -> bytes:
            nonlocal offset
            if offset + count > len(raw):
                raise CheckpointError(f"{path} is truncated while reading {what}")
            chunk = raw[offset:offset + count]
            offset += count
            return chunk

        header_len = int(np.frombuffer(take(8, "header length"), dtype=_U64)[0])
        try:
            header = CheckpointHeader.model_validate(json.loads(take(header_len, "header").decode("utf-8")))
        except (ValueError, ValidationError) as e:
            raise CheckpointError(f"{path} has a malformed header: {e}") from e

        dims = header.layer_dims
        weights, biases = [], []
        for i in range(len(dims) - 1):
            for kind, shape in (("W", (dims[i + 1], dims[i])), ("b", (dims[i + 1],))):
                count = int(np.frombuffer(take(8, f"{kind}{i} length"), dtype=_U64)[0])
                expected = int(np.prod(shape))
                if count != expected:
                    raise CheckpointError(f"{path}: {kind}{i} has {count} values, expected {expected}")
                values = np.frombuffer(take(4 * count, f"{kind}{i}"), dtype=_F32).astype(np.float32).reshape(shape)
                (weights if kind == "W" else biases).append(values)

        if offset != len(raw):
            raise CheckpointError(f"{path} has {len(raw) - offset} trailing bytes")

        params = DenoiserParams(
            layer_dims=list(dims), weights=weights, biases=biases,
            embed_dim=header.embed_dim, T=header.T, rng_seed=header.master_seed,
        )
        logger.debug("Checkpoint loaded", extra={"path": str(path), "step": header.step})
        return params, header


checkpoint_repository = CheckpointRepository()
