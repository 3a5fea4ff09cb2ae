"""
Pydantic schema for the checkpoint file header.
"""
from typing import Any, Dict, List

from pydantic import BaseModel, Field, field_validator

from src.models.variant import ModelVariant, Prediction


class CheckpointHeader(BaseModel):
    """Structured-text header preceding the raw parameter arrays."""
    layer_dims: List[int] = Field(..., min_length=2)
    embed_dim: int = Field(..., ge=2)
    T: int = Field(..., ge=1)
    variant: ModelVariant
    prediction: Prediction
    schedule_hash: str
    config_hash: str
    step: int = Field(0, ge=0)
    master_seed: int = 0
    run_config: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("layer_dims")
    @classmethod
    def _positive(cls, value: List[int]) -> List[int]:
        if any(d < 1 for d in value):
            raise ValueError(f"layer_dims must be positive, got {value}")
        return value

    @property
    def array_count(self) -> int:
        """Weights and biases, two arrays per layer."""
        return 2 * (len(self.layer_dims) - 1)
