"""
Pydantic schemas for sample-file sidecars.
"""
from typing import Optional

from pydantic import BaseModel, Field

from src.models.variant import ModelVariant, Prediction, SampleSource


class SampleMeta(BaseModel):
    """Provenance record written next to every sample CSV."""
    source: SampleSource
    rows: int = Field(..., ge=0, description="Number of finite rows in the file")
    dim: int = Field(..., ge=1)
    seed: int
    config_hash: str = Field("", description="Hash of the RunConfig that produced the file")
    variant: Optional[ModelVariant] = None
    prediction: Optional[Prediction] = None
    step: Optional[int] = Field(None, ge=0, description="Optimizer step of the generating checkpoint")
    divergence_count: int = Field(0, ge=0)
    saturated_count: int = Field(0, ge=0)
    scaling_rho: float = Field(1.0, gt=0)
    sigma_c_sq: float = Field(0.0, ge=0, description="Variance scale of q(xi) used by the generating run")
    split: Optional[str] = Field(None, description="train / test for dataset files")
