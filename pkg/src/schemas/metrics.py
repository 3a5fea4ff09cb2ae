"""
Pydantic schemas for metric rows and verification reports.
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field

from src.models.variant import ModelVariant, Prediction

RUN_LOG_COLUMNS = (
    "run_id", "config_hash", "step", "variant", "prediction", "sigma_c_sq",
    "n", "seed", "rho", "wd1", "mmd", "ks", "divergence_count",
    "saturated_count", "n_generated", "wd_subsample",
)


class MetricRecord(BaseModel):
    """One row of a run log."""
    run_id: str
    config_hash: str
    step: int = Field(..., ge=0)
    variant: ModelVariant
    prediction: Prediction
    sigma_c_sq: float = Field(..., ge=0)
    n: int = Field(..., ge=1)
    seed: int
    rho: float = Field(1.0, gt=0)
    wd1: float
    mmd: float
    ks: float
    divergence_count: int = Field(0, ge=0)
    saturated_count: int = Field(0, ge=0)
    n_generated: int = Field(0, ge=0)
    wd_subsample: int = Field(0, ge=0)


class EvalResult(BaseModel):
    """Metrics between two sample sets, as printed by ``eval``."""
    wd1: float
    mmd: float
    ks: float
    mmd_bandwidth: float
    wd_subsample: int
    rows_a: int
    rows_b: int
    dim: int


class HistogramResult(BaseModel):
    """Brightness histogram over [-k, k] with out-of-range counts."""
    edges: List[float]
    counts: List[int]
    below: int = 0
    above: int = 0


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INFO = "info"


class VerifyReport(BaseModel):
    """Result of one oracle check."""
    check: str
    status: CheckStatus
    error: float = Field(..., description="Measured error (max abs gap or SE multiple)")
    tolerance: float
    samples: int = Field(0, ge=0)
    seed: Optional[int] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != CheckStatus.FAIL


class AcceptanceResult(BaseModel):
    """Outcome of one property checked over a set of run logs."""
    name: str
    passed: bool
    skipped: bool = False
    detail: str = ""
