"""
Batched training pairs and sample collections.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from src.app.exceptions import LossError, SampleFileError
from src.schemas.sample import SampleMeta


@dataclass(frozen=True, eq=False)
class TrainingPair:
    """
    A batch of regression pairs.

    x_t and target are (B, n); t and weight are (B,). ``added_noise`` is the
    noise term inside x_t (the part multiplied by sqrt(1 - alpha_bar_t)).
    """
    x_t: np.ndarray
    target: np.ndarray
    t: np.ndarray
    weight: np.ndarray
    added_noise: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.x_t.ndim != 2 or self.target.shape != self.x_t.shape:
            raise LossError(f"x_t {self.x_t.shape} and target {self.target.shape} must be equal (B, n) shapes")
        B = self.x_t.shape[0]
        if self.t.shape != (B,) or self.weight.shape != (B,):
            raise LossError(f"t {self.t.shape} and weight {self.weight.shape} must have shape ({B},)")

    def __len__(self) -> int:
        return self.x_t.shape[0]

    @property
    def dim(self) -> int:
        return self.x_t.shape[1]

    def subset(self, index) -> "TrainingPair":
        return TrainingPair(
            x_t=self.x_t[index],
            target=self.target[index],
            t=self.t[index],
            weight=self.weight[index],
            added_noise=None if self.added_noise is None else self.added_noise[index],
        )


@dataclass(eq=False)
class SampleBatch:
    """N points in R^n plus their provenance."""
    data: np.ndarray
    meta: SampleMeta
    heights: Optional[np.ndarray] = None
    snapshots: Dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise SampleFileError(f"sample data must be 2-D, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise SampleFileError("sample data contains non-finite entries")

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]
