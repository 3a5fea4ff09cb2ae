"""
Denoiser parameter containers.

Weights are stored (out, in) so a layer computes h @ W.T + b.
"""
from dataclasses import dataclass, field
from typing import Iterator, List

import numpy as np

from src.app.exceptions import DenoiserError

DEFAULT_HIDDEN_DIMS = (256, 512, 1024, 512, 256)


@dataclass(eq=False)
class DenoiserParams:
    """Time-conditioned MLP weights for eps_theta / v_theta."""
    layer_dims: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    embed_dim: int
    T: int
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DenoiserError(
                f"{len(self.layer_dims)} layer dims need {len(self.layer_dims) - 1} weight/bias pairs, "
                f"got {len(self.weights)}/{len(self.biases)}"
            )
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[i + 1], self.layer_dims[i])
            if W.shape != expected or b.shape != (expected[0],):
                raise DenoiserError(f"layer {i}: W {W.shape} / b {b.shape} do not match dims {expected}")

    @property
    def n(self) -> int:
        return self.layer_dims[-1]

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def arrays(self) -> Iterator[np.ndarray]:
        """W0, b0, W1, b1, ... in declaration order."""
        for W, b in zip(self.weights, self.biases):
            yield W
            yield b

    def parameter_count(self) -> int:
        return int(sum(a.size for a in self.arrays()))

    def copy(self) -> "DenoiserParams":
        return DenoiserParams(
            layer_dims=list(self.layer_dims),
            weights=[W.copy() for W in self.weights],
            biases=[b.copy() for b in self.biases],
            embed_dim=self.embed_dim,
            T=self.T,
            rng_seed=self.rng_seed,
        )

    def astype(self, dtype) -> "DenoiserParams":
        return DenoiserParams(
            layer_dims=list(self.layer_dims),
            weights=[W.astype(dtype) for W in self.weights],
            biases=[b.astype(dtype) for b in self.biases],
            embed_dim=self.embed_dim,
            T=self.T,
            rng_seed=self.rng_seed,
        )


@dataclass(eq=False)
class ParamGrads:
    """Gradients shaped like a DenoiserParams."""
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def arrays(self) -> Iterator[np.ndarray]:
        for W, b in zip(self.weights, self.biases):
            yield W
            yield b

    def scaled(self, factor: float) -> "ParamGrads":
        return ParamGrads(
            weights=[(W * factor).astype(W.dtype) for W in self.weights],
            biases=[(b * factor).astype(b.dtype) for b in self.biases],
        )


@dataclass(eq=False)
class AdamState:
    """First and second moments plus hyperparameters."""
    m_weights: List[np.ndarray]
    m_biases: List[np.ndarray]
    v_weights: List[np.ndarray]
    v_biases: List[np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    skipped_steps: int = field(default=0)

    @classmethod
    def zeros_like(cls, params: DenoiserParams, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(W) for W in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_weights=[np.zeros_like(W) for W in params.weights],
            v_biases=[np.zeros_like(b) for b in params.biases],
            lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        )
