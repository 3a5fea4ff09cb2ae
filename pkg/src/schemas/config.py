"""
Pydantic schemas for experiment configuration.
"""
from typing import Any, List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.variant import (
    LossWeighting,
    ModelVariant,
    Prediction,
    ScheduleKind,
    XiKind,
)


class CylinderConfig(BaseModel):
    """Cylinder dataset parameters."""
    model_config = ConfigDict(extra="forbid")

    size: int = Field(5000, gt=0, description="Number of samples")
    dim: int = Field(2, ge=1, description="Ambient dimension n")
    r: float = Field(0.5, gt=0, description="Radius factor (relative to ||1_n||)")
    k: float = Field(2.0, gt=0, description="Top-center scale")
    seed: int = 0


class XiSpec(BaseModel):
    """Auxiliary-noise distribution q(xi)."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: XiKind = XiKind.DELTA_ZERO
    sigma_c_sq: float = Field(0.0, ge=0, description="Correlated variance sigma_c^2")
    dim: int = Field(..., ge=1)


class XiConfig(BaseModel):
    """The ``xi`` config section; the dimension comes from the dataset."""
    model_config = ConfigDict(extra="forbid")

    kind: XiKind = XiKind.DELTA_ZERO
    sigma_c_sq: float = Field(0.0, ge=0)


class ModelConfig(BaseModel):
    """Variant, parameterization and network shape."""
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    variant: ModelVariant = ModelVariant.BASE
    prediction: Prediction = Prediction.EPS
    sigma0: float = Field(1.0, gt=0)
    weighting: LossWeighting = LossWeighting.SIMPLE
    hidden_dims: Tuple[int, ...] = (256, 512, 1024, 512, 256)
    embed_dim: int = Field(16, ge=2)

    @field_validator("hidden_dims", mode="before")
    @classmethod
    def _split_dims(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(int(v) for v in value.replace(" ", "").split(",") if v)
        return value

    @field_validator("hidden_dims")
    @classmethod
    def _positive_dims(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(d < 1 for d in value):
            raise ValueError(f"hidden_dims must be positive, got {value}")
        return value

    @field_validator("embed_dim")
    @classmethod
    def _even_embed(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"embed_dim must be even, got {value}")
        return value


class ScheduleConfig(BaseModel):
    """Beta schedule and derived-coefficient options."""
    model_config = ConfigDict(extra="forbid")

    kind: ScheduleKind = ScheduleKind.LOG_LINEAR
    T: int = Field(200, ge=1)
    sigma_min: float = Field(0.01, gt=0)
    sigma_max: float = Field(10.0, gt=0)
    beta_start: float = Field(0.00085, gt=0, lt=1)
    beta_end: float = Field(0.012, gt=0, lt=1)
    balanced: bool = False
    zero_snr: bool = False


class OptimizerConfig(BaseModel):
    """Adam and training-loop settings."""
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    batch_size: int = Field(1024, gt=0)
    max_steps: int = Field(20000, ge=0)
    clip_norm: float = Field(1.0, gt=0)
    max_consecutive_skips: int = Field(100, gt=0)


class SamplerConfig(BaseModel):
    """Ancestral sampler settings."""
    model_config = ConfigDict(extra="forbid")

    variant: ModelVariant = ModelVariant.BASE
    prediction: Prediction = Prediction.EPS
    clip_lo: float = -10.0
    clip_hi: float = 10.0
    n_samples: int = Field(5000, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SamplerConfig":
        if not self.clip_lo < self.clip_hi:
            raise ValueError(f"clip_lo ({self.clip_lo}) must be below clip_hi ({self.clip_hi})")
        if self.variant == ModelVariant.ZERO_SNR and self.prediction != Prediction.V:
            raise ValueError("zero_snr variant requires prediction=v")
        return self


class EvalConfig(BaseModel):
    """Periodic evaluation settings."""
    model_config = ConfigDict(extra="forbid")

    every_steps: int = Field(2000, gt=0)
    n_generate: int = Field(2000, gt=0)
    wd_subsample: int = Field(1000, gt=0)
    mmd_bandwidth_mode: Literal["sqrt_n", "fourth_root_n"] = "sqrt_n"
    histogram_bins: int = Field(10, gt=0)


_SECTIONS = ("dataset", "model", "xi", "schedule", "optimizer", "sampler", "eval")


class RunConfig(BaseModel):
    """Full description of one experiment run."""
    model_config = ConfigDict(extra="forbid")

    profile: str = "desk"
    dataset: CylinderConfig = Field(default_factory=CylinderConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    xi: XiConfig = Field(default_factory=XiConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    scaling_rho: float = Field(1.0, gt=0)
    master_seed: int = 0
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])

    @field_validator("seeds", mode="before")
    @classmethod
    def _split_seeds(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [int(v) for v in value.replace(" ", "").split(",") if v]
        return value

    @model_validator(mode="before")
    @classmethod
    def _fill_variant_defaults(cls, data: Any) -> Any:
        """Derive the switches a variant implies unless they were set explicitly."""
        if not isinstance(data, dict):
            return data
        data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
        model = data.get("model")
        if isinstance(model, ModelConfig):
            model = model.model_dump()
        model = dict(model or {})
        variant = ModelVariant(model.get("variant", ModelVariant.BASE))

        schedule = data.setdefault("schedule", {})
        if isinstance(schedule, dict):
            schedule.setdefault("balanced", variant == ModelVariant.PROPOSED)
            schedule.setdefault("zero_snr", variant == ModelVariant.ZERO_SNR)

        if variant == ModelVariant.ZERO_SNR:
            model.setdefault("prediction", Prediction.V)
        data["model"] = model

        xi = data.setdefault("xi", {})
        if isinstance(xi, XiConfig):
            xi = data["xi"] = xi.model_dump()
        if "sigma_c_sq" in model:
            # model.sigma_c_sq is accepted as an alias of xi.sigma_c_sq
            xi.setdefault("sigma_c_sq", model.pop("sigma_c_sq"))
        if isinstance(xi, dict):
            default_kind = (
                XiKind.CORRELATED_GAUSSIAN
                if variant in (ModelVariant.OFFSET, ModelVariant.PROPOSED)
                else XiKind.DELTA_ZERO
            )
            xi.setdefault("kind", default_kind)

        sampler = data.setdefault("sampler", {})
        if isinstance(sampler, dict):
            sampler.setdefault("variant", variant)
            sampler.setdefault("prediction", model.get("prediction", Prediction.EPS))
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        variant = self.model.variant
        if variant == ModelVariant.ZERO_SNR:
            if self.model.prediction != Prediction.V:
                raise ValueError("zero_snr variant supports only prediction=v")
            if not self.schedule.zero_snr:
                raise ValueError("zero_snr variant requires schedule.zero_snr=true")
        elif self.schedule.zero_snr:
            raise ValueError(f"schedule.zero_snr=true is only valid for the zero_snr variant, not {variant.value}")

        if variant == ModelVariant.PROPOSED and not self.schedule.balanced:
            raise ValueError("proposed variant requires schedule.balanced=true")
        if variant != ModelVariant.PROPOSED and self.schedule.balanced:
            raise ValueError(f"schedule.balanced=true is only valid for the proposed variant, not {variant.value}")

        if variant in (ModelVariant.BASE, ModelVariant.ZERO_SNR) and self.xi.kind != XiKind.DELTA_ZERO:
            raise ValueError(f"{variant.value} variant uses xi.kind=delta_zero")
        if variant in (ModelVariant.OFFSET, ModelVariant.PROPOSED) and self.xi.kind != XiKind.CORRELATED_GAUSSIAN:
            raise ValueError(f"{variant.value} variant uses xi.kind=correlated_gaussian")
        if variant in (ModelVariant.OFFSET, ModelVariant.PROPOSED) and self.xi.sigma_c_sq == 0.0:
            # sigma_c^2 = 0 collapses xi to zero and the run to plain DDPM
            raise ValueError(f"{variant.value} variant needs xi.sigma_c_sq > 0")
        if variant == ModelVariant.OFFSET and self.model.sigma0 != 1.0:
            raise ValueError("offset variant fixes sigma0 = 1")
        if variant != ModelVariant.PROPOSED and self.model.sigma0 != 1.0:
            raise ValueError("sigma0 != 1 is only meaningful for the proposed variant")

        if self.sampler.variant != variant or self.sampler.prediction != self.model.prediction:
            raise ValueError("sampler.variant / sampler.prediction must match model.variant / model.prediction")
        return self

    def xi_spec(self) -> XiSpec:
        """The q(xi) this run samples from."""
        return XiSpec(kind=self.xi.kind, sigma_c_sq=self.xi.sigma_c_sq, dim=self.dataset.dim)

    @property
    def sigma_c_sq(self) -> float:
        return self.xi.sigma_c_sq

    @staticmethod
    def sections() -> Tuple[str, ...]:
        return _SECTIONS
