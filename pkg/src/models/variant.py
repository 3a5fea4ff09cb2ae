"""
Enumerations naming model variants and their knobs.
"""
import enum


class ModelVariant(str, enum.Enum):
    """Which training loss / reverse initialization a run uses."""
    BASE = "base"
    OFFSET = "offset"
    ZERO_SNR = "zero_snr"
    PROPOSED = "proposed"


class Prediction(str, enum.Enum):
    """Network parameterization of the reverse mean."""
    EPS = "eps"
    V = "v"


class XiKind(str, enum.Enum):
    """Family of the auxiliary-noise distribution q(xi)."""
    DELTA_ZERO = "delta_zero"
    CORRELATED_GAUSSIAN = "correlated_gaussian"


class LossWeighting(str, enum.Enum):
    """Per-timestep weight applied to the squared residual."""
    SIMPLE = "simple"
    ELBO = "elbo"


class GammaSource(str, enum.Enum):
    """How the gamma column of a schedule table was produced."""
    NONE = "none"
    BALANCED = "balanced"
    CUSTOM = "custom"


class ScheduleKind(str, enum.Enum):
    """Beta schedule families."""
    LOG_LINEAR = "log_linear"
    SCALED_LINEAR = "scaled_linear"


class SampleSource(str, enum.Enum):
    """Provenance of a sample batch."""
    DATASET = "dataset"
    GENERATED = "generated"
    EXTERNAL = "external"
