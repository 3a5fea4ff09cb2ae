"""
In-memory schedule types.

Arrays are stored 1-based: index 0 holds the alpha_0 = 1 sentinel row so
that ``table[t]`` reads exactly like the formulas. Columns defined only for
t >= 2 (``nu``, ``beta_tilde``) hold NaN at indices 0 and 1.
"""
from dataclasses import dataclass, field

import numpy as np

from src.app.exceptions import ProcessError, ScheduleError
from src.models.variant import GammaSource


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class BetaSchedule:
    """Per-step variances beta_1..beta_T (stored with a beta_0 = 0 sentinel)."""
    T: int
    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.shape == (self.T,):
            beta = np.concatenate(([0.0], beta))
        if beta.shape != (self.T + 1,):
            raise ScheduleError(f"beta has shape {beta.shape}, expected ({self.T},) or ({self.T + 1},)")
        beta = beta.copy()
        beta[0] = 0.0
        object.__setattr__(self, "beta", _frozen(beta))


@dataclass(frozen=True, eq=False)
class ScheduleTables:
    """All per-timestep coefficients for a horizon T. Immutable once built."""
    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    nu: np.ndarray
    lambda_eps: np.ndarray
    lambda_v: np.ndarray
    beta_tilde: np.ndarray
    sigma_rev_sq: np.ndarray
    sigma0: float = 1.0
    gamma_source: GammaSource = GammaSource.NONE
    zero_snr: bool = False
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in (
            "beta", "alpha", "alpha_bar", "gamma", "phi", "psi", "nu",
            "lambda_eps", "lambda_v", "beta_tilde", "sigma_rev_sq",
        ):
            arr = getattr(self, name)
            if arr.shape != (self.T + 1,):
                raise ScheduleError(f"column {name} has shape {arr.shape}, expected ({self.T + 1},)")
            object.__setattr__(self, name, _frozen(arr))

    @property
    def balanced(self) -> bool:
        return self.gamma_source == GammaSource.BALANCED

    def max_abs_nu(self) -> float:
        """Largest |nu_t| over t = 2..T (0 when T = 1)."""
        if self.T < 2:
            return 0.0
        return float(np.max(np.abs(self.nu[2:])))

    def check_timestep(self, t, lo: int = 1) -> np.ndarray:
        """
        Validate a scalar or array of timesteps against [lo, T].

        Raises:
            ProcessError: If any t is outside the range
        """
        t_arr = np.asarray(t)
        if not np.issubdtype(t_arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(t_arr, 1), 0)):
                raise ProcessError(f"timestep must be integral, got {t!r}")
            t_arr = t_arr.astype(np.int64)
        if t_arr.size and (t_arr.min() < lo or t_arr.max() > self.T):
            raise ProcessError(f"timestep out of range [{lo}, {self.T}]: {t!r}")
        return t_arr
