"""
Time-conditioned MLP denoiser with hand-written backpropagation and Adam.

The network maps [x || embed(t)] through GELU hidden layers to a linear
output of the same width as x. GELU is the exact Gaussian-CDF form.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf

from src.app.exceptions import DenoiserError
from src.app.logging_config import get_logger
from src.app.services.loss import batch_loss
from src.models.batch import TrainingPair
from src.models.denoiser import DEFAULT_HIDDEN_DIMS, AdamState, DenoiserParams, ParamGrads

logger = get_logger(__name__)

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(a: np.ndarray) -> np.ndarray:
    return 0.5 * a * (1.0 + erf(a * _INV_SQRT2))


def gelu_grad(a: np.ndarray) -> np.ndarray:
    """d/da of the exact GELU: Phi(a) + a * phi(a)."""
    cdf = 0.5 * (1.0 + erf(a * _INV_SQRT2))
    pdf = _INV_SQRT2PI * np.exp(-0.5 * a * a)
    return cdf + a * pdf


def init_params(n: int, embed_dim: int = 16, seed: int = 0,
                hidden_dims: Sequence[int] = DEFAULT_HIDDEN_DIMS, T: int = 200,
                dtype=np.float32) -> DenoiserParams:
    """
    Fan-in uniform initialization, W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.

    Raises:
        DenoiserError: If n < 1 or embed_dim is odd
    """
    if n < 1:
        raise DenoiserError(f"n must be >= 1, got {n}")
    if embed_dim < 2 or embed_dim % 2:
        raise DenoiserError(f"embed_dim must be a positive even number, got {embed_dim}")

    rng = np.random.default_rng(seed)
    layer_dims = [n + embed_dim, *[int(d) for d in hidden_dims], n]
    weights: List[np.ndarray] = []
    biases: List[np.ndarray] = []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))

    params = DenoiserParams(
        layer_dims=layer_dims, weights=weights, biases=biases,
        embed_dim=embed_dim, T=T, rng_seed=seed,
    )
    logger.debug(
        "Denoiser initialized",
        extra={"layer_dims": layer_dims, "parameter_count": params.parameter_count(), "seed": seed},
    )
    return params


def time_embedding(t, T: int, embed_dim: int) -> np.ndarray:
    """
    Sinusoidal features of tau = t / T at frequencies log-spaced on [1, 1000].

    Returns (embed_dim,) for a scalar t and (B, embed_dim) for an array,
    ordered sin(tau w_0), cos(tau w_0), sin(tau w_1), ...
    """
    if embed_dim < 2 or embed_dim % 2:
        raise DenoiserError(f"embed_dim must be a positive even number, got {embed_dim}")
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(t_arr > T):
        raise DenoiserError(f"timestep outside [0, {T}]: {t!r}")

    omega = np.logspace(0.0, 3.0, embed_dim // 2)
    angles = (t_arr / T)[..., None] * omega
    out = np.empty(angles.shape[:-1] + (embed_dim,), dtype=np.float64)
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


def _inputs(params: DenoiserParams, x: np.ndarray, t) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[1] != params.n:
        raise DenoiserError(f"input width {x2.shape[1]} does not match network width {params.n}")
    if not np.all(np.isfinite(x2)):
        raise DenoiserError("non-finite denoiser input")
    t_arr = np.asarray(t)
    if t_arr.ndim == 0:
        t_arr = np.full(x2.shape[0], t_arr)
    emb = time_embedding(t_arr, params.T, params.embed_dim)
    h0 = np.concatenate([x2, emb], axis=1).astype(params.dtype)
    return h0, single


def _forward_cache(params: DenoiserParams, h0: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray], np.ndarray]:
    inputs = [h0]
    pre = []
    h = h0
    last = params.num_layers - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        a = h @ W.T + b
        if i == last:
            return inputs, pre, a
        pre.append(a)
        h = gelu(a).astype(params.dtype)
        inputs.append(h)
    raise DenoiserError("network has no layers")


def forward(params: DenoiserParams, x: np.ndarray, t) -> np.ndarray:
    """
    Network output for x of shape (n,) or (B, n).

    Raises:
        DenoiserError: On shape mismatch or non-finite input
    """
    h0, single = _inputs(params, x, t)
    _, _, out = _forward_cache(params, h0)
    return out[0] if single else out


def loss_and_grad(params: DenoiserParams, pairs: TrainingPair) -> Tuple[float, ParamGrads]:
    """
    Batch loss of the network on ``pairs`` and its exact gradient.

    Returns:
        (loss, grads); loss is accumulated in float64
    """
    if len(pairs) == 0:
        raise DenoiserError("empty training batch")
    h0, _ = _inputs(params, pairs.x_t, pairs.t)
    inputs, pre, out = _forward_cache(params, h0)
    loss = batch_loss(pairs, out)

    B = len(pairs)
    residual = pairs.target.astype(np.float64) - out.astype(np.float64)
    # d loss / d out for the weighted mean of squared errors
    delta = (-2.0 / B * pairs.weight[:, None] * residual).astype(params.dtype)

    grad_w: List[np.ndarray] = [None] * params.num_layers
    grad_b: List[np.ndarray] = [None] * params.num_layers
    for i in range(params.num_layers - 1, -1, -1):
        # weights are stored (out, in)
        grad_w[i] = delta.T @ inputs[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * gelu_grad(pre[i - 1]).astype(params.dtype)

    return loss, ParamGrads(weights=grad_w, biases=grad_b)


def global_norm(grads: ParamGrads) -> float:
    """L2 norm over all gradient arrays jointly, accumulated in float64."""
    total = 0.0
    for g in grads.arrays():
        g64 = g.astype(np.float64)
        total += float(np.sum(g64 * g64))
    return float(np.sqrt(total))


def clip_grad_norm(grads: ParamGrads, max_norm: float = 1.0) -> Tuple[ParamGrads, float]:
    """
    Scale all gradients by max_norm / ||g|| when ||g|| exceeds max_norm.

    Returns:
        (clipped grads, pre-clip norm)
    """
    norm = global_norm(grads)
    if np.isfinite(norm) and norm > max_norm:
        return grads.scaled(max_norm / norm), norm
    return grads, norm


def _adam_update(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray,
                 state: AdamState, step: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    m_new = state.beta1 * m + (1.0 - state.beta1) * grad
    v_new = state.beta2 * v + (1.0 - state.beta2) * grad * grad
    m_hat = m_new / (1.0 - state.beta1 ** step)
    v_hat = v_new / (1.0 - state.beta2 ** step)
    updated = param - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    dtype = param.dtype
    return updated.astype(dtype), m_new.astype(dtype), v_new.astype(dtype)


def adam_step(params: DenoiserParams, grads: ParamGrads, state: AdamState,
              clip_norm: Optional[float] = 1.0) -> Tuple[DenoiserParams, AdamState, float]:
    """
    Clip by global norm, then apply one bias-corrected Adam update.

    Non-finite gradients skip the update: the inputs are returned unchanged
    apart from ``state.skipped_steps``, and the event is logged.

    Returns:
        (params, state, pre-clip gradient norm)
    """
    norm = global_norm(grads)
    if not np.isfinite(norm):
        state.skipped_steps += 1
        logger.warning(
            "Non-finite gradients, optimizer step skipped",
            extra={"adam_step": state.step, "skipped_steps": state.skipped_steps},
        )
        return params, state, norm

    if clip_norm is not None and norm > clip_norm:
        grads = grads.scaled(clip_norm / norm)

    step = state.step + 1
    new_w, new_b = [], []
    mw, mb, vw, vb = [], [], [], []
    for i in range(params.num_layers):
        W, m, v = _adam_update(params.weights[i], grads.weights[i], state.m_weights[i], state.v_weights[i], state, step)
        new_w.append(W)
        mw.append(m)
        vw.append(v)
        b, m, v = _adam_update(params.biases[i], grads.biases[i], state.m_biases[i], state.v_biases[i], state, step)
        new_b.append(b)
        mb.append(m)
        vb.append(v)

    new_params = DenoiserParams(
        layer_dims=list(params.layer_dims), weights=new_w, biases=new_b,
        embed_dim=params.embed_dim, T=params.T, rng_seed=params.rng_seed,
    )
    new_state = AdamState(
        m_weights=mw, m_biases=mb, v_weights=vw, v_biases=vb, step=step,
        lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps,
        skipped_steps=state.skipped_steps,
    )
    return new_params, new_state, norm
