"""
MLP denoiser: initialization, embedding, forward pass, exact gradients,
clipping and Adam.
"""
import math

import numpy as np
import pytest

from src.app.exceptions import DenoiserError, UnsupportedCombinationError
from src.app.services.cylinder import cylinder_dataset
from src.app.services.denoiser import (
    adam_step,
    clip_grad_norm,
    forward,
    global_norm,
    init_params,
    loss_and_grad,
    time_embedding,
)
from src.app.services.loss import make_training_pairs
from src.app.services.schedule import zero_snr_rescale
from src.models.batch import TrainingPair
from src.models.denoiser import AdamState, DenoiserParams, ParamGrads
from src.models.variant import LossWeighting, ModelVariant, Prediction
from src.schemas.config import CylinderConfig


def _loss(params, pairs):
    return loss_and_grad(params, pairs)[0]


def finite_difference(params, pairs, h=1e-4):
    """Central differences of the batch loss for every parameter entry."""
    grads_w, grads_b = [], []
    for arrays, out in ((params.weights, grads_w), (params.biases, grads_b)):
        for arr in arrays:
            g = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                saved = arr[idx]
                arr[idx] = saved + h
                plus = _loss(params, pairs)
                arr[idx] = saved - h
                minus = _loss(params, pairs)
                arr[idx] = saved
                g[idx] = (plus - minus) / (2 * h)
            out.append(g)
    return ParamGrads(weights=grads_w, biases=grads_b)


def relative_error(exact: ParamGrads, approx: ParamGrads) -> float:
    """Largest absolute gap, relative to the largest exact gradient entry."""
    gap = max(float(np.max(np.abs(a - b))) for a, b in zip(exact.arrays(), approx.arrays()))
    scale = max(float(np.max(np.abs(a))) for a in exact.arrays())
    return gap / max(scale, 1e-8)


class TestInit:

    def test_deterministic(self):
        a, b = init_params(2, seed=5, hidden_dims=(8, 8)), init_params(2, seed=5, hidden_dims=(8, 8))
        for x, y in zip(a.arrays(), b.arrays()):
            np.testing.assert_array_equal(x, y)

    def test_first_layer_shape(self):
        params = init_params(2, embed_dim=16)
        assert params.weights[0].shape == (256, 18)
        assert params.layer_dims == [18, 256, 512, 1024, 512, 256, 2]
        assert params.dtype == np.float32

    def test_parameter_count(self):
        dims = [216, 256, 512, 1024, 512, 256, 200]
        expected = sum(i * o + o for i, o in zip(dims[:-1], dims[1:]))
        assert init_params(200, embed_dim=16).parameter_count() == expected

    def test_biases_zero_and_weights_bounded(self):
        params = init_params(3, embed_dim=4, hidden_dims=(10,), seed=1)
        assert not any(b.any() for b in params.biases)
        assert np.max(np.abs(params.weights[0])) <= 1 / np.sqrt(7) + 1e-6

    @pytest.mark.parametrize("n, embed_dim", [(0, 16), (2, 5)])
    def test_invalid_arguments(self, n, embed_dim):
        with pytest.raises(DenoiserError):
            init_params(n, embed_dim=embed_dim)


class TestTimeEmbedding:

    def test_origin(self):
        emb = time_embedding(0, 200, 16)
        np.testing.assert_array_equal(emb[0::2], 0.0)
        np.testing.assert_array_equal(emb[1::2], 1.0)

    def test_distinct_for_every_timestep(self):
        emb = time_embedding(np.arange(1, 201), 200, 16)
        assert np.unique(np.round(emb, 12), axis=0).shape[0] == 200

    def test_norm_bound(self):
        emb = time_embedding(np.arange(0, 201), 200, 16)
        assert np.all(np.linalg.norm(emb, axis=1) <= np.sqrt(16) + 1e-12)

    def test_odd_width_rejected(self):
        with pytest.raises(DenoiserError):
            time_embedding(3, 200, 7)


class TestForward:

    def test_zero_weights_give_zero_output(self, tiny_net):
        zero = DenoiserParams(
            layer_dims=tiny_net.layer_dims,
            weights=[np.zeros_like(W) for W in tiny_net.weights],
            biases=[np.zeros_like(b) for b in tiny_net.biases],
            embed_dim=tiny_net.embed_dim, T=tiny_net.T,
        )
        np.testing.assert_array_equal(forward(zero, np.ones((3, 2)), 7), 0.0)

    def test_single_hidden_unit(self):
        """[x, sin(tau), cos(tau)] -> one GELU unit -> linear output."""
        params = DenoiserParams(
            layer_dims=[3, 1, 1],
            weights=[np.array([[0.5, -1.0, 2.0]]), np.array([[1.5]])],
            biases=[np.array([0.1]), np.array([-0.2])],
            embed_dim=2, T=10,
        )
        x, t = 0.8, 4
        tau = t / 10
        a = 0.5 * x - 1.0 * math.sin(tau) + 2.0 * math.cos(tau) + 0.1
        gelu = 0.5 * a * (1 + math.erf(a / math.sqrt(2)))
        assert forward(params, np.array([x]), t)[0] == pytest.approx(1.5 * gelu - 0.2, rel=1e-12)

    def test_batched_equals_per_sample(self, tiny_net, rng):
        x = rng.standard_normal((6, 2))
        t = rng.integers(1, 201, size=6)
        batched = forward(tiny_net, x, t)
        for i in range(6):
            np.testing.assert_allclose(batched[i], forward(tiny_net, x[i], t[i]), rtol=1e-12, atol=1e-12)

    def test_non_finite_input_rejected(self, tiny_net):
        with pytest.raises(DenoiserError):
            forward(tiny_net, np.array([np.nan, 0.0]), 1)

    def test_width_mismatch_rejected(self, tiny_net):
        with pytest.raises(DenoiserError):
            forward(tiny_net, np.zeros(3), 1)


class TestGradients:

    @pytest.mark.parametrize("variant, prediction", [
        (ModelVariant.BASE, Prediction.EPS),
        (ModelVariant.BASE, Prediction.V),
        (ModelVariant.OFFSET, Prediction.EPS),
        (ModelVariant.OFFSET, Prediction.V),
        (ModelVariant.PROPOSED, Prediction.EPS),
        (ModelVariant.PROPOSED, Prediction.V),
        (ModelVariant.ZERO_SNR, Prediction.V),
    ])
    def test_matches_finite_differences(self, tiny_net, plain_tables, balanced_tables, point_spec,
                                        correlated_spec, variant, prediction, rng):
        tables = {
            ModelVariant.BASE: plain_tables,
            ModelVariant.OFFSET: plain_tables,
            ModelVariant.PROPOSED: balanced_tables,
            ModelVariant.ZERO_SNR: zero_snr_rescale(plain_tables),
        }[variant]
        spec = correlated_spec if variant in (ModelVariant.OFFSET, ModelVariant.PROPOSED) else point_spec
        x0 = rng.uniform(-2, 2, size=(8, 2))
        pairs = make_training_pairs(x0, tables, spec, variant, prediction, rng=rng)
        _, exact = loss_and_grad(tiny_net, pairs)
        assert relative_error(exact, finite_difference(tiny_net, pairs)) <= 1e-5

    def test_weighted_loss_gradient(self, tiny_net, balanced_tables, correlated_spec, rng):
        x0 = rng.uniform(-2, 2, size=(8, 2))
        pairs = make_training_pairs(x0, balanced_tables, correlated_spec, ModelVariant.PROPOSED, Prediction.EPS,
                                    rng=rng, weighting=LossWeighting.ELBO, t=np.arange(1, 9) * 20)
        _, exact = loss_and_grad(tiny_net, pairs)
        assert relative_error(exact, finite_difference(tiny_net, pairs)) <= 1e-5

    def test_zero_snr_eps_has_no_pairs(self, plain_tables, point_spec, rng):
        with pytest.raises(UnsupportedCombinationError):
            make_training_pairs(np.zeros((4, 2)), zero_snr_rescale(plain_tables), point_spec,
                                ModelVariant.ZERO_SNR, Prediction.EPS, rng=rng)

    def test_perfect_targets(self, tiny_net, rng):
        x_t = rng.standard_normal((5, 2))
        t = rng.integers(1, 201, size=5)
        pairs = TrainingPair(x_t=x_t, target=forward(tiny_net, x_t, t), t=t, weight=np.ones(5))
        loss, grads = loss_and_grad(tiny_net, pairs)
        assert loss == 0.0
        np.testing.assert_array_equal(grads.weights[-1], 0.0)
        np.testing.assert_array_equal(grads.biases[-1], 0.0)

    def test_doubling_residual_quadruples_loss(self, tiny_net, rng):
        x_t = rng.standard_normal((5, 2))
        t = rng.integers(1, 201, size=5)
        pred = forward(tiny_net, x_t, t)
        target = rng.standard_normal((5, 2))
        one = TrainingPair(x_t=x_t, target=target, t=t, weight=np.ones(5))
        two = TrainingPair(x_t=x_t, target=pred + 2 * (target - pred), t=t, weight=np.ones(5))
        assert loss_and_grad(tiny_net, two)[0] == pytest.approx(4 * loss_and_grad(tiny_net, one)[0], rel=1e-12)


def _scalar_grads(w, b=0.0):
    return ParamGrads(weights=[np.array([[w]])], biases=[np.array([b])])


def _scalar_params():
    return DenoiserParams(layer_dims=[1, 1], weights=[np.array([[0.0]])], biases=[np.array([0.0])],
                          embed_dim=2, T=1)


class TestOptimizer:

    def test_small_gradient_not_clipped(self):
        grads, norm = clip_grad_norm(_scalar_grads(0.3, 0.4), 1.0)
        assert norm == pytest.approx(0.5)
        assert grads.weights[0][0, 0] == 0.3

    def test_large_gradient_clipped_to_unit_norm(self):
        grads, norm = clip_grad_norm(_scalar_grads(0.0, 4.0), 1.0)
        assert norm == pytest.approx(4.0)
        assert grads.biases[0][0] == pytest.approx(1.0, abs=1e-12)
        assert global_norm(grads) == pytest.approx(1.0, abs=1e-12)

    def test_single_adam_step(self):
        params = _scalar_params()
        state = AdamState.zeros_like(params)
        new_params, new_state, _ = adam_step(params, _scalar_grads(1.0, 1.0), state, clip_norm=None)
        assert new_params.weights[0][0, 0] == pytest.approx(-0.001 / (1 + 1e-8), rel=1e-12)
        assert new_state.step == 1

    def test_non_finite_gradient_skips_step(self):
        params = _scalar_params()
        state = AdamState.zeros_like(params)
        new_params, new_state, norm = adam_step(params, _scalar_grads(np.nan), state)
        assert new_params is params
        assert new_state.step == 0
        assert new_state.skipped_steps == 1
        assert not np.isfinite(norm)

    def test_loss_decreases_on_fixed_batch(self, plain_tables, point_spec):
        data = cylinder_dataset(CylinderConfig(size=256, dim=2, seed=0)).data
        pairs = make_training_pairs(data, plain_tables, point_spec, ModelVariant.BASE, Prediction.EPS,
                                    rng=np.random.default_rng(0))
        params = init_params(2, embed_dim=16, seed=0, hidden_dims=(64, 64))
        state = AdamState.zeros_like(params)
        first, _ = loss_and_grad(params, pairs)
        losses = []
        for _ in range(50):
            loss, grads = loss_and_grad(params, pairs)
            losses.append(loss)
            params, state, _ = adam_step(params, grads, state)
        assert min(losses[1:]) < first
        assert loss_and_grad(params, pairs)[0] < first
