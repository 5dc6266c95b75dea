import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import logsumexp

from src.agents.marginal import (
    build_marginal_model, conditional_heads, estimate_marginal_log_density, marginal_fit_step,
    marginal_log_density_pre_squash, marginal_nll, sample_marginal
)
from src.errors import ShapeError, TrainingAbortedError
from src.nn import engine
from src.nn.distributions import log_prob, tanh_log_jacobian
from src.nn.optim import adam_state
from tests.conftest import finite_difference_check


@pytest.fixture
def model(rng):
    return build_marginal_model(action_dim=1, hidden_width=8, buffer_capacity=50, rng=rng)


def test_single_latent_mixture_is_the_conditional(model, rng):
    latent = rng.standard_normal((1, 1))
    actions = rng.uniform(-0.9, 0.9, size=(6, 1))
    mixture = estimate_marginal_log_density(model, actions, 1, latent).value
    conditional = log_prob(conditional_heads(model, latent), actions).value
    np.testing.assert_allclose(mixture, conditional, rtol=1e-12, atol=1e-12)


def test_mixture_is_the_log_mean_of_conditionals(model, rng):
    latents = rng.standard_normal((5, 1))
    actions = rng.uniform(-0.9, 0.9, size=(4, 1))
    mixture = estimate_marginal_log_density(model, actions, 5, latents).value
    per_latent = np.stack([
        log_prob(conditional_heads(model, latents[n:n + 1]), actions).value for n in range(5)
    ], axis=1)
    np.testing.assert_allclose(mixture, logsumexp(per_latent, axis=1) - math.log(5), rtol=1e-10, atol=1e-10)


def test_mixture_estimate_is_a_density(model, rng):
    latents = rng.standard_normal((10, 1))

    # integrate over pre-squash values; the Jacobian turns the action density back into a density in u
    def density(u):
        pre_squash = np.array([[u]])
        log_density = marginal_log_density_pre_squash(model, pre_squash, latents).value[0]
        return math.exp(float(log_density + tanh_log_jacobian(engine.constant(pre_squash), 1.0).value[0]))

    total, _ = integrate.quad(density, -np.inf, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_one_dimensional_actions_are_reshaped(model, rng):
    latents = rng.standard_normal((3, 1))
    flat = estimate_marginal_log_density(model, np.array([0.1, -0.2]), 3, latents).value
    column = estimate_marginal_log_density(model, np.array([[0.1], [-0.2]]), 3, latents).value
    np.testing.assert_array_equal(flat, column)


def test_shapes_are_checked(model, rng):
    with pytest.raises(ShapeError):
        estimate_marginal_log_density(model, np.zeros((2, 1)), 4, rng.standard_normal((3, 1)))
    with pytest.raises(ShapeError):
        conditional_heads(model, rng.standard_normal((3, 2)))


def test_nll_gradients_match_finite_differences(model, rng):
    latents = rng.standard_normal((4, 1))
    actions = rng.uniform(-0.8, 0.8, size=(6, 1))
    assert finite_difference_check(lambda: marginal_nll(model, actions, latents), model.parameters()) < 1e-4


def test_fitting_concentrates_on_the_data(model, rng):
    data = np.clip(0.5 + 0.05 * rng.standard_normal((200, 1)), -0.99, 0.99)
    eval_latents = rng.standard_normal((20, 1))
    before = float(marginal_nll(model, data, eval_latents).value)
    optimizer = adam_state(model.parameters(), learning_rate=1e-2)
    for _ in range(300):
        batch = data[rng.integers(0, len(data), size=32)]
        marginal_fit_step(model, batch, optimizer, rng.standard_normal((20, 1)))
    after = float(marginal_nll(model, data, eval_latents).value)
    assert after < before - 0.3


def test_non_finite_loss_aborts_without_update(model, rng):
    optimizer = adam_state(model.parameters())
    before = [p.value.copy() for p in model.parameters()]
    with pytest.raises(TrainingAbortedError) as excinfo:
        marginal_fit_step(model, np.array([[np.nan]]), optimizer, rng.standard_normal((3, 1)))
    assert excinfo.value.loss_name == 'marginal_nll'
    for value, param in zip(before, model.parameters()):
        np.testing.assert_array_equal(value, param.value)


def test_samples_stay_inside_the_box(rng):
    model = build_marginal_model(action_dim=2, hidden_width=8, buffer_capacity=10, rng=rng, bound=2.0)
    samples = sample_marginal(model, rng, 100)
    assert samples.shape == (100, 2)
    assert np.all(np.abs(samples) <= 2.0)
