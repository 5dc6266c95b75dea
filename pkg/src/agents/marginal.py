"""
Learned marginal action model: a network maps standard-normal latents u to a squashed
Gaussian over actions, and the marginal density is the N-sample mixture over u.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.agents.replay import ReplayBuffer
from src.errors import ShapeError, TrainingAbortedError
from src.nn import engine
from src.nn.distributions import (
    ATANH_CLIP, LOG_STD_MAX, LOG_STD_MIN, head_from_output, rsample, tanh_log_jacobian
)
from src.nn.layers import forward, init_mlp
from src.nn.optim import optimizer_step, zero_grad

logger = logging.getLogger(__name__)


@dataclass
class MarginalPolicyModel:
    network: object
    buffer: ReplayBuffer
    action_dim: int
    bound: float = 1.0
    log_std_min: float = LOG_STD_MIN
    log_std_max: float = LOG_STD_MAX

    @property
    def latent_dim(self):
        return self.action_dim

    def parameters(self):
        return self.network.parameters()


def build_marginal_model(action_dim, hidden_width, buffer_capacity, rng, bound=1.0,
                         log_std_min=LOG_STD_MIN, log_std_max=LOG_STD_MAX):
    network = init_mlp((action_dim, hidden_width, hidden_width, 2 * action_dim), rng)
    return MarginalPolicyModel(network, ReplayBuffer(buffer_capacity), action_dim, bound, log_std_min, log_std_max)


def conditional_heads(model, latents, track_parameters=True):
    """Squashed-Gaussian heads pi_chi(.|u_n) for a (N, latent_dim) latent batch"""
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[1] != model.latent_dim:
        raise ShapeError(f"latent batch must have shape (N, {model.latent_dim}), got {latents.shape}")
    output = forward(model.network, latents, track_parameters=track_parameters)
    return head_from_output(output, model.action_dim, model.bound, model.log_std_min, model.log_std_max)


def marginal_log_density_pre_squash(model, pre_squash, latents, track_parameters=True):
    """log (1/N) sum_n pi_chi(a | u_n) for a = bound * tanh(pre_squash), shape (batch,)"""
    pre_squash = engine.constant(pre_squash)
    heads = conditional_heads(model, latents, track_parameters)
    batch, count = pre_squash.shape[0], heads.mean.shape[0]
    u = engine.reshape(pre_squash, (batch, 1, model.action_dim))
    mean = engine.reshape(heads.mean, (1, count, model.action_dim))
    log_std = engine.reshape(heads.log_std, (1, count, model.action_dim))
    standardized = (u - mean) * engine.exp(-1.0 * log_std)
    component = engine.sum(-0.5 * standardized ** 2 - log_std - 0.5 * math.log(2.0 * math.pi), axis=-1)
    mixture = engine.logsumexp(component, axis=1) - math.log(count)
    return mixture - tanh_log_jacobian(pre_squash, model.bound)


def estimate_marginal_log_density(model, action, N, noise_batch, track_parameters=True):
    """N-sample mixture estimate of log pi_chi(action) for a (batch, action_dim) action array"""
    noise_batch = np.asarray(noise_batch, dtype=np.float64)
    if noise_batch.shape[0] != N:
        raise ShapeError(f"expected {N} latent samples, got {noise_batch.shape[0]}")
    action = engine.constant(action)
    if action.ndim == 1:
        action = engine.reshape(action, (-1, model.action_dim))
    scaled = engine.clip(action * (1.0 / model.bound), -ATANH_CLIP, ATANH_CLIP)
    return marginal_log_density_pre_squash(model, engine.atanh(scaled), noise_batch, track_parameters)


def marginal_nll(model, actions, latents):
    """-mean estimated log-density of the action minibatch"""
    return -1.0 * engine.mean(estimate_marginal_log_density(model, actions, len(latents), latents))


def marginal_fit_step(model, action_minibatch, optimizer, latents):
    """One maximum-likelihood step on the marginal model; returns the negative log-likelihood"""
    params = model.parameters()
    zero_grad(params)
    loss = marginal_nll(model, np.asarray(action_minibatch, dtype=np.float64), latents)
    value = float(loss.value)
    if not np.isfinite(value):
        raise TrainingAbortedError(optimizer.step, 'marginal_nll', value)
    engine.backward(loss)
    optimizer_step(optimizer, params)
    return value


def sample_marginal(model, rng, count):
    """Draw actions from the marginal: u ~ N(0, I), then a ~ pi_chi(.|u)"""
    latents = rng.standard_normal((count, model.latent_dim))
    heads = conditional_heads(model, latents, track_parameters=False)
    action, _, _ = rsample(heads, rng.standard_normal((count, model.action_dim)))
    return action.value
