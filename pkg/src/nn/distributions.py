"""
Diagonal Gaussian squashed by bound * tanh, with reparameterized sampling and
log-densities that include the change-of-variables correction
"""

import math
from dataclasses import dataclass

import numpy as np

from src.errors import ShapeError
from src.nn import engine

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
ATANH_CLIP = 1.0 - 1e-6


@dataclass
class SquashedGaussianHead:
    """mean and (already clamped) log_std are (batch, action_dim) nodes"""
    mean: engine.GradientNode
    log_std: engine.GradientNode
    bound: float = 1.0

    @property
    def action_dim(self):
        return self.mean.shape[-1]


def head_from_output(output, action_dim, bound=1.0, log_std_min=LOG_STD_MIN, log_std_max=LOG_STD_MAX):
    """Split a (batch, 2 * action_dim) network output into mean and clamped log_std"""
    if output.shape[-1] != 2 * action_dim:
        raise ShapeError(f"expected {2 * action_dim} output columns, got {output.shape[-1]}")
    mean = output[:, :action_dim]
    log_std = engine.clip(output[:, action_dim:], log_std_min, log_std_max)
    return SquashedGaussianHead(mean, log_std, bound)


def tanh_log_jacobian(pre_squash, bound):
    """sum_i log(bound * (1 - tanh(u_i)^2)), written as 2 (log 2 - u - softplus(-2u)) for stability"""
    per_dim = 2.0 * (math.log(2.0) - pre_squash - engine.softplus(-2.0 * pre_squash)) + math.log(bound)
    return engine.sum(per_dim, axis=-1)


def gaussian_log_density(head, pre_squash):
    """Diagonal Gaussian log-density of pre-squash values, summed over action dimensions"""
    standardized = (pre_squash - head.mean) * engine.exp(-1.0 * head.log_std)
    per_dim = -0.5 * standardized ** 2 - head.log_std - HALF_LOG_TWO_PI
    return engine.sum(per_dim, axis=-1)


def log_density_pre_squash(head, pre_squash):
    """Density of the squashed action bound * tanh(u), evaluated through u"""
    return gaussian_log_density(head, pre_squash) - tanh_log_jacobian(pre_squash, head.bound)


def rsample(head, noise):
    """Reparameterized sample.

    Returns (action, log_density, pre_squash) with action = bound * tanh(mean + std * noise).
    Gradients reach mean and log_std through the noise path.
    """
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape[-1] != head.action_dim:
        raise ShapeError(f"noise has {noise.shape[-1]} dimensions, head has {head.action_dim}")
    pre_squash = head.mean + engine.exp(head.log_std) * noise
    gaussian = engine.sum(-0.5 * noise ** 2 - head.log_std - HALF_LOG_TWO_PI, axis=-1)
    log_density = gaussian - tanh_log_jacobian(pre_squash, head.bound)
    action = head.bound * engine.tanh(pre_squash)
    return action, log_density, pre_squash


def log_prob(head, action):
    """Log-density of given squashed actions; actions on the bound are pulled slightly inside"""
    scaled = engine.clip(engine.constant(action) * (1.0 / head.bound), -ATANH_CLIP, ATANH_CLIP)
    return log_density_pre_squash(head, engine.atanh(scaled))


def uniform_box_log_density(action_dim, bound=1.0):
    """Log-density of the uniform distribution on [-bound, bound]^action_dim"""
    return -action_dim * math.log(2.0 * bound)
