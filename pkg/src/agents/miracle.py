"""
MIRACLE actor-critic: SAC-style updates where the reference density in the soft value
is the learned marginal action model instead of the uniform density on the action box.

Rewards enter multiplied by reward_scale (beta), so the log-ratio penalty carries unit weight.
"""

import logging
import os
from dataclasses import dataclass

import numpy as np

from src.agents.marginal import (
    build_marginal_model, marginal_fit_step, marginal_log_density_pre_squash
)
from src.agents.replay import ReplayBuffer, stack_transitions
from src.errors import ConfigError, ShapeError, TrainingAbortedError
from src.nn import engine
from src.nn.checkpoint import load_parameters, save_parameters
from src.nn.distributions import LOG_STD_MAX, LOG_STD_MIN, head_from_output, rsample, uniform_box_log_density
from src.nn.layers import blend_parameters, copy_mlp, forward, init_mlp
from src.nn.optim import adam_state, optimizer_step, zero_grad

logger = logging.getLogger(__name__)

PRIOR_MODES = ('learned_marginal', 'fixed_uniform')
RNG_STREAMS = ('env', 'init', 'marginal_init', 'exploration', 'sampling', 'latent', 'marginal_sampling')


@dataclass(frozen=True)
class MiracleConfig:
    reward_scale: float = 10.0
    discount: float = 0.99
    buffer_capacity: int = 1000000
    minibatch: int = 256
    target_rate: float = 0.01
    marginal_sample_count: int = 20
    marginal_buffer_capacity: int = 1000
    prior_mode: str = 'learned_marginal'
    learning_rate: float = 3e-4
    hidden_width: int = 256
    warmup_steps: int = 1000
    log_std_min: float = LOG_STD_MIN
    log_std_max: float = LOG_STD_MAX
    seed: int = 0

    def __post_init__(self):
        if self.prior_mode not in PRIOR_MODES:
            raise ConfigError(f"prior_mode must be one of {PRIOR_MODES}, got '{self.prior_mode}'")
        if not self.reward_scale > 0:
            raise ConfigError("reward_scale must be positive")
        if not 0.0 <= self.discount < 1.0:
            raise ConfigError("discount must lie in [0, 1)")
        if not 0.0 < self.target_rate <= 1.0:
            raise ConfigError("target_rate must lie in (0, 1]")
        if self.marginal_sample_count < 1:
            raise ConfigError("marginal_sample_count must be at least 1")
        for name in ('buffer_capacity', 'minibatch', 'marginal_buffer_capacity', 'hidden_width'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.learning_rate < 0 or self.warmup_steps < 0:
            raise ConfigError("learning_rate and warmup_steps must be non-negative")
        if self.log_std_min >= self.log_std_max:
            raise ConfigError("log_std_min must be below log_std_max")

    @classmethod
    def from_config(cls, section, env_params=None, **overrides):
        """Build from the 'miracle' section; a null marginal buffer capacity falls back to the env entry"""
        values = {key: section[key] for key in cls.__dataclass_fields__ if key in section}
        if values.get('marginal_buffer_capacity') is None:
            values['marginal_buffer_capacity'] = (env_params or {}).get('marginal_buffer_capacity', 1000)
        for key in ('buffer_capacity', 'minibatch', 'marginal_sample_count', 'marginal_buffer_capacity',
                    'hidden_width', 'warmup_steps', 'seed'):
            if key in values:
                values[key] = int(values[key])
        values.update(overrides)
        return cls(**values)


@dataclass
class AgentNetworks:
    policy: object
    q1: object
    q2: object
    value: object
    value_target: object
    action_dim: int
    bound: float = 1.0

    def q_parameters(self):
        return self.q1.parameters() + self.q2.parameters()


def build_agent_networks(state_dim, action_dim, hidden_width, rng, bound=1.0):
    """Policy, twin Q-critics (independent draws), V-critic and its target copy"""
    hidden = (hidden_width, hidden_width)
    policy = init_mlp((state_dim, *hidden, 2 * action_dim), rng)
    q1 = init_mlp((state_dim + action_dim, *hidden, 1), rng)
    q2 = init_mlp((state_dim + action_dim, *hidden, 1), rng)
    value = init_mlp((state_dim, *hidden, 1), rng)
    return AgentNetworks(policy, q1, q2, value, copy_mlp(value), action_dim, bound)


def policy_head(networks, states, cfg, track_parameters=True):
    output = forward(networks.policy, states, track_parameters=track_parameters)
    return head_from_output(output, networks.action_dim, networks.bound, cfg.log_std_min, cfg.log_std_max)


def q_value(q_network, states, actions, track_parameters=True):
    """Q(s, a) as a (batch,) node; actions may be a node carrying gradients to the policy"""
    inputs = engine.concat([engine.constant(states), engine.constant(actions)], axis=-1)
    return engine.reshape(forward(q_network, inputs, track_parameters), (-1,))


def state_value(v_network, states, track_parameters=True):
    return engine.reshape(forward(v_network, states, track_parameters), (-1,))


def min_q(networks, states, actions, track_parameters=True):
    """Elementwise minimum of the twin critics"""
    return engine.minimum(q_value(networks.q1, states, actions, track_parameters),
                          q_value(networks.q2, states, actions, track_parameters))


def soft_value_target(q_min, log_pi, log_prior, penalty_weight=1.0):
    """min Q - penalty_weight * (log pi(a|s) - log prior(a))"""
    return q_min - penalty_weight * (log_pi - log_prior)


def prior_log_density_fn(marginal, cfg, latents):
    """Reference log-density as a function of pre-squash actions.

    fixed_uniform returns the constant log-density of the uniform box. learned_marginal
    evaluates the mixture estimate with the marginal parameters frozen; gradients still
    pass through the action.
    """
    if cfg.prior_mode == 'fixed_uniform':
        log_density = uniform_box_log_density(marginal.action_dim, marginal.bound)
        return lambda pre_squash: log_density
    return lambda pre_squash: marginal_log_density_pre_squash(marginal, pre_squash, latents, track_parameters=False)


def critic_q_loss(networks, batch, cfg):
    """Mean squared error of both twins against beta * r + gamma * V_target(s').

    Only true terminations drop the bootstrap; horizon cut-offs keep it.
    """
    states, actions, rewards, next_states, dones, truncated = batch
    if not (len(states) == len(actions) == len(rewards) == len(next_states)):
        raise ShapeError("transition batch columns have different lengths")
    bootstrap = 1.0 - (dones & ~truncated).astype(np.float64)
    next_values = state_value(networks.value_target, next_states, track_parameters=False).value
    target = cfg.reward_scale * rewards + cfg.discount * bootstrap * next_values
    losses = [engine.mean((q_value(q, states, actions) - target) ** 2) for q in (networks.q1, networks.q2)]
    return 0.5 * (losses[0] + losses[1])


def critic_v_loss(networks, prior_log_density, state_batch, cfg, policy_noise, penalty_weight=1.0):
    """Mean squared error of V_psi(s) against min Q(s, a) - log pi(a|s) + log prior(a), a ~ pi(.|s)"""
    head = policy_head(networks, state_batch, cfg, track_parameters=False)
    action, log_pi, pre_squash = rsample(head, policy_noise)
    target = soft_value_target(
        min_q(networks, state_batch, engine.detach(action), track_parameters=False).value,
        log_pi.value, engine.constant(prior_log_density(engine.detach(pre_squash))).value, penalty_weight
    )
    return engine.mean((state_value(networks.value, state_batch) - target) ** 2)


def actor_objective(networks, prior_log_density, state_batch, cfg, policy_noise, penalty_weight=1.0):
    """mean[min Q(s, a) - log pi(a|s) + log prior(a)] with reparameterized a; only phi is tracked"""
    head = policy_head(networks, state_batch, cfg)
    action, log_pi, pre_squash = rsample(head, policy_noise)
    q = min_q(networks, state_batch, action, track_parameters=False)
    return engine.mean(soft_value_target(q, log_pi, prior_log_density(pre_squash), penalty_weight))


def actor_loss(networks, prior_log_density, state_batch, cfg, policy_noise, penalty_weight=1.0):
    return -1.0 * actor_objective(networks, prior_log_density, state_batch, cfg, policy_noise, penalty_weight)


def target_update(networks, tau):
    """value_target <- (1 - tau) * value_target + tau * value"""
    blend_parameters(networks.value_target, networks.value, tau)
    return networks


def spawn_streams(seed):
    """Independent generators per randomness consumer, derived from one seed"""
    children = np.random.SeedSequence(seed).spawn(len(RNG_STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(RNG_STREAMS, children)}


class MiracleAgent:
    """Networks, optimizers, buffers and random streams of one training run"""

    def __init__(self, state_dim, action_dim, cfg, bound=1.0):
        self.cfg = cfg
        self.streams = spawn_streams(cfg.seed)
        self.networks = build_agent_networks(state_dim, action_dim, cfg.hidden_width, self.streams['init'], bound)
        self.marginal = build_marginal_model(action_dim, cfg.hidden_width, cfg.marginal_buffer_capacity,
                                             self.streams['marginal_init'], bound, cfg.log_std_min, cfg.log_std_max)
        self.replay = ReplayBuffer(cfg.buffer_capacity)
        self.optimizers = {
            'q': adam_state(self.networks.q_parameters(), cfg.learning_rate),
            'v': adam_state(self.networks.value.parameters(), cfg.learning_rate),
            'policy': adam_state(self.networks.policy.parameters(), cfg.learning_rate),
            'marginal': adam_state(self.marginal.parameters(), cfg.learning_rate)
        }
        self.updates = 0

    @property
    def action_dim(self):
        return self.networks.action_dim

    def act(self, observation, explore=False):
        """Uniform action during warm-up, otherwise a sample from pi_phi(.|s)"""
        if explore:
            return self.streams['exploration'].uniform(-1.0, 1.0, size=self.action_dim) * self.networks.bound
        states = np.asarray(observation, dtype=np.float64).reshape(1, -1)
        head = policy_head(self.networks, states, self.cfg, track_parameters=False)
        action, _, _ = rsample(head, self.streams['sampling'].standard_normal((1, self.action_dim)))
        return action.value[0]

    def observe(self, transition):
        self.replay.add(transition)
        self.marginal.buffer.add(np.asarray(transition.action, dtype=np.float64))

    def _step(self, name, loss, params):
        value = float(loss.value)
        if not np.isfinite(value):
            raise TrainingAbortedError(self.updates, name, value)
        zero_grad(params)
        engine.backward(loss)
        optimizer_step(self.optimizers[name.split('_')[0]], params)
        return value

    def update(self):
        """One gradient step on J_theta, J_psi, J_phi and the marginal NLL, then the target blend"""
        cfg = self.cfg
        batch = stack_transitions(self.replay.sample(self.streams['sampling'], cfg.minibatch))
        states = batch[0]
        policy_noise = self.streams['sampling'].standard_normal((len(states), self.action_dim))
        latents = self.streams['latent'].standard_normal((cfg.marginal_sample_count, self.marginal.latent_dim))
        prior = prior_log_density_fn(self.marginal, cfg, latents)

        losses = {
            'q_loss': self._step('q_loss', critic_q_loss(self.networks, batch, cfg), self.networks.q_parameters()),
            'v_loss': self._step('v_loss', critic_v_loss(self.networks, prior, states, cfg, policy_noise),
                                 self.networks.value.parameters()),
            'policy_loss': self._step('policy_loss', actor_loss(self.networks, prior, states, cfg, policy_noise),
                                      self.networks.policy.parameters())
        }
        if cfg.prior_mode == 'learned_marginal':
            actions = np.stack(self.marginal.buffer.sample(self.streams['marginal_sampling'], cfg.minibatch))
            fit_latents = self.streams['latent'].standard_normal((cfg.marginal_sample_count,
                                                                  self.marginal.latent_dim))
            losses['marginal_nll'] = marginal_fit_step(self.marginal, actions, self.optimizers['marginal'],
                                                       fit_latents)
        target_update(self.networks, cfg.target_rate)
        self.updates += 1
        return losses

    def parameter_groups(self):
        return {
            'policy': self.networks.policy.parameters(),
            'q1': self.networks.q1.parameters(),
            'q2': self.networks.q2.parameters(),
            'value': self.networks.value.parameters(),
            'value_target': self.networks.value_target.parameters(),
            'marginal': self.marginal.parameters()
        }

    def save_checkpoint(self, directory, tag):
        os.makedirs(directory, exist_ok=True)
        paths = {}
        for name, params in self.parameter_groups().items():
            paths[name] = save_parameters(os.path.join(directory, f"{tag}_{name}.ckpt"), params)
        return paths

    def load_checkpoint(self, directory, tag):
        for name, params in self.parameter_groups().items():
            load_parameters(os.path.join(directory, f"{tag}_{name}.ckpt"), params)
