"""
Small continuous-control environments with a [-1, 1] action box.

point_mass: a 1-D double integrator that has to be steered to the origin.
pendulum_like: torque-limited swing-up of a rod with theta = 0 upright.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from config.settings import ENVIRONMENTS
from src.errors import ConfigError, ContractError, ShapeError

logger = logging.getLogger(__name__)

ACTION_BOUND = 1.0


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool
    truncated: bool = False


class ContinuousEnv:
    """Episodic environment driven by a dynamics rule on an internal physical state.

    step() expects actions inside the box; out-of-box actions are clipped and counted.
    Episodes end exactly at the horizon (done and truncated are both set).
    """

    def __init__(self, name, state_dim, action_dim, horizon, reward_bound, initial_state, dynamics,
                 observe, params, seed=0):
        self.name = name
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.horizon = int(horizon)
        self.reward_bound = reward_bound
        self.params = params
        self.seed = seed
        self.clipped_actions = 0
        self._initial_state = initial_state
        self._dynamics = dynamics
        self._observe = observe
        self._rng = np.random.default_rng(seed)
        self._physical = None
        self._t = 0

    @property
    def physical_state(self):
        return None if self._physical is None else self._physical.copy()

    def reset(self, physical_state=None):
        """Start an episode from a random (or the given) physical state"""
        if physical_state is None:
            self._physical = self._initial_state(self._rng, self.params)
        else:
            self._physical = np.array(physical_state, dtype=np.float64)
        self._t = 0
        return self._observe(self._physical)

    def clip_action(self, action):
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape != (self.action_dim,):
            raise ShapeError(f"{self.name} expects {self.action_dim} action dimensions, got {action.shape}")
        clipped = np.clip(action, -ACTION_BOUND, ACTION_BOUND)
        if np.any(clipped != action):
            self.clipped_actions += 1
        return clipped

    def step(self, action):
        """Return (observation, reward, done, truncated)"""
        if self._physical is None:
            raise ContractError(f"{self.name}: call reset() before step()")
        action = self.clip_action(action)
        self._physical, reward = self._dynamics(self._physical, action, self.params)
        if not np.all(np.isfinite(self._physical)):
            raise ContractError(f"{self.name} produced a non-finite state")
        reward = float(np.clip(reward, -self.reward_bound, self.reward_bound))
        self._t += 1
        done = self._t >= self.horizon
        observation = self._observe(self._physical)
        if done:
            self._physical = None
        return observation, reward, done, done


def _env_params(name, params):
    merged = dict(ENVIRONMENTS[name])
    if params:
        merged.update(params)
    return merged


def _point_mass_initial(rng, params):
    return np.array([rng.uniform(-1.0, 1.0), 0.0])


def _point_mass_dynamics(state, action, params):
    position, velocity = state
    force = action[0]
    dt = params['dt']
    reward = -(position ** 2 + params['action_cost'] * force ** 2)
    next_position = np.clip(position + dt * velocity, -params['position_limit'], params['position_limit'])
    next_velocity = np.clip(velocity + dt * force, -params['velocity_limit'], params['velocity_limit'])
    return np.array([next_position, next_velocity]), reward


def point_mass_env(seed=0, params=None):
    """x' = x + dt v, v' = v + dt a (explicit Euler); reward -(x^2 + 0.1 a^2)"""
    params = _env_params('point_mass', params)
    bound = params['position_limit'] ** 2 + params['action_cost'] * ACTION_BOUND ** 2
    return ContinuousEnv(
        'point_mass', state_dim=2, action_dim=1, horizon=params['horizon'], reward_bound=bound,
        initial_state=_point_mass_initial, dynamics=_point_mass_dynamics,
        observe=lambda state: state.copy(), params=params, seed=seed
    )


def angle_normalize(theta):
    return ((theta + math.pi) % (2.0 * math.pi)) - math.pi


def _pendulum_initial(rng, params):
    return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)])


def _pendulum_acceleration(theta, theta_dot, torque, params):
    g, m, l = params['gravity'], params['mass'], params['length']
    return 3.0 * g / (2.0 * l) * math.sin(theta) + 3.0 / (m * l ** 2) * torque - params['damping'] * theta_dot


def _pendulum_dynamics(state, action, params):
    theta, theta_dot = state
    torque = params['max_torque'] * action[0]
    reward = -(angle_normalize(theta) ** 2 + params['velocity_cost'] * theta_dot ** 2
               + params['action_cost'] * action[0] ** 2)
    h = params['dt'] / params['substeps']
    for _ in range(int(params['substeps'])):
        # semi-implicit Euler: velocity first, then position with the new velocity
        theta_dot += h * _pendulum_acceleration(theta, theta_dot, torque, params)
        theta_dot = float(np.clip(theta_dot, -params['max_speed'], params['max_speed']))
        theta += h * theta_dot
    return np.array([theta, theta_dot]), reward


def _pendulum_observe(state):
    theta, theta_dot = state
    return np.array([math.cos(theta), math.sin(theta), theta_dot])


def pendulum_like_env(seed=0, params=None):
    """Rod swing-up; observation (cos theta, sin theta, theta_dot), torque = max_torque * action.

    reward -(theta^2 + velocity_cost theta_dot^2 + action_cost a^2) charges the action a in the
    [-1, 1] box, not the torque it is scaled to.
    """
    params = _env_params('pendulum_like', params)
    bound = (math.pi ** 2 + params['velocity_cost'] * params['max_speed'] ** 2
             + params['action_cost'] * ACTION_BOUND ** 2)
    return ContinuousEnv(
        'pendulum_like', state_dim=3, action_dim=1, horizon=params['horizon'], reward_bound=bound,
        initial_state=_pendulum_initial, dynamics=_pendulum_dynamics,
        observe=_pendulum_observe, params=params, seed=seed
    )


def pendulum_energy(params, physical_state):
    """Kinetic plus potential energy of the rod (pivot at the origin, theta = 0 upright)"""
    theta, theta_dot = physical_state
    m, l = params['mass'], params['length']
    return 0.5 * m * l ** 2 / 3.0 * theta_dot ** 2 + m * params['gravity'] * l / 2.0 * math.cos(theta)


ENV_BUILDERS = {
    'point_mass': point_mass_env,
    'pendulum_like': pendulum_like_env
}


def make_env(name, seed=0, params=None):
    if name not in ENV_BUILDERS:
        raise ConfigError(f"unknown environment '{name}', expected one of {sorted(ENV_BUILDERS)}")
    return ENV_BUILDERS[name](seed=seed, params=params)


def rollout(env, policy, steps, initial_state=None):
    """Run policy(observation) -> action for the given number of steps, resetting on done"""
    if steps < 1:
        raise ContractError(f"rollout needs at least one step, got {steps}")
    clipped_before = env.clipped_actions
    transitions = []
    observation = env.reset(initial_state)
    for _ in range(steps):
        action = env.clip_action(policy(observation))
        next_observation, reward, done, truncated = env.step(action)
        transitions.append(Transition(observation, action, reward, next_observation, done, truncated))
        observation = env.reset() if done else next_observation
    clipped = env.clipped_actions - clipped_before
    if clipped:
        logger.warning("%s rollout: %d out-of-bounds actions were clipped", env.name, clipped)
    return transitions


def episode_returns(transitions):
    """Undiscounted return of every completed episode"""
    returns, total = [], 0.0
    for transition in transitions:
        total += transition.reward
        if transition.done:
            returns.append(total)
            total = 0.0
    return returns


def trajectory_frame(transitions):
    """One row per transition: step, state_i..., action_j..., reward, done"""
    rows = []
    for step, transition in enumerate(transitions):
        row = {'step': step}
        row.update({f'state_{i}': value for i, value in enumerate(transition.state)})
        row.update({f'action_{j}': value for j, value in enumerate(transition.action)})
        row['reward'] = transition.reward
        row['done'] = transition.done
        rows.append(row)
    return pd.DataFrame(rows)
