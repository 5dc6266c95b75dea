"""
Finite MDPs, probability tables over states/actions, and the grid-world constructor
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.errors import InvalidSpecError, InvariantError, ShapeError

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-12
RENORMALIZE_TOLERANCE = 1e-9

ACTIONS = ('left', 'right', 'up', 'down', 'stay')
ACTION_MOVES = {
    'left': (-1, 0),
    'right': (1, 0),
    'up': (0, 1),
    'down': (0, -1),
    'stay': (0, 0)
}


def checked_probabilities(values, name):
    """Validate a probability table along its last axis.

    Rows whose sum is off by at most 1e-9 are renormalized, larger deviations raise.
    Returns a read-only float64 copy.
    """
    probs = np.array(values, dtype=np.float64)
    if probs.ndim == 0 or probs.shape[-1] == 0:
        raise ShapeError(f"{name} must have at least one outcome")
    if not np.all(np.isfinite(probs)):
        raise InvariantError(f"{name} contains non-finite entries")
    if np.any(probs < -PROBABILITY_TOLERANCE) or np.any(probs > 1.0 + RENORMALIZE_TOLERANCE):
        raise InvariantError(f"{name} has entries outside [0, 1]")
    probs = np.clip(probs, 0.0, None)
    sums = probs.sum(axis=-1, keepdims=True)
    deviation = np.max(np.abs(sums - 1.0))
    if deviation > RENORMALIZE_TOLERANCE:
        raise InvariantError(f"{name} rows must sum to 1 (max deviation {deviation:.3e})")
    if deviation > 0.0:
        probs = probs / sums
    probs.setflags(write=False)
    return probs


def _frozen(array):
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ConditionalPolicy:
    """Row-stochastic S x A matrix pi(a|s)"""
    probs: np.ndarray

    def __post_init__(self):
        probs = checked_probabilities(self.probs, 'policy')
        if probs.ndim != 2:
            raise ShapeError(f"policy must be a matrix, got shape {probs.shape}")
        object.__setattr__(self, 'probs', probs)

    @property
    def n_states(self):
        return self.probs.shape[0]

    @property
    def n_actions(self):
        return self.probs.shape[1]


@dataclass(frozen=True)
class ActionPrior:
    """State-unconditioned action distribution"""
    probs: np.ndarray

    def __post_init__(self):
        probs = checked_probabilities(self.probs, 'action prior')
        if probs.ndim != 1:
            raise ShapeError(f"action prior must be a vector, got shape {probs.shape}")
        object.__setattr__(self, 'probs', probs)

    @property
    def n_actions(self):
        return self.probs.shape[0]


@dataclass(frozen=True)
class StateDistribution:
    """Policy-independent state weighting p(s)"""
    probs: np.ndarray

    def __post_init__(self):
        probs = checked_probabilities(self.probs, 'state distribution')
        if probs.ndim != 1:
            raise ShapeError(f"state distribution must be a vector, got shape {probs.shape}")
        object.__setattr__(self, 'probs', probs)

    @property
    def n_states(self):
        return self.probs.shape[0]


@dataclass(frozen=True)
class ValueTable:
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise ShapeError(f"value table must be a vector, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvariantError("value table contains non-finite entries")
        object.__setattr__(self, 'values', values)

    @property
    def n_states(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP with transition tensor [S][A][S], reward matrix [S][A] and discount"""
    transition: np.ndarray
    reward: np.ndarray
    discount: float
    terminal_mask: np.ndarray = None

    def __post_init__(self):
        transition = checked_probabilities(self.transition, 'transition')
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise ShapeError(f"transition must have shape [S][A][S], got {transition.shape}")
        n_states, n_actions = transition.shape[:2]
        reward = _frozen(self.reward)
        if reward.shape != (n_states, n_actions):
            raise ShapeError(f"reward must have shape ({n_states}, {n_actions}), got {reward.shape}")
        if not np.all(np.isfinite(reward)):
            raise InvariantError("rewards must be finite")
        if not 0.0 < self.discount < 1.0:
            raise InvariantError(f"discount must lie strictly inside (0, 1), got {self.discount}")
        if self.terminal_mask is None:
            terminal_mask = np.zeros(n_states, dtype=bool)
        else:
            terminal_mask = np.array(self.terminal_mask, dtype=bool)
        if terminal_mask.shape != (n_states,):
            raise ShapeError(f"terminal mask must have {n_states} entries")
        for state in np.flatnonzero(terminal_mask):
            if not np.all(transition[state, :, state] == 1.0) or np.any(reward[state] != 0.0):
                raise InvariantError(f"terminal state {state} must self-loop with zero reward")
        terminal_mask.setflags(write=False)
        object.__setattr__(self, 'transition', transition)
        object.__setattr__(self, 'reward', reward)
        object.__setattr__(self, 'discount', float(self.discount))
        object.__setattr__(self, 'terminal_mask', terminal_mask)

    @property
    def n_states(self):
        return self.transition.shape[0]

    @property
    def n_actions(self):
        return self.transition.shape[1]


def uniform_policy(n_states, n_actions):
    return ConditionalPolicy(np.full((n_states, n_actions), 1.0 / n_actions))


def uniform_prior(n_actions):
    return ActionPrior(np.full(n_actions, 1.0 / n_actions))


def uniform_state_distribution(mdp):
    """Uniform weighting over all non-terminal states"""
    weights = (~mdp.terminal_mask).astype(np.float64)
    if weights.sum() == 0:
        raise InvariantError("MDP has no non-terminal states")
    return StateDistribution(weights / weights.sum())


def permute_mdp(mdp, state_order, action_order=None):
    """Relabel states (and optionally actions); new state i is old state state_order[i]"""
    state_order = np.asarray(state_order)
    action_order = np.arange(mdp.n_actions) if action_order is None else np.asarray(action_order)
    transition = mdp.transition[state_order][:, action_order][:, :, state_order]
    reward = mdp.reward[state_order][:, action_order]
    return TabularMdp(transition, reward, mdp.discount, mdp.terminal_mask[state_order])


@dataclass(frozen=True)
class GridWorldSpec:
    width: int = 16
    height: int = 16
    goal: tuple = (0, 0)
    step_reward: float = -1.0
    goal_reward: float = 9.0
    discount: float = 0.9
    actions: tuple = field(default=ACTIONS)

    @classmethod
    def from_config(cls, section):
        """Build a grid description from the 'grid_world' config section"""
        return cls(
            width=int(section['width']),
            height=int(section['height']),
            goal=tuple(int(c) for c in section['goal']),
            step_reward=float(section['step_reward']),
            goal_reward=float(section['goal_reward']),
            discount=float(section['discount'])
        )

    @property
    def n_cells(self):
        return self.width * self.height

    @property
    def terminal_state(self):
        return self.n_cells


def cell_to_state(grid, x, y):
    return y * grid.width + x


def state_to_cell(grid, state):
    return state % grid.width, state // grid.width


def manhattan_distance_to_goal(grid, state):
    x, y = state_to_cell(grid, state)
    return abs(x - grid.goal[0]) + abs(y - grid.goal[1])


def build_grid_world(grid=None):
    """Build the deterministic grid-world MDP.

    One state per cell plus one absorbing terminal state. Acting in the goal cell
    pays goal_reward and moves to the terminal; every other cell pays step_reward
    and moves according to the action, staying in place when blocked by a wall.
    """
    grid = grid or GridWorldSpec()
    if grid.width <= 0 or grid.height <= 0:
        raise InvalidSpecError(f"grid dimensions must be positive, got {grid.width}x{grid.height}")
    goal_x, goal_y = grid.goal
    if not (0 <= goal_x < grid.width and 0 <= goal_y < grid.height):
        raise InvalidSpecError(f"goal {grid.goal} lies outside the {grid.width}x{grid.height} grid")
    unknown = [a for a in grid.actions if a not in ACTION_MOVES]
    if unknown:
        raise InvalidSpecError(f"unknown actions {unknown}")

    n_states = grid.n_cells + 1
    n_actions = len(grid.actions)
    terminal = grid.terminal_state
    goal_state = cell_to_state(grid, goal_x, goal_y)

    transition = np.zeros((n_states, n_actions, n_states))
    reward = np.zeros((n_states, n_actions))

    for state in range(grid.n_cells):
        x, y = state_to_cell(grid, state)
        for action_index, action in enumerate(grid.actions):
            if state == goal_state:
                transition[state, action_index, terminal] = 1.0
                reward[state, action_index] = grid.goal_reward
                continue
            dx, dy = ACTION_MOVES[action]
            nx, ny = x + dx, y + dy
            if not (0 <= nx < grid.width and 0 <= ny < grid.height):
                nx, ny = x, y
            transition[state, action_index, cell_to_state(grid, nx, ny)] = 1.0
            reward[state, action_index] = grid.step_reward

    transition[terminal, :, terminal] = 1.0
    terminal_mask = np.zeros(n_states, dtype=bool)
    terminal_mask[terminal] = True

    logger.debug("built %dx%d grid world with goal %s", grid.width, grid.height, grid.goal)
    return TabularMdp(transition, reward, grid.discount, terminal_mask)


def export_mdp(mdp, path):
    """Write the MDP as flat decimal text.

    Line 1 holds "S A gamma"; then S*A transition rows (state-major, action-minor,
    S entries each) and S reward rows (A entries each).
    """
    def fmt(row):
        return ' '.join(f"{value:.17g}" for value in row)

    lines = [f"{mdp.n_states} {mdp.n_actions} {mdp.discount:.17g}"]
    for state in range(mdp.n_states):
        for action in range(mdp.n_actions):
            lines.append(fmt(mdp.transition[state, action]))
    for state in range(mdp.n_states):
        lines.append(fmt(mdp.reward[state]))
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write('\n'.join(lines) + '\n')
    return path


def load_mdp(path):
    """Read an MDP written by export_mdp; terminal states are recovered from the tables"""
    with open(path, 'r', encoding='utf-8') as handle:
        rows = [line.split() for line in handle if line.strip()]
    try:
        n_states, n_actions, discount = int(rows[0][0]), int(rows[0][1]), float(rows[0][2])
        body = np.array([[float(v) for v in row] for row in rows[1:1 + n_states * n_actions]])
        transition = body.reshape(n_states, n_actions, n_states)
        reward = np.array([[float(v) for v in row] for row in rows[1 + n_states * n_actions:]])
    except (IndexError, ValueError) as exc:
        raise ShapeError(f"malformed MDP file {path}: {exc}") from exc
    terminal_mask = np.array([
        np.all(transition[s, :, s] == 1.0) and np.all(reward[s] == 0.0) for s in range(n_states)
    ])
    return TabularMdp(transition, reward, discount, terminal_mask)
