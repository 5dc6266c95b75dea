import numpy as np
import pytest

from src.models.mdp import StateDistribution, TabularMdp, ValueTable, build_grid_world, uniform_state_distribution
from src.nn import engine

FD_STEP = 1e-5


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_mdp(rng, n_states, n_actions, discount=0.9):
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return TabularMdp(transition, reward, discount)


def random_instance(rng, n_states=2, n_actions=2):
    mdp = random_mdp(rng, n_states, n_actions)
    values = ValueTable(rng.uniform(-1.0, 1.0, size=n_states))
    p = StateDistribution(rng.dirichlet(np.ones(n_states)))
    return mdp, values, p


@pytest.fixture(scope='session')
def grid_world():
    mdp = build_grid_world()
    return mdp, uniform_state_distribution(mdp)


def relative_error(analytic, numeric):
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)


def finite_difference_check(loss_fn, params, step=FD_STEP, max_entries=None):
    """Worst relative error between backward() gradients and central differences.

    loss_fn builds a fresh scalar loss node from the current parameter values.
    """
    for param in params:
        param.zero_grad()
    engine.backward(loss_fn())
    analytic = [param.gradient.copy() for param in params]

    worst = 0.0
    for param, grad in zip(params, analytic):
        flat = param.value.reshape(-1)
        indices = range(flat.size) if max_entries is None else range(min(flat.size, max_entries))
        for index in indices:
            original = flat[index]
            flat[index] = original + step
            plus = float(loss_fn().value)
            flat[index] = original - step
            minus = float(loss_fn().value)
            flat[index] = original
            numeric = (plus - minus) / (2.0 * step)
            worst = max(worst, float(relative_error(grad.reshape(-1)[index], numeric)))
    return worst
