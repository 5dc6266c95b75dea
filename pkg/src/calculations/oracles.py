"""
Brute-force reference computations for small instances (|S| <= 3, |A| <= 3).

These deliberately avoid the closed forms in bellman.py: loops instead of
tensor products, simplex grids instead of exponential tilting.
"""

import itertools
import math

import numpy as np

from src.calculations.bellman import soft_values
from src.errors import ContractError


def simplex_grid(n_actions, resolution):
    """All distributions over n_actions outcomes on a regular grid with the given step"""
    steps = int(round(1.0 / resolution))
    if n_actions == 1:
        return np.ones((1, 1))
    points = []
    for head in itertools.product(range(steps + 1), repeat=n_actions - 1):
        rest = steps - sum(head)
        if rest >= 0:
            points.append([h / steps for h in head] + [rest / steps])
    return np.array(points)


def naive_advantage(mdp, values):
    """Triple-loop R(s,a) + gamma sum_s' P(s'|s,a) V(s')"""
    n_states, n_actions = mdp.n_states, mdp.n_actions
    result = np.zeros((n_states, n_actions))
    for s in range(n_states):
        for a in range(n_actions):
            total = 0.0
            for s_next in range(n_states):
                total += mdp.transition[s, a, s_next] * values[s_next]
            result[s, a] = mdp.reward[s, a] + mdp.discount * total
    return result


def row_objective(row, advantage_row, prior, beta):
    """Per-state operator value sum_a pi(a) (adv(a) - (1/beta) log(pi(a)/prior(a)))"""
    total = 0.0
    for prob, adv, ref in zip(row, advantage_row, prior):
        if prob <= 0:
            continue
        if ref <= 0:
            return -math.inf
        total += prob * (adv - math.log(prob / ref) / beta)
    return total


def naive_evaluate(mdp, values, prior, policy, beta):
    """Term-by-term evaluation operator"""
    advantage = naive_advantage(mdp, values)
    return np.array([
        row_objective(policy[s], advantage[s], prior, beta) for s in range(mdp.n_states)
    ])


def best_policy_row(advantage_row, prior, beta, resolution):
    """Best row of the simplex grid for the per-state operator value"""
    grid = simplex_grid(len(advantage_row), resolution)
    scores = [row_objective(row, advantage_row, prior, beta) for row in grid]
    best = int(np.argmax(scores))
    return grid[best], scores[best]


def brute_force_b_star(mdp, values, p, beta, resolution):
    """max over a prior grid of E_p[B_{prior, best response} V].

    The exact best policy response to a prior is the compatible pair, whose value is
    the log-mean-exp of the advantages, so only the prior needs scanning.
    """
    if mdp.n_states > 3 or mdp.n_actions > 3:
        raise ContractError("brute-force oracle is limited to |S|, |A| <= 3")
    advantage = naive_advantage(mdp, values)
    weights = np.asarray(getattr(p, 'probs', p))
    best_value, best_prior = -math.inf, None
    for prior in simplex_grid(mdp.n_actions, resolution):
        value = float(weights @ soft_values(advantage, prior, beta))
        if value > best_value:
            best_value, best_prior = value, prior
    return best_value, best_prior


def averaged_gap(objective_trace, oracle_value, M):
    """(1/M) sum_{m<M} (oracle - objective_m); runs that stopped early repeat their last objective"""
    if M < 1:
        raise ContractError("M must be at least 1")
    last = len(objective_trace) - 1
    gaps = [oracle_value - objective_trace[min(m, last)] for m in range(M)]
    return float(np.mean(gaps))
