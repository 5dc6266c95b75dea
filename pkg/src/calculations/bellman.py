"""
Bellman operators for mutual-information regularized control.

All exponentials are evaluated in the log domain with max-subtraction so that
inverse temperatures up to 1e3 (and beyond) do not overflow.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from src.errors import (
    AbsoluteContinuityError, ContractError, DegeneratePriorError,
    InvariantError, NumericalFailureError, ShapeError
)
from src.models.mdp import ActionPrior, ConditionalPolicy, ValueTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BellmanConfig:
    beta: float = 10.0
    inner_tolerance: float = 5e-3
    outer_tolerance: float = 5e-3
    max_inner_iters: int = 1000
    max_outer_iters: int = 1000
    warm_start_floor: float = 1e-10

    def __post_init__(self):
        if not self.beta > 0:
            raise InvariantError(f"beta must be positive, got {self.beta}")
        if not (self.inner_tolerance > 0 and self.outer_tolerance > 0):
            raise InvariantError("tolerances must be positive")
        if self.max_inner_iters < 1 or self.max_outer_iters < 1:
            raise InvariantError("iteration limits must be positive")
        if not 0.0 <= self.warm_start_floor < 1.0:
            raise InvariantError("warm_start_floor must lie in [0, 1)")

    @classmethod
    def from_config(cls, section, **overrides):
        values = {key: section[key] for key in cls.__dataclass_fields__ if key in section}
        values.update(overrides)
        return cls(**values)

    def with_beta(self, beta):
        return BellmanConfig(beta, self.inner_tolerance, self.outer_tolerance,
                             self.max_inner_iters, self.max_outer_iters, self.warm_start_floor)


@dataclass(frozen=True)
class BaResult:
    """Audit trail of one Blahut-Arimoto application of B*"""
    policy: ConditionalPolicy
    prior: ActionPrior
    iterations: int
    objective_trace: np.ndarray
    gap_bound: float
    converged: bool = True


def _values_of(v):
    return np.asarray(getattr(v, 'values', v), dtype=np.float64)


def _probs_of(distribution):
    return np.asarray(getattr(distribution, 'probs', distribution), dtype=np.float64)


def _check_beta(beta):
    if not beta > 0:
        raise ContractError(f"beta must be positive, got {beta}")


def advantage_matrix(mdp, v):
    """R(s,a) + gamma * sum_s' P(s'|s,a) v(s')"""
    values = _values_of(v)
    if values.shape != (mdp.n_states,):
        raise ShapeError(f"value table has shape {values.shape}, MDP has {mdp.n_states} states")
    return mdp.reward + mdp.discount * (mdp.transition @ values)


def _log_prior(prior_probs):
    log_prior = np.full(prior_probs.shape, -np.inf)
    support = prior_probs > 0
    log_prior[support] = np.log(prior_probs[support])
    return log_prior


def tilted_policy(advantage, prior_probs, beta):
    """pi(a|s) proportional to prior(a) exp(beta * advantage(s, a)), normalized row-wise"""
    _check_beta(beta)
    if advantage.ndim != 2 or prior_probs.shape != (advantage.shape[1],):
        raise ShapeError(f"advantage {advantage.shape} and prior {prior_probs.shape} do not agree")
    logits = _log_prior(prior_probs)[None, :] + beta * advantage
    if np.any(np.all(np.isneginf(logits), axis=1)):
        raise DegeneratePriorError("a policy row has no action left after masking by the prior")
    log_policy = logits - logsumexp(logits, axis=1, keepdims=True)
    return np.exp(log_policy)


def soft_values(advantage, prior_probs, beta):
    """(1/beta) log E_prior[exp(beta * advantage(s, .))] for every state.

    Uses log1p/expm1 when the shifted mean is close to one, which keeps tiny
    inverse temperatures accurate.
    """
    _check_beta(beta)
    if advantage.ndim != 2 or prior_probs.shape != (advantage.shape[1],):
        raise ShapeError(f"advantage {advantage.shape} and prior {prior_probs.shape} do not agree")
    support = prior_probs > 0
    masked = np.where(support[None, :], advantage, -np.inf)
    row_max = masked.max(axis=1, keepdims=True)
    shifted = np.where(support[None, :], beta * (advantage - row_max), -np.inf)
    weights = np.where(support, prior_probs, 0.0)
    mean_exp = np.exp(shifted) @ weights
    mean_expm1 = np.expm1(shifted) @ weights
    with np.errstate(divide='ignore'):
        log_mean = np.where(mean_exp > 0.5, np.log1p(mean_expm1), np.log(mean_exp))
    return row_max[:, 0] + log_mean / beta


def evaluate_operator(mdp, v, prior, policy, beta):
    """B_{prior,pi} V(s) = E_pi[ R - (1/beta) log(pi/prior) + gamma E_P[V] ]"""
    _check_beta(beta)
    advantage = advantage_matrix(mdp, v)
    probs = _probs_of(policy)
    prior_probs = _probs_of(prior)
    if probs.shape != advantage.shape or prior_probs.shape != (advantage.shape[1],):
        raise ShapeError("policy/prior shapes do not match the MDP")
    active = probs > 0
    if np.any(active & (prior_probs[None, :] <= 0)):
        raise AbsoluteContinuityError("policy puts mass on actions with zero prior probability")
    log_ratio = np.zeros_like(probs)
    prior_grid = np.broadcast_to(prior_probs, probs.shape)
    log_ratio[active] = np.log(probs[active]) - np.log(prior_grid[active])
    return ValueTable(np.sum(probs * (advantage - log_ratio / beta), axis=1))


def optimal_policy_step(mdp, v, prior, beta):
    """Closed-form optimal policy for a fixed prior"""
    return ConditionalPolicy(tilted_policy(advantage_matrix(mdp, v), _probs_of(prior), beta))


def concise_bellman(mdp, v, prior, beta):
    """Value of the compatible prior-policy pair: (1/beta) log E_prior[exp(beta * advantage)]"""
    prior_probs = _probs_of(prior)
    if prior_probs.shape != (mdp.n_actions,):
        raise ShapeError(f"prior has shape {prior_probs.shape}, MDP has {mdp.n_actions} actions")
    return ValueTable(soft_values(advantage_matrix(mdp, v), prior_probs, beta))


def standard_backup(mdp, v):
    """Max-backup and the greedy policy (lowest action index wins ties)"""
    advantage = advantage_matrix(mdp, v)
    greedy = np.argmax(advantage, axis=1)
    policy = np.zeros_like(advantage)
    policy[np.arange(mdp.n_states), greedy] = 1.0
    return advantage.max(axis=1), policy


def gap_bound(init, p, beta, M):
    """(1/(M beta)) E_p[max_a log(1/pi0(a|s))]; math.inf when a weighted init row has a zero"""
    _check_beta(beta)
    if M < 1:
        raise ContractError(f"iteration count must be at least 1, got {M}")
    probs = _probs_of(init)
    weights = _probs_of(p)
    if weights.shape != (probs.shape[0],):
        raise ShapeError("init policy and state distribution do not agree")
    relevant = weights > 0
    if np.any(probs[relevant] <= 0):
        logger.warning("initial policy has zero entries, gap bound is infinite")
        return math.inf
    worst = np.max(-np.log(probs[relevant]), axis=1)
    return float(np.dot(weights[relevant], worst)) / (M * beta)


def run_blahut_arimoto(advantage, p_probs, beta, init_probs, tolerance, max_iters, frozen_prior=None):
    """Alternate marginalization and policy tilting on a fixed advantage matrix.

    Returns (policy, prior, objective_trace, converged). The returned prior is the
    one the returned policy was computed from, so the pair is compatible.
    """
    policy = init_probs
    prior_probs = None
    trace = []
    converged = False
    for iteration in range(max_iters):
        prior_probs = frozen_prior if frozen_prior is not None else p_probs @ policy
        new_policy = tilted_policy(advantage, prior_probs, beta)
        objective = float(p_probs @ soft_values(advantage, prior_probs, beta))
        if not (np.isfinite(objective) and np.all(np.isfinite(new_policy))):
            raise NumericalFailureError("Blahut-Arimoto produced non-finite values", iteration=iteration)
        trace.append(objective)
        change = np.max(np.abs(new_policy - policy))
        policy = new_policy
        if change < tolerance:
            converged = True
            break
    return policy, prior_probs, np.array(trace), converged


def apply_b_star(mdp, v, p, cfg, init=None, frozen_prior=None):
    """Apply the MI-regularized operator B* to v with the Blahut-Arimoto scheme.

    init defaults to the uniform policy. With frozen_prior the marginalization step is
    replaced by that fixed prior, which turns B* into the soft Bellman operator.
    """
    advantage = advantage_matrix(mdp, v)
    if not np.all(np.isfinite(advantage)):
        raise NumericalFailureError("advantage matrix is not finite", iteration=0)
    p_probs = _probs_of(p)
    if p_probs.shape != (mdp.n_states,):
        raise ShapeError(f"state distribution has shape {p_probs.shape}, MDP has {mdp.n_states} states")
    if init is None:
        init_probs = np.full((mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)
    else:
        init_probs = _probs_of(init)
        if init_probs.shape != advantage.shape:
            raise ShapeError(f"init policy has shape {init_probs.shape}, expected {advantage.shape}")
    frozen_probs = None if frozen_prior is None else _probs_of(frozen_prior)

    policy, prior_probs, trace, converged = run_blahut_arimoto(
        advantage, p_probs, cfg.beta, init_probs, cfg.inner_tolerance, cfg.max_inner_iters, frozen_probs
    )
    if not converged:
        logger.debug("Blahut-Arimoto stopped after %d iterations without reaching tolerance", len(trace))

    values = soft_values(advantage, prior_probs, cfg.beta)
    if not np.all(np.isfinite(values)):
        raise NumericalFailureError("B* values are not finite", iteration=len(trace))
    result = BaResult(
        policy=ConditionalPolicy(policy),
        prior=frozen_prior if isinstance(frozen_prior, ActionPrior) else ActionPrior(prior_probs),
        iterations=len(trace),
        objective_trace=trace,
        gap_bound=gap_bound(init_probs, p_probs, cfg.beta, len(trace)),
        converged=converged
    )
    return ValueTable(values), result
