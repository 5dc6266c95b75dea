"""
Value-iteration drivers: standard, soft (fixed prior) and mutual-information regularized,
plus the beta sweep and the non-sequential rate-distortion problem
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from src.calculations.bellman import (
    advantage_matrix, apply_b_star, concise_bellman, optimal_policy_step, standard_backup
)
from src.calculations.information import marginalize_policy, mutual_information
from src.errors import ContractError, MirlError, NumericalFailureError, ShapeError
from src.models.mdp import (
    ActionPrior, ConditionalPolicy, TabularMdp, ValueTable, uniform_prior
)

logger = logging.getLogger(__name__)


class BackupMode(str, Enum):
    STANDARD = 'standard'
    SOFT = 'soft_fixed_prior'
    MUTUAL_INFORMATION = 'mutual_information'


@dataclass(frozen=True)
class ViResult:
    values: ValueTable
    sweeps: int
    residual_trace: np.ndarray
    final_policy: ConditionalPolicy
    final_prior: ActionPrior
    converged: bool
    mode: BackupMode


def warm_start_policy(policy_probs, floor):
    """Mix the previous sweep's policy with the uniform policy so every action keeps mass"""
    n_actions = policy_probs.shape[1]
    zero_entries = int(np.count_nonzero(policy_probs <= 0.0))
    if zero_entries:
        logger.warning("warm start: flooring %d zero-probability entries with weight %g", zero_entries, floor)
    else:
        logger.debug("warm start: mixing the previous policy with weight %g of uniform", floor)
    return (1.0 - floor) * policy_probs + floor / n_actions


def value_iteration(mdp, p, cfg, mode=BackupMode.STANDARD, prior=None, freeze_prior=None):
    """Iterate a backup from v = 0 until the sup-norm change drops below cfg.outer_tolerance.

    mode STANDARD uses the max-backup, SOFT the concise operator with the fixed prior,
    MUTUAL_INFORMATION applies B* with a Blahut-Arimoto inner loop warm-started from
    the previous sweep's policy. freeze_prior replaces marginalization in the MI mode.
    """
    mode = BackupMode(mode)
    if mode is BackupMode.SOFT and prior is None:
        raise ContractError("soft value iteration needs a fixed prior")
    values = np.zeros(mdp.n_states)
    residuals = []
    converged = False
    ba_result = None

    for sweep in range(cfg.max_outer_iters):
        if mode is BackupMode.STANDARD:
            new_values, _ = standard_backup(mdp, values)
        elif mode is BackupMode.SOFT:
            new_values = concise_bellman(mdp, values, prior, cfg.beta).values
        else:
            init = None if ba_result is None else warm_start_policy(ba_result.policy.probs, cfg.warm_start_floor)
            value_table, ba_result = apply_b_star(mdp, values, p, cfg, init=init, frozen_prior=freeze_prior)
            new_values = value_table.values

        if not np.all(np.isfinite(new_values)):
            raise NumericalFailureError(f"{mode.value} value iteration diverged", iteration=sweep)
        residual = float(np.max(np.abs(new_values - values)))
        residuals.append(residual)
        values = new_values
        if residual < cfg.outer_tolerance:
            converged = True
            break

    if not converged:
        logger.warning("%s value iteration did not converge in %d sweeps (last residual %.3e)",
                       mode.value, cfg.max_outer_iters, residuals[-1])

    if mode is BackupMode.STANDARD:
        _, greedy = standard_backup(mdp, values)
        final_policy = ConditionalPolicy(greedy)
        final_prior = marginalize_policy(final_policy, p)
    elif mode is BackupMode.SOFT:
        final_policy = optimal_policy_step(mdp, values, prior, cfg.beta)
        final_prior = prior
    else:
        final_policy, final_prior = ba_result.policy, ba_result.prior

    return ViResult(
        values=ValueTable(values),
        sweeps=len(residuals),
        residual_trace=np.array(residuals),
        final_policy=final_policy,
        final_prior=final_prior,
        converged=converged,
        mode=mode
    )


def policy_evaluation(mdp, policy, prior, beta, cfg):
    """Fixed point of the evaluation operator B_{prior,pi}; beta=None evaluates without penalty"""
    probs = np.asarray(getattr(policy, 'probs', policy))
    if probs.shape != (mdp.n_states, mdp.n_actions):
        raise ShapeError(f"policy has shape {probs.shape}, MDP is {mdp.n_states}x{mdp.n_actions}")
    prior_probs = None if prior is None else np.asarray(getattr(prior, 'probs', prior))
    penalty = np.zeros_like(probs)
    if beta is not None:
        active = probs > 0
        ratio = np.broadcast_to(prior_probs, probs.shape)
        penalty[active] = (np.log(probs[active]) - np.log(ratio[active])) / beta

    values = np.zeros(mdp.n_states)
    for sweep in range(cfg.max_outer_iters):
        new_values = np.sum(probs * (advantage_matrix(mdp, values) - penalty), axis=1)
        residual = np.max(np.abs(new_values - values))
        values = new_values
        if not np.all(np.isfinite(values)):
            raise NumericalFailureError("policy evaluation diverged", iteration=sweep)
        if residual < cfg.outer_tolerance:
            break
    return ValueTable(values)


def beta_sweep(mdp, p, betas, cfg):
    """Soft (uniform prior) and MI-regularized value iteration for every beta.

    Returns a DataFrame with one row per (beta, mode). A failing row records the
    error and the sweep continues.
    """
    if len(betas) == 0:
        raise ContractError("beta sweep needs at least one beta")
    prior = uniform_prior(mdp.n_actions)
    weights = np.asarray(p.probs)
    rows = []
    for beta in betas:
        beta_cfg = cfg.with_beta(float(beta))
        for mode in (BackupMode.SOFT, BackupMode.MUTUAL_INFORMATION):
            row = {'beta': float(beta), 'mode': mode.value}
            try:
                result = value_iteration(mdp, p, beta_cfg, mode=mode, prior=prior)
                row.update({
                    'expected_value': float(weights @ result.values.values),
                    'mean_value': float(np.mean(result.values.values)),
                    'mutual_information': mutual_information(result.final_policy, p),
                    'converged': result.converged,
                    'sweeps': result.sweeps,
                    'error': ''
                })
            except MirlError as exc:
                logger.error("beta=%g mode=%s failed: %s", beta, mode.value, exc)
                row.update({
                    'expected_value': np.nan, 'mean_value': np.nan, 'mutual_information': np.nan,
                    'converged': False, 'sweeps': 0, 'error': str(exc)
                })
            logger.info("beta=%-8g %-18s E_p[V]=%.4f", beta, mode.value, row['expected_value'])
            rows.append(row)
    return pd.DataFrame(rows, columns=[
        'beta', 'mode', 'expected_value', 'mean_value', 'mutual_information', 'converged', 'sweeps', 'error'
    ])


def rate_distortion_solve(reward, p, beta, cfg):
    """Non-sequential MI-regularized problem: one B* application with v = 0 on a self-loop wrapper"""
    reward = np.asarray(reward, dtype=np.float64)
    if reward.ndim != 2:
        raise ShapeError(f"reward must be a matrix, got shape {reward.shape}")
    n_states, n_actions = reward.shape
    transition = np.zeros((n_states, n_actions, n_states))
    for state in range(n_states):
        transition[state, :, state] = 1.0
    wrapper = TabularMdp(transition, reward, discount=0.5)
    _, result = apply_b_star(wrapper, np.zeros(n_states), p, cfg.with_beta(beta))
    return result
