"""
Information-theoretic primitives on policies: marginalization, KL divergence,
mutual information between states and actions
"""

import math

import numpy as np

from src.errors import ShapeError
from src.models.mdp import ActionPrior


def _as_array(distribution):
    return np.asarray(getattr(distribution, 'probs', distribution), dtype=np.float64)


def marginalize_policy(policy, p):
    """Return the marginal action distribution sum_s pi(a|s) p(s)"""
    probs = _as_array(policy)
    weights = _as_array(p)
    if probs.ndim != 2 or weights.shape != (probs.shape[0],):
        raise ShapeError(f"policy {probs.shape} and state distribution {weights.shape} do not agree")
    return ActionPrior(weights @ probs)


def kl_divergence(p, q):
    """KL(p || q) with the 0 log 0 = 0 convention; math.inf when p is not absolutely continuous w.r.t. q"""
    p = _as_array(p)
    q = _as_array(q)
    if p.shape != q.shape:
        raise ShapeError(f"distributions have different shapes {p.shape} and {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        return math.inf
    return max(float(np.sum(p[support] * (np.log(p[support]) - np.log(q[support])))), 0.0)


def row_kl_divergences(policy, prior):
    """KL(pi(.|s) || prior) for every state; inf entries flag support violations"""
    probs = _as_array(policy)
    prior = _as_array(prior)
    if probs.ndim != 2 or prior.shape != (probs.shape[1],):
        raise ShapeError(f"policy {probs.shape} and prior {prior.shape} do not agree")
    return np.array([kl_divergence(row, prior) for row in probs])


def expected_kl(policy, prior, p):
    """E_p[ KL(pi(.|s) || prior) ]"""
    weights = _as_array(p)
    divergences = row_kl_divergences(policy, prior)
    if weights.shape != divergences.shape:
        raise ShapeError(f"state distribution {weights.shape} does not match policy rows")
    support = weights > 0
    return float(np.dot(weights[support], divergences[support]))


def expected_conditional_kl(policy_a, policy_b, p):
    """E_p[ KL(pi_a(.|s) || pi_b(.|s)) ]"""
    probs_a = _as_array(policy_a)
    probs_b = _as_array(policy_b)
    weights = _as_array(p)
    if probs_a.shape != probs_b.shape or weights.shape != (probs_a.shape[0],):
        raise ShapeError("policies and state distribution do not agree")
    total = 0.0
    for weight, row_a, row_b in zip(weights, probs_a, probs_b):
        if weight > 0:
            total += weight * kl_divergence(row_a, row_b)
    return total


def mutual_information(policy, p):
    """I(S; A) under p: the expected KL between each policy row and the marginal"""
    marginal = marginalize_policy(policy, p)
    return expected_kl(policy, marginal, p)
