"""
Adam-style optimizer with bias-corrected first and second moments
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.errors import ContractError, NonFiniteGradientError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moments: list = field(default_factory=list)
    second_moments: list = field(default_factory=list)


def adam_state(parameters, learning_rate=3e-4):
    if learning_rate < 0:
        raise ContractError(f"learning rate must be non-negative, got {learning_rate}")
    return OptimizerState(
        learning_rate=learning_rate,
        first_moments=[np.zeros_like(p.value) for p in parameters],
        second_moments=[np.zeros_like(p.value) for p in parameters]
    )


def optimizer_step(state, params, grads=None):
    """One Adam update of the parameter nodes in place.

    grads defaults to the gradients stored on the nodes. A non-finite gradient rejects
    the whole step: neither parameters nor moments change.
    """
    grads = [p.gradient for p in params] if grads is None else [np.asarray(g, dtype=np.float64) for g in grads]
    if len(params) != len(state.first_moments) or len(grads) != len(params):
        raise ShapeError("parameters, gradients and optimizer moments do not line up")
    for index, (param, grad) in enumerate(zip(params, grads)):
        if grad.shape != param.value.shape:
            raise ShapeError(f"gradient #{index} has shape {grad.shape}, parameter has {param.value.shape}")
        if not np.all(np.isfinite(grad)):
            logger.error("rejecting optimizer step %d: gradient #%d is not finite", state.step + 1, index)
            raise NonFiniteGradientError(index)

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for index, (param, grad) in enumerate(zip(params, grads)):
        state.first_moments[index] = state.beta1 * state.first_moments[index] + (1.0 - state.beta1) * grad
        state.second_moments[index] = state.beta2 * state.second_moments[index] + (1.0 - state.beta2) * grad ** 2
        m_hat = state.first_moments[index] / correction1
        v_hat = state.second_moments[index] / correction2
        param.value = param.value - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params


def zero_grad(params):
    for param in params:
        param.zero_grad()
