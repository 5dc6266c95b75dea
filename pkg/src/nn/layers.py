"""
Dense multilayer perceptrons on top of the gradient engine
"""

from dataclasses import dataclass, field

import numpy as np

from src.errors import ContractError, ShapeError
from src.nn import engine

ACTIVATIONS = {
    None: lambda node: node,
    'tanh': engine.tanh,
    'relu': engine.relu
}


@dataclass
class Mlp:
    """Rectified-linear hidden layers, linear (or output_activation) last layer"""
    widths: tuple
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    output_activation: str = None

    def __post_init__(self):
        if self.output_activation not in ACTIVATIONS:
            raise ContractError(f"unknown output activation '{self.output_activation}'")

    @property
    def input_width(self):
        return self.widths[0]

    @property
    def output_width(self):
        return self.widths[-1]

    def parameters(self):
        """Weights and biases layer by layer"""
        params = []
        for weight, bias in zip(self.weights, self.biases):
            params.extend((weight, bias))
        return params

    def parameter_count(self):
        return int(np.sum([p.value.size for p in self.parameters()]))


def init_mlp(widths, rng, output_activation=None):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases"""
    widths = tuple(int(w) for w in widths)
    if len(widths) < 2 or min(widths) < 1:
        raise ShapeError(f"an MLP needs at least two positive widths, got {widths}")
    mlp = Mlp(widths, output_activation=output_activation)
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        mlp.weights.append(engine.parameter(rng.uniform(-bound, bound, size=(fan_in, fan_out))))
        mlp.biases.append(engine.parameter(rng.uniform(-bound, bound, size=(1, fan_out))))
    return mlp


def zero_mlp(widths, output_activation=None):
    mlp = Mlp(tuple(widths), output_activation=output_activation)
    for fan_in, fan_out in zip(mlp.widths[:-1], mlp.widths[1:]):
        mlp.weights.append(engine.parameter(np.zeros((fan_in, fan_out))))
        mlp.biases.append(engine.parameter(np.zeros((1, fan_out))))
    return mlp


def copy_mlp(mlp):
    """Structurally identical network holding copies of the parameter values"""
    clone = Mlp(mlp.widths, output_activation=mlp.output_activation)
    clone.weights = [engine.parameter(w.value.copy()) for w in mlp.weights]
    clone.biases = [engine.parameter(b.value.copy()) for b in mlp.biases]
    return clone


def forward(mlp, inputs, track_parameters=True):
    """Batch forward pass, (batch, input_width) -> (batch, output_width).

    With track_parameters=False the weights enter as constants: gradients still
    reach the inputs but not the network's own parameters.
    """
    x = engine.constant(inputs)
    if x.ndim != 2 or x.shape[1] != mlp.input_width:
        raise ShapeError(f"expected input of shape (batch, {mlp.input_width}), got {x.shape}")
    last = len(mlp.weights) - 1
    for index, (weight, bias) in enumerate(zip(mlp.weights, mlp.biases)):
        if not track_parameters:
            weight, bias = engine.GradientNode(weight.value), engine.GradientNode(bias.value)
        x = x @ weight + bias
        x = engine.relu(x) if index < last else ACTIVATIONS[mlp.output_activation](x)
    return x


def blend_parameters(target, source, rate):
    """target <- (1 - rate) * target + rate * source, parameter by parameter"""
    if not 0.0 < rate <= 1.0:
        raise ContractError(f"blend rate must lie in (0, 1], got {rate}")
    if target.widths != source.widths:
        raise ShapeError(f"cannot blend {target.widths} into {source.widths}")
    for tgt, src in zip(target.parameters(), source.parameters()):
        tgt.value = (1.0 - rate) * tgt.value + rate * src.value
