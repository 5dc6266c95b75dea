"""
Reverse-mode gradient engine over numpy arrays.

Every operation returns a new GradientNode that remembers its parents and a closure
pushing the output gradient back to them. backward() walks the graph in reverse
topological order, so a node reached through several paths accumulates all of them.
"""

import numpy as np
from scipy.special import expit, logsumexp as _logsumexp

from src.errors import ContractError, ShapeError


class GradientNode:
    """A value in the computation graph together with d(loss)/d(value)"""
    __slots__ = ('value', 'gradient', 'requires_grad', '_parents', '_backward', '_op')
    # make numpy arrays defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, requires_grad=False, _parents=(), _op=''):
        self.value = np.asarray(value, dtype=np.float64)
        self.gradient = np.zeros_like(self.value)
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = None
        self._op = _op

    def __repr__(self):
        return f"GradientNode(shape={self.value.shape}, op='{self._op}', requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def zero_grad(self):
        self.gradient = np.zeros_like(self.value)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


def parameter(value):
    """Leaf node that collects gradients"""
    return GradientNode(np.array(value, dtype=np.float64), requires_grad=True)


def constant(value):
    return value if isinstance(value, GradientNode) else GradientNode(value)


def _unbroadcast(gradient, shape):
    # sum out the axes numpy broadcasting added or stretched
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)
    return gradient


def _accumulate(node, gradient):
    if node.requires_grad:
        node.gradient = node.gradient + _unbroadcast(gradient, node.value.shape)


def _result(value, parents, op, backward_fn):
    out = GradientNode(value, requires_grad=any(p.requires_grad for p in parents), _parents=parents, _op=op)
    if out.requires_grad:
        out._backward = lambda: backward_fn(out.gradient)
    return out


def add(a, b):
    a, b = constant(a), constant(b)

    def backward_fn(grad):
        _accumulate(a, grad)
        _accumulate(b, grad)
    return _result(a.value + b.value, (a, b), '+', backward_fn)


def sub(a, b):
    a, b = constant(a), constant(b)

    def backward_fn(grad):
        _accumulate(a, grad)
        _accumulate(b, -grad)
    return _result(a.value - b.value, (a, b), '-', backward_fn)


def mul(a, b):
    a, b = constant(a), constant(b)

    def backward_fn(grad):
        _accumulate(a, grad * b.value)
        _accumulate(b, grad * a.value)
    return _result(a.value * b.value, (a, b), '*', backward_fn)


def div(a, b):
    a, b = constant(a), constant(b)

    def backward_fn(grad):
        _accumulate(a, grad / b.value)
        _accumulate(b, -grad * a.value / b.value ** 2)
    return _result(a.value / b.value, (a, b), '/', backward_fn)


def power(a, exponent):
    if isinstance(exponent, GradientNode):
        raise ContractError("only constant exponents are supported")
    a = constant(a)

    def backward_fn(grad):
        _accumulate(a, grad * exponent * a.value ** (exponent - 1))
    return _result(a.value ** exponent, (a,), f'**{exponent}', backward_fn)


def matmul(a, b):
    a, b = constant(a), constant(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects matrices, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes {a.shape} and {b.shape} do not agree")

    def backward_fn(grad):
        _accumulate(a, grad @ b.value.T)
        _accumulate(b, a.value.T @ grad)
    return _result(a.value @ b.value, (a, b), '@', backward_fn)


def getitem(a, index):
    a = constant(a)

    def backward_fn(grad):
        full = np.zeros_like(a.value)
        np.add.at(full, index, grad)
        _accumulate(a, full)
    return _result(a.value[index], (a,), '[]', backward_fn)


def reshape(a, shape):
    a = constant(a)

    def backward_fn(grad):
        _accumulate(a, grad.reshape(a.value.shape))
    return _result(a.value.reshape(shape), (a,), 'reshape', backward_fn)


def relu(a):
    a = constant(a)

    def backward_fn(grad):
        _accumulate(a, grad * (a.value > 0))
    return _result(np.maximum(a.value, 0.0), (a,), 'relu', backward_fn)


def tanh(a):
    a = constant(a)
    value = np.tanh(a.value)

    def backward_fn(grad):
        _accumulate(a, grad * (1.0 - value ** 2))
    return _result(value, (a,), 'tanh', backward_fn)


def exp(a):
    a = constant(a)
    value = np.exp(a.value)

    def backward_fn(grad):
        _accumulate(a, grad * value)
    return _result(value, (a,), 'exp', backward_fn)


def log(a):
    a = constant(a)

    def backward_fn(grad):
        _accumulate(a, grad / a.value)
    return _result(np.log(a.value), (a,), 'log', backward_fn)


def softplus(a):
    """log(1 + exp(a)) without overflow"""
    a = constant(a)

    def backward_fn(grad):
        _accumulate(a, grad * expit(a.value))
    return _result(np.logaddexp(0.0, a.value), (a,), 'softplus', backward_fn)


def atanh(a):
    a = constant(a)

    def backward_fn(grad):
        _accumulate(a, grad / (1.0 - a.value ** 2))
    return _result(np.arctanh(a.value), (a,), 'atanh', backward_fn)


def clip(a, low, high):
    """Clamp to [low, high]; the gradient is zero outside the interval"""
    a = constant(a)

    def backward_fn(grad):
        _accumulate(a, grad * ((a.value >= low) & (a.value <= high)))
    return _result(np.clip(a.value, low, high), (a,), 'clip', backward_fn)


def minimum(a, b):
    """Elementwise minimum; ties send the gradient to the first argument"""
    a, b = constant(a), constant(b)
    first = a.value <= b.value

    def backward_fn(grad):
        _accumulate(a, grad * first)
        _accumulate(b, grad * ~first)
    return _result(np.where(first, a.value, b.value), (a, b), 'min', backward_fn)


def sum(a, axis=None, keepdims=False):
    a = constant(a)

    def backward_fn(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        _accumulate(a, np.broadcast_to(grad, a.value.shape))
    return _result(np.sum(a.value, axis=axis, keepdims=keepdims), (a,), 'sum', backward_fn)


def mean(a, axis=None, keepdims=False):
    a = constant(a)
    count = a.value.size if axis is None else a.value.shape[axis]
    return sum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def logsumexp(a, axis=None, keepdims=False):
    a = constant(a)
    value = _logsumexp(a.value, axis=axis, keepdims=True)

    def backward_fn(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        _accumulate(a, grad * np.exp(a.value - value))
    out_value = value if keepdims else np.squeeze(value, axis=axis)
    return _result(out_value, (a,), 'logsumexp', backward_fn)


def concat(nodes, axis=-1):
    nodes = tuple(constant(n) for n in nodes)
    sizes = [n.value.shape[axis] for n in nodes]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(grad):
        for node, piece in zip(nodes, np.split(grad, splits, axis=axis)):
            _accumulate(node, piece)
    return _result(np.concatenate([n.value for n in nodes], axis=axis), nodes, 'concat', backward_fn)


def detach(a):
    """Same value, cut from the graph"""
    return GradientNode(constant(a).value.copy())


def _topological_order(root):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(node) into every reachable node that requires gradients"""
    if loss.value.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.value.shape}")
    if not loss.requires_grad:
        return
    order = _topological_order(loss)
    for node in order:
        if node._backward is not None:
            node.gradient = np.zeros_like(node.value)
    loss.gradient = np.ones_like(loss.value)
    for node in reversed(order):
        if node._backward is not None:
            node._backward()
