import numpy as np
import pytest

from src.errors import ContractError, ShapeError
from src.nn import engine
from tests.conftest import finite_difference_check


def test_shared_subexpression_accumulates_both_paths():
    x = engine.parameter([3.0])
    y = x * x + x
    engine.backward(engine.sum(y))
    np.testing.assert_allclose(x.gradient, [7.0])


def test_gradients_accumulate_across_backward_calls():
    x = engine.parameter([2.0])
    engine.backward(engine.sum(x * 3.0))
    engine.backward(engine.sum(x * 3.0))
    np.testing.assert_allclose(x.gradient, [6.0])
    x.zero_grad()
    np.testing.assert_allclose(x.gradient, [0.0])


def test_non_scalar_loss_is_rejected():
    x = engine.parameter([1.0, 2.0])
    with pytest.raises(ContractError):
        engine.backward(x * 2.0)


def test_numpy_on_the_left_keeps_the_graph():
    x = engine.parameter([1.0, 2.0])
    y = np.array([3.0, 4.0]) - x
    assert isinstance(y, engine.GradientNode)
    engine.backward(engine.sum(y))
    np.testing.assert_allclose(x.gradient, [-1.0, -1.0])


def test_broadcast_gradient_is_summed_back():
    bias = engine.parameter(np.zeros((1, 3)))
    x = engine.constant(np.ones((4, 3)))
    engine.backward(engine.sum(x + bias))
    np.testing.assert_allclose(bias.gradient, [[4.0, 4.0, 4.0]])


def test_matmul_shapes_are_checked():
    with pytest.raises(ShapeError):
        engine.parameter(np.ones((2, 3))) @ engine.parameter(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        engine.matmul(engine.parameter(np.ones(3)), engine.parameter(np.ones((3, 1))))


def test_node_exponents_are_rejected():
    with pytest.raises(ContractError):
        engine.power(engine.parameter([1.0]), engine.parameter([2.0]))


def test_constants_receive_no_gradient():
    x = engine.parameter([1.0])
    c = engine.constant([5.0])
    engine.backward(engine.sum(x * c))
    np.testing.assert_allclose(c.gradient, [0.0])
    assert not engine.detach(x).requires_grad


def test_clip_and_minimum_route_gradients():
    x = engine.parameter([-2.0, 0.5, 2.0])
    engine.backward(engine.sum(engine.clip(x, -1.0, 1.0)))
    np.testing.assert_allclose(x.gradient, [0.0, 1.0, 0.0])

    a = engine.parameter([1.0, 3.0, 2.0])
    b = engine.parameter([2.0, 1.0, 2.0])
    engine.backward(engine.sum(engine.minimum(a, b)))
    np.testing.assert_allclose(a.gradient, [1.0, 0.0, 1.0])
    np.testing.assert_allclose(b.gradient, [0.0, 1.0, 0.0])


def test_softplus_is_stable_for_large_inputs():
    x = engine.parameter([800.0, -800.0])
    out = engine.softplus(x)
    np.testing.assert_allclose(out.value, [800.0, 0.0])
    engine.backward(engine.sum(out))
    np.testing.assert_allclose(x.gradient, [1.0, 0.0])


def test_deep_chain_does_not_recurse():
    x = engine.parameter([1.0])
    y = x
    for _ in range(5000):
        y = y * 1.0
    engine.backward(engine.sum(y))
    np.testing.assert_allclose(x.gradient, [1.0])


def test_composite_expression_matches_finite_differences(rng):
    a = engine.parameter(rng.normal(size=(3, 4)))
    b = engine.parameter(rng.normal(size=(4, 2)))
    c = engine.parameter(rng.uniform(0.5, 1.5, size=(1, 2)))

    def loss():
        h = engine.tanh(a @ b) + engine.log(c) * engine.exp(0.1 * c)
        h = engine.concat([h, engine.softplus(h) / c], axis=1)
        h = engine.reshape(h, (2, 6))[:, 1:5] ** 2
        return engine.mean(engine.logsumexp(h, axis=1)) + engine.sum(engine.atanh(0.5 * engine.tanh(h)))

    assert finite_difference_check(loss, [a, b, c]) < 1e-4


def test_relu_and_keepdims_sum_match_finite_differences(rng):
    w = engine.parameter(rng.normal(size=(5, 3)))

    def loss():
        h = engine.relu(w - 0.1)
        return engine.sum(engine.sum(h, axis=0, keepdims=True) * engine.reshape(engine.sum(h, axis=1)[:3], (1, 3)))

    assert finite_difference_check(loss, [w]) < 1e-4
