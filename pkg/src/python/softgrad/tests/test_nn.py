import math

import numpy as np
import pytest

from softgrad.data.common import Activation, Direction
from softgrad.data.config import AdamConfig
from softgrad.exceptions import ConfigurationError, NumericError, StructuralError
from softgrad.gradcheck import central_difference, violation
from softgrad.nn import (
    Gradient,
    Layer,
    LayerGradient,
    MlpParams,
    adam_step,
    backward,
    clip_by_global_norm,
    forward,
    global_norm,
    polyak_update,
)


def scalar_net(weight: float, bias: float, activation: Activation) -> MlpParams:
    return MlpParams([Layer(np.array([[weight]]), np.array([bias]), activation)])


def grad(*values: float) -> Gradient:
    return Gradient([LayerGradient(np.array([list(values)]), np.zeros(1))])


def test_forward_examples() -> None:
    assert forward(scalar_net(2.0, 1.0, Activation.IDENTITY), [3.0])[0].tolist() == [7.0]
    assert forward(scalar_net(1.0, -5.0, Activation.RELU), [3.0])[0].tolist() == [0.0]

    for x in (-3.0, 0.0, 10.0):
        assert forward(scalar_net(0.0, 0.0, Activation.SIGMOID), [x])[0].tolist() == [0.5]


def test_forward_batch_shape() -> None:
    net = MlpParams.create((3, 5, 2), [Activation.RELU, Activation.IDENTITY], np.random.default_rng(0))

    out, _ = forward(net, np.ones((4, 3)))
    assert out.shape == (4, 2)

    with pytest.raises(StructuralError):
        forward(net, np.ones(2))


def test_backward_examples() -> None:
    net = scalar_net(2.0, 1.0, Activation.IDENTITY)
    _, tape = forward(net, [3.0])
    gradient, d_input = backward(net, tape, [1.0])

    assert gradient.layers[0].weight.tolist() == [[3.0]]
    assert gradient.layers[0].bias.tolist() == [1.0]
    assert d_input.tolist() == [2.0]

    clamped = scalar_net(1.0, -5.0, Activation.RELU)
    _, tape = forward(clamped, [3.0])
    gradient, d_input = backward(clamped, tape, [1.0])

    assert not np.any(gradient.flatten())
    assert not np.any(d_input)


def test_stale_tape() -> None:
    net = scalar_net(2.0, 1.0, Activation.IDENTITY)
    _, tape = forward(net, [3.0])

    adam_step(net, grad(1.0), AdamConfig())

    with pytest.raises(StructuralError):
        backward(net, tape, [1.0])

    with pytest.raises(StructuralError):
        backward(scalar_net(2.0, 1.0, Activation.IDENTITY), tape, [1.0])


def test_backward_matches_finite_differences() -> None:
    rng = np.random.default_rng(3)
    net = MlpParams.create((3, 6, 6, 2), [Activation.RELU, Activation.RELU, Activation.SIGMOID], rng)
    for layer in net.layers:
        layer.bias = rng.uniform(-0.5, 0.5, layer.bias.shape)

    x = rng.normal(size=3)
    cotangent = rng.normal(size=2)

    _, tape = forward(net, x)
    gradient, d_input = backward(net, tape, cotangent)

    def loss(vector: np.ndarray) -> float:
        return float(forward(net.unflatten(vector), x)[0] @ cotangent)

    assert violation(central_difference(loss, net.flatten(), 1e-6), gradient.flatten(), 1e-5, 1e-8) <= 1.0

    d_x = central_difference(lambda v: float(forward(net, v)[0] @ cotangent), x, 1e-6)
    assert violation(d_x, d_input, 1e-5, 1e-8) <= 1.0


def test_per_sample_gradients_sum_up() -> None:
    rng = np.random.default_rng(1)
    net = MlpParams.create((2, 4, 1), [Activation.RELU, Activation.IDENTITY], rng)
    x = rng.normal(size=(5, 2))
    cotangent = rng.normal(size=(5, 1))

    _, tape = forward(net, x)
    per_sample, _ = backward(net, tape, cotangent, per_sample=True)
    summed, _ = backward(net, tape, cotangent)

    assert per_sample.flatten().shape == (5, summed.flatten().size)
    assert per_sample.flatten().sum(axis=0) == pytest.approx(summed.flatten(), abs=1e-12)


def test_adam_first_step() -> None:
    net = scalar_net(1.0, 0.0, Activation.IDENTITY)
    adam_step(net, grad(2.0), AdamConfig(learning_rate=1e-3), Direction.DESCEND)

    assert abs((1.0 - net.layers[0].weight[0, 0]) - 1e-3) <= 1e-6
    assert net.adam.step == 1

    up = scalar_net(1.0, 0.0, Activation.IDENTITY)
    adam_step(up, grad(2.0), AdamConfig(learning_rate=1e-3), Direction.ASCEND)
    assert up.layers[0].weight[0, 0] > 1.0


def test_adam_two_steps_with_constant_gradient() -> None:
    config = AdamConfig(learning_rate=0.1)
    net = scalar_net(1.0, 0.0, Activation.IDENTITY)

    weight, first, second = 1.0, 0.0, 0.0
    for step in (1, 2):
        adam_step(net, grad(2.0), config)

        first = 0.9 * first + 0.1 * 2.0
        second = 0.999 * second + 0.001 * 4.0
        weight -= 0.1 * (first / (1 - 0.9**step)) / (math.sqrt(second / (1 - 0.999**step)) + 1e-8)

        assert net.layers[0].weight[0, 0] == pytest.approx(weight, abs=1e-12)
        assert net.adam.first.layers[0].weight[0, 0] == pytest.approx(first, abs=1e-12)
        assert net.adam.second.layers[0].weight[0, 0] == pytest.approx(second, abs=1e-12)

    assert weight == pytest.approx(0.8, abs=1e-8)
    assert net.layers[0].bias.tolist() == [0.0]
    assert net.adam.step == 2


def test_adam_zero_gradient() -> None:
    net = scalar_net(1.0, 0.5, Activation.IDENTITY)
    adam_step(net, grad(0.0), AdamConfig())

    assert net.layers[0].weight.tolist() == [[1.0]]
    assert net.layers[0].bias.tolist() == [0.5]
    assert not np.any(net.adam.first.flatten())
    assert not np.any(net.adam.second.flatten())
    assert net.adam.step == 1


def test_adam_zero_learning_rate() -> None:
    net = scalar_net(1.0, 0.5, Activation.IDENTITY)
    adam_step(net, grad(3.0), AdamConfig(learning_rate=0.0))

    assert net.layers[0].weight.tolist() == [[1.0]]
    assert net.adam.first.layers[0].weight[0, 0] == pytest.approx(0.3)


def test_adam_errors() -> None:
    net = scalar_net(1.0, 0.0, Activation.IDENTITY)

    with pytest.raises(NumericError, match="layer 0"):
        adam_step(net, grad(math.nan), AdamConfig())

    with pytest.raises(StructuralError):
        adam_step(net, grad(1.0, 2.0), AdamConfig())

    with pytest.raises(ConfigurationError):
        AdamConfig(learning_rate=-1.0)


def test_global_norm() -> None:
    assert global_norm([grad(3.0, 4.0)]) == 5.0
    assert global_norm([grad(3.0), grad(4.0)]) == 5.0
    assert global_norm([grad(0.0, 0.0)]) == 0.0
    assert global_norm([]) == 0.0


@pytest.mark.parametrize(
    "values,max_norm,expected",
    [
        ((3.0, 4.0), 5.0, (3.0, 4.0)),
        ((6.0, 8.0), 5.0, (3.0, 4.0)),
        ((0.0, 0.0), 1.0, (0.0, 0.0)),
    ],
)
def test_clip_examples(values: tuple[float, float], max_norm: float, expected: tuple[float, float]) -> None:
    (clipped,) = clip_by_global_norm([grad(*values)], max_norm)
    assert clipped.layers[0].weight[0].tolist() == pytest.approx(list(expected), abs=1e-12)


def test_clip_is_joint() -> None:
    clipped = clip_by_global_norm([grad(6.0), grad(8.0)], 5.0)

    assert global_norm(clipped) == pytest.approx(5.0, abs=1e-12)
    assert clipped[0].layers[0].weight[0, 0] / clipped[1].layers[0].weight[0, 0] == pytest.approx(0.75)


def test_clip_requires_positive_norm() -> None:
    for max_norm in (0.0, -1.0):
        with pytest.raises(ConfigurationError):
            clip_by_global_norm([grad(1.0)], max_norm)


def test_polyak() -> None:
    target = scalar_net(1.0, 1.0, Activation.IDENTITY)
    online = scalar_net(0.0, 0.0, Activation.IDENTITY)

    polyak_update(target, online, 0.01)
    assert target.layers[0].weight[0, 0] == pytest.approx(0.99, abs=1e-15)

    polyak_update(target, online, 0.0)
    assert target.layers[0].weight[0, 0] == pytest.approx(0.99, abs=1e-15)

    polyak_update(target, online, 1.0)
    assert target.flatten().tolist() == online.flatten().tolist()


def test_polyak_errors() -> None:
    target = scalar_net(1.0, 1.0, Activation.IDENTITY)

    with pytest.raises(ConfigurationError):
        polyak_update(target, target.clone(), 1.5)

    with pytest.raises(StructuralError):
        polyak_update(target, MlpParams.create((2, 1), [Activation.IDENTITY], np.random.default_rng(0)), 0.5)


def test_flatten_round_trip() -> None:
    net = MlpParams.create((3, 4, 2), [Activation.RELU, Activation.SIGMOID], np.random.default_rng(5))
    copy = net.unflatten(net.flatten())

    assert copy.flatten().tolist() == net.flatten().tolist()

    with pytest.raises(StructuralError):
        net.unflatten(np.zeros(3))


def test_record_round_trip() -> None:
    net = MlpParams.create((2, 3, 1), [Activation.RELU, Activation.IDENTITY], np.random.default_rng(2))
    _, tape = forward(net, [1.0, -1.0])
    gradient, _ = backward(net, tape, [1.0])
    adam_step(net, gradient, AdamConfig())

    restored = MlpParams.from_record(net.to_record())

    assert restored.flatten().tolist() == net.flatten().tolist()
    assert restored.adam.step == 1
    assert restored.adam.first.flatten().tolist() == net.adam.first.flatten().tolist()
    assert restored.adam.second.flatten().tolist() == net.adam.second.flatten().tolist()
