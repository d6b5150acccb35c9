"""Dense networks with exact backpropagation, Adam, global-norm clipping and
Polyak averaging.

Everything is float64. Parameters are plain mutable values, updates happen only
through :func:`adam_step` and :func:`polyak_update`.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import expit

from softgrad.data.checkpoint import FORMAT_VERSION, LayerRecord, MlpRecord
from softgrad.data.common import Activation, Direction
from softgrad.data.config import AdamConfig
from softgrad.exceptions import ConfigurationError, NumericError, StructuralError


@dataclass
class LayerGradient:
    weight: np.ndarray
    bias: np.ndarray


@dataclass
class Gradient:
    """Per-layer gradients.

    With ``per_sample`` set, every array carries a leading batch dimension.
    """

    layers: list[LayerGradient]
    per_sample: bool = False

    @classmethod
    def zeros_like(cls, params: MlpParams) -> Gradient:
        return cls([LayerGradient(np.zeros_like(la.weight), np.zeros_like(la.bias)) for la in params.layers])

    def flatten(self) -> np.ndarray:
        if self.per_sample:
            if not self.layers:
                return np.zeros((0, 0))
            batch = self.layers[0].bias.shape[0]
            rows = [
                np.concatenate([lg.weight.reshape(batch, -1), lg.bias.reshape(batch, -1)], axis=1) for lg in self.layers
            ]
            return np.concatenate(rows, axis=1)

        if not self.layers:
            return np.zeros(0)
        return np.concatenate([np.concatenate([lg.weight.ravel(), lg.bias.ravel()]) for lg in self.layers])

    def scaled(self, factor: float) -> Gradient:
        return Gradient([LayerGradient(lg.weight * factor, lg.bias * factor) for lg in self.layers], self.per_sample)

    def squared_norm(self) -> float:
        return float(sum(np.sum(lg.weight * lg.weight) + np.sum(lg.bias * lg.bias) for lg in self.layers))

    def __add__(self, other: object) -> Gradient:
        if not isinstance(other, Gradient) or len(other.layers) != len(self.layers):
            raise StructuralError("Gradients of different structure can't be added.")

        res: list[LayerGradient] = []
        for mine, theirs in zip(self.layers, other.layers):
            if mine.weight.shape != theirs.weight.shape or mine.bias.shape != theirs.bias.shape:
                raise StructuralError("Gradient shapes do not match.")
            res.append(LayerGradient(mine.weight + theirs.weight, mine.bias + theirs.bias))

        return Gradient(res, self.per_sample)


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: Activation

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class AdamState:
    first: Gradient
    second: Gradient
    step: int = 0


@dataclass
class MlpParams:
    """Weights of a dense network together with its gradient and Adam storage."""

    layers: list[Layer]
    grad: Gradient = field(init=False)
    adam: AdamState = field(init=False)
    version: int = field(default=0, init=False)

    def __post_init__(self) -> None:
        if not self.layers:
            raise StructuralError("Network needs at least one layer.")

        for idx, layer in enumerate(self.layers):
            layer.weight = np.asarray(layer.weight, dtype=np.float64)
            layer.bias = np.asarray(layer.bias, dtype=np.float64)
            layer.activation = Activation(layer.activation)

            if layer.weight.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                raise StructuralError(f"Layer {idx} has inconsistent weight/bias shapes.")

        for idx, (prev, nxt) in enumerate(zip(self.layers, self.layers[1:])):
            if prev.out_dim != nxt.in_dim:
                raise StructuralError(
                    f"Layer {idx} outputs {prev.out_dim} values, layer {idx + 1} expects {nxt.in_dim}."
                )

        self.grad = Gradient.zeros_like(self)
        self.adam = AdamState(Gradient.zeros_like(self), Gradient.zeros_like(self))

    @classmethod
    def create(cls, sizes: Sequence[int], activations: Sequence[Activation], rng: np.random.Generator) -> MlpParams:
        """Uniform init in ±1/sqrt(fan_in), zero biases.

        :param sizes: Layer widths including the input, e.g. (state_dim, 64, 64, 1).
        :param activations: One activation per layer.
        :param rng: Seeded generator.
        :return:
        """

        if len(sizes) != len(activations) + 1:
            raise StructuralError("Number of activations has to be number of sizes minus one.")

        layers: list[Layer] = []
        for fan_in, fan_out, act in zip(sizes, sizes[1:], activations):
            bound = 1.0 / math.sqrt(fan_in)
            layers.append(Layer(rng.uniform(-bound, bound, size=(fan_out, fan_in)), np.zeros(fan_out), act))

        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def clone(self) -> MlpParams:
        return copy.deepcopy(self)

    def flatten(self) -> np.ndarray:
        return np.concatenate([np.concatenate([la.weight.ravel(), la.bias.ravel()]) for la in self.layers])

    def unflatten(self, vector: np.ndarray) -> MlpParams:
        """Creates a network of the same structure from a flat vector (as
        produced by flatten)."""

        vector = np.asarray(vector, dtype=np.float64)
        expected = sum(la.weight.size + la.bias.size for la in self.layers)

        if vector.shape != (expected,):
            raise StructuralError(f"Expected {expected} values, got {vector.size}.")

        layers: list[Layer] = []
        offset = 0
        for la in self.layers:
            weight = vector[offset : offset + la.weight.size].reshape(la.weight.shape).copy()
            offset += la.weight.size
            bias = vector[offset : offset + la.bias.size].copy()
            offset += la.bias.size
            layers.append(Layer(weight, bias, la.activation))

        return MlpParams(layers)

    def to_record(self) -> MlpRecord:
        return MlpRecord(
            [
                LayerRecord(
                    la.activation.value,
                    [la.out_dim, la.in_dim],
                    la.weight.ravel().tolist(),
                    la.bias.tolist(),
                    m.weight.ravel().tolist(),
                    v.weight.ravel().tolist(),
                    m.bias.tolist(),
                    v.bias.tolist(),
                )
                for la, m, v in zip(self.layers, self.adam.first.layers, self.adam.second.layers)
            ],
            self.adam.step,
        )

    @classmethod
    def from_record(cls, record: MlpRecord) -> MlpParams:
        if record.format_version != FORMAT_VERSION:
            raise StructuralError(f"Unsupported checkpoint format version {record.format_version}.")

        layers: list[Layer] = []
        for idx, lr in enumerate(record.layers):
            if len(lr.shape) != 2 or len(lr.weight) != lr.shape[0] * lr.shape[1] or len(lr.bias) != lr.shape[0]:
                raise StructuralError(f"Layer {idx} of the checkpoint has inconsistent shape.")
            layers.append(
                Layer(np.array(lr.weight).reshape(lr.shape), np.array(lr.bias), Activation(lr.activation))
            )

        params = cls(layers)

        for la, m, v, lr in zip(params.layers, params.adam.first.layers, params.adam.second.layers, record.layers):
            if lr.weight_m:
                m.weight = np.array(lr.weight_m).reshape(la.weight.shape)
                v.weight = np.array(lr.weight_v).reshape(la.weight.shape)
                m.bias = np.array(lr.bias_m)
                v.bias = np.array(lr.bias_v)

        params.adam.step = record.adam_step
        return params


class Tape(NamedTuple):
    """What forward remembers for the backward pass."""

    params_id: int
    version: int
    batched: bool
    inputs: list[np.ndarray]
    outputs: list[np.ndarray]


def _activate(pre: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.RELU:
        return np.maximum(pre, 0.0)
    if activation == Activation.SIGMOID:
        return expit(pre)
    return pre


def _derivative(out: np.ndarray, activation: Activation) -> np.ndarray:
    # expressed through layer outputs, relu'(0) = 0
    if activation == Activation.RELU:
        return (out > 0.0).astype(np.float64)
    if activation == Activation.SIGMOID:
        return out * (1.0 - out)
    return np.ones_like(out)


def forward(params: MlpParams, x: np.ndarray | Sequence[float]) -> tuple[np.ndarray, Tape]:
    """Evaluates the network on a vector [in] or a row batch [B×in]."""

    arr = np.asarray(x, dtype=np.float64)
    batched = arr.ndim == 2

    if arr.ndim == 1:
        arr = arr[None, :]
    elif arr.ndim != 2:
        raise StructuralError(f"Input has to be a vector or a matrix, got {arr.ndim} dimensions.")

    if arr.shape[1] != params.in_dim:
        raise StructuralError(f"Input dimension {arr.shape[1]} does not match network input {params.in_dim}.")

    inputs: list[np.ndarray] = []
    outputs: list[np.ndarray] = []

    h = arr
    for layer in params.layers:
        inputs.append(h)
        h = _activate(h @ layer.weight.T + layer.bias, layer.activation)
        outputs.append(h)

    return (h if batched else h[0]), Tape(id(params), params.version, batched, inputs, outputs)


def backward(
    params: MlpParams, tape: Tape, cotangent: np.ndarray | Sequence[float], per_sample: bool = False
) -> tuple[Gradient, np.ndarray]:
    """Gradient of <output, cotangent> with respect to all parameters.

    For a batch, parameter gradients are summed over rows unless ``per_sample`` is set.

    :return: Parameter gradient and the cotangent of the input.
    """

    if tape.params_id != id(params) or tape.version != params.version or len(tape.inputs) != len(params.layers):
        raise StructuralError("Tape was not produced by the current parameters.")

    g = np.asarray(cotangent, dtype=np.float64)
    if not tape.batched:
        g = g[None, :]

    if g.shape != tape.outputs[-1].shape:
        raise StructuralError(f"Cotangent shape {g.shape} does not match output shape {tape.outputs[-1].shape}.")

    layer_grads: list[LayerGradient] = []

    for layer, x, y in zip(reversed(params.layers), reversed(tape.inputs), reversed(tape.outputs)):
        delta = g * _derivative(y, layer.activation)

        if per_sample:
            layer_grads.append(LayerGradient(np.einsum("bo,bi->boi", delta, x), delta.copy()))
        else:
            layer_grads.append(LayerGradient(delta.T @ x, delta.sum(axis=0)))

        g = delta @ layer.weight

    layer_grads.reverse()
    gradient = Gradient(layer_grads, per_sample)

    if not per_sample:
        params.grad = gradient

    return gradient, (g if tape.batched else g[0])


def _check_same_structure(params: MlpParams, gradient: Gradient) -> None:
    if gradient.per_sample:
        raise StructuralError("Per-sample gradients have to be reduced first.")

    if len(gradient.layers) != len(params.layers):
        raise StructuralError("Gradient and parameters have different number of layers.")

    for idx, (la, lg) in enumerate(zip(params.layers, gradient.layers)):
        if la.weight.shape != lg.weight.shape or la.bias.shape != lg.bias.shape:
            raise StructuralError(f"Gradient of layer {idx} has wrong shape.")


def adam_step(
    params: MlpParams, gradient: Gradient, config: AdamConfig, direction: Direction = Direction.DESCEND
) -> MlpParams:
    """Bias-corrected Adam update, in place."""

    _check_same_structure(params, gradient)

    for idx, lg in enumerate(gradient.layers):
        if not (np.all(np.isfinite(lg.weight)) and np.all(np.isfinite(lg.bias))):
            raise NumericError(f"Non-finite gradient entries in layer {idx}.")

    state = params.adam
    state.step += 1

    c1 = 1.0 - config.beta1**state.step
    c2 = 1.0 - config.beta2**state.step
    sign = 1.0 if direction == Direction.ASCEND else -1.0

    for layer, g, m, v in zip(params.layers, gradient.layers, state.first.layers, state.second.layers):
        for attr in ("weight", "bias"):
            grad = getattr(g, attr)
            first = config.beta1 * getattr(m, attr) + (1.0 - config.beta1) * grad
            second = config.beta2 * getattr(v, attr) + (1.0 - config.beta2) * grad * grad
            setattr(m, attr, first)
            setattr(v, attr, second)

            step = config.learning_rate * (first / c1) / (np.sqrt(second / c2) + config.epsilon)
            setattr(layer, attr, getattr(layer, attr) + sign * step)

    params.version += 1
    return params


def global_norm(gradients: Iterable[Gradient]) -> float:
    return math.sqrt(sum(g.squared_norm() for g in gradients))


def clip_by_global_norm(gradients: Sequence[Gradient], max_norm: float) -> list[Gradient]:
    """Rescales all gradients together so that their joint norm does not
    exceed max_norm."""

    if not max_norm > 0:
        raise ConfigurationError(f"Clipping norm has to be positive, got {max_norm}.", ["clip_norm"])

    norm = global_norm(gradients)

    if norm <= max_norm:
        return list(gradients)

    factor = max_norm / norm
    return [g.scaled(factor) for g in gradients]


def polyak_update(target: MlpParams, online: MlpParams, alpha: float) -> MlpParams:
    """target <- alpha * online + (1 - alpha) * target, in place."""

    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"Polyak rate has to be within [0, 1], got {alpha}.", ["polyak_alpha"])

    if len(target.layers) != len(online.layers):
        raise StructuralError("Target and online networks have different number of layers.")

    for idx, (tl, ol) in enumerate(zip(target.layers, online.layers)):
        if tl.weight.shape != ol.weight.shape or tl.bias.shape != ol.bias.shape:
            raise StructuralError(f"Layer {idx} of target and online networks differ in shape.")

    for tl, ol in zip(target.layers, online.layers):
        tl.weight = alpha * ol.weight + (1.0 - alpha) * tl.weight
        tl.bias = alpha * ol.bias + (1.0 - alpha) * tl.bias

    target.version += 1
    return target
