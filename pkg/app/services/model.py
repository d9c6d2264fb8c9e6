"""Fully connected softmax classifier on a flat parameter vector, with Adam."""

from typing import Sequence

import numpy as np

from app.schemas.scenario import Activation
from app.schemas.training import ModelParams


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    if activation is Activation.TANH:
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


def _activation_grad(z: np.ndarray, a: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return (z > 0).astype(z.dtype)
    if activation is Activation.TANH:
        return 1.0 - a * a
    return a * (1.0 - a)


def init_params(
    layer_sizes: Sequence[int], rng: np.random.Generator, activation: Activation = Activation.RELU
) -> ModelParams:
    """He-uniform weights for ReLU, Glorot-uniform otherwise; zero biases."""
    chunks = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        if activation is Activation.RELU:
            limit = np.sqrt(6.0 / fan_in)
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return ModelParams(theta=np.concatenate(chunks), layer_sizes=tuple(layer_sizes), activation=activation)


class MLP:
    """Stateless network: every method takes the flat parameter vector."""

    def __init__(self, layer_sizes: Sequence[int], activation: Activation = Activation.RELU):
        self.layer_sizes = tuple(layer_sizes)
        self.activation = activation
        self._slices = []
        offset = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            w = slice(offset, offset + fan_in * fan_out)
            offset += fan_in * fan_out
            b = slice(offset, offset + fan_out)
            offset += fan_out
            self._slices.append((w, b, fan_in, fan_out))
        self.num_params = offset

    @classmethod
    def for_params(cls, model: ModelParams) -> "MLP":
        return cls(model.layer_sizes, model.activation)

    def unflatten(self, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """(W, b) views per layer."""
        return [(theta[w].reshape(fan_in, fan_out), theta[b]) for w, b, fan_in, fan_out in self._slices]

    def forward(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Logits for a batch."""
        layers = self.unflatten(theta)
        a = np.asarray(x, dtype=np.float64)
        for weight, bias in layers[:-1]:
            a = _activate(a @ weight + bias, self.activation)
        weight, bias = layers[-1]
        return a @ weight + bias

    def predict(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward(theta, x), axis=1)

    def loss_and_grad(self, theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        """Mean softmax cross-entropy over the batch and its gradient w.r.t. theta."""
        layers = self.unflatten(theta)
        a = np.asarray(x, dtype=np.float64)
        inputs = [a]
        pre = []
        for weight, bias in layers[:-1]:
            z = a @ weight + bias
            a = _activate(z, self.activation)
            pre.append(z)
            inputs.append(a)
        weight, bias = layers[-1]
        logits = a @ weight + bias

        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        n = x.shape[0]
        loss = -float(log_probs[np.arange(n), y].mean())

        grad = np.empty_like(theta)
        delta = np.exp(log_probs)
        delta[np.arange(n), y] -= 1.0
        delta /= n
        for index in range(len(layers) - 1, -1, -1):
            w_slice, b_slice, _, _ = self._slices[index]
            grad[w_slice] = (inputs[index].T @ delta).ravel()
            grad[b_slice] = delta.sum(axis=0)
            if index > 0:
                upstream = delta @ layers[index][0].T
                delta = upstream * _activation_grad(pre[index - 1], inputs[index], self.activation)
        return loss, grad


class Adam:
    """Adam on a flat vector; state lives as long as the instance."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> None:
        """Update ``theta`` in place."""
        if self.m is None or self.v is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1

        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t

        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (grad * grad)

        theta -= (self.lr / bc1) * self.m / (np.sqrt(self.v / bc2) + self.epsilon)
