"""Small dense networks with explicit forward/backward passes.

Backprop is written out by hand so analytic gradients can be checked
against central finite differences, and so training stays bit-for-bit
reproducible without a DL framework.  Shapes follow the row-major
convention: inputs are (batch, features).
"""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np


def stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z), linear for large z to avoid overflow
    return np.where(z > 30.0, z, np.log1p(np.exp(np.minimum(z, 30.0))))


class MLP:
    """Fully-connected net: tanh on hidden layers, linear output."""

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator) -> None:
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(sizes)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, list]:
        """Returns (output, cache); the cache feeds backward()."""
        activations = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            activations.append(h)
        return h, activations

    def backward(self, cache: list, grad_out: np.ndarray
                 ) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (weight_grads, bias_grads) aligned with self.weights/biases.
        """
        weight_grads = [np.empty(0)] * len(self.weights)
        bias_grads = [np.empty(0)] * len(self.biases)
        delta = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                delta = delta * (1.0 - cache[i + 1] ** 2)  # tanh'
            weight_grads[i] = cache[i].T @ delta
            bias_grads[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
        return weight_grads, bias_grads

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_flat(self, flat: np.ndarray) -> None:
        offset = 0
        for p in self.parameters():
            p[...] = flat[offset:offset + p.size].reshape(p.shape)
            offset += p.size

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])


def flatten_arrays(arrays: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([a.ravel() for a in arrays])


class Adam:
    """Adaptive-moment optimizer over a list of parameter arrays."""

    def __init__(self, params: Sequence[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def update(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


class SGD:
    """Plain gradient descent; kept around for gradient-check experiments."""

    def __init__(self, params: Sequence[np.ndarray], lr: float) -> None:
        self.lr = lr

    def update(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g
