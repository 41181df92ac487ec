"""Small feed-forward networks with evolvable structure.

Every network is one SELU hidden layer plus one logistic output layer.
Each layer carries, besides weights and biases, a binary connection mask,
its own gradient-descent rate, and a vector of four self-adaptive mutation
rates controlling weight noise, neuron growth, rate noise, and connection
flips.  Gradient descent is plain SGD with momentum on the MSE loss.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

# gradient-descent rates live in this range; mutation clamps back into it
ETA_MIN = 1e-4
ETA_MAX = 0.01

INIT_SIGMA = 0.1

# indices into Layer.mu
MU_WEIGHT = 0
MU_NEURON = 1
MU_ETA = 2
MU_CONNECT = 3


class Activation(enum.IntEnum):
    SELU = 0
    LOGISTIC = 1


def selu(z):
    """Scaled exponential linear unit."""
    z = np.asarray(z, dtype=float)
    neg = SELU_LAMBDA * SELU_ALPHA * np.expm1(np.minimum(z, 0.0))
    return np.where(z > 0.0, SELU_LAMBDA * z, neg)


def logistic(z):
    """Numerically stable standard logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[np.logical_not(pos)])
    out[np.logical_not(pos)] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(eq=False)
class Layer:
    """One fully-connected layer with connection mask and mutation rates."""

    weights: np.ndarray  # [n_out, n_in]
    biases: np.ndarray  # [n_out]
    mask: np.ndarray  # [n_out, n_in] uint8, 1 = connection active
    activation: Activation
    eta: float
    mu: np.ndarray  # [4]
    mom_w: np.ndarray  # previous weight deltas
    mom_b: np.ndarray  # previous bias deltas

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def active_weights(self) -> int:
        return int(self.mask.sum())

    def copy(self) -> "Layer":
        """Deep copy with zeroed momentum (reproduction semantics)."""
        return Layer(
            weights=self.weights.copy(),
            biases=self.biases.copy(),
            mask=self.mask.copy(),
            activation=self.activation,
            eta=self.eta,
            mu=self.mu.copy(),
            mom_w=np.zeros_like(self.weights),
            mom_b=np.zeros_like(self.biases),
        )


@dataclass(eq=False)
class Network:
    """One hidden SELU layer plus one logistic output layer."""

    layers: list

    def __post_init__(self):
        if len(self.layers) != 2:
            raise ValueError("network must have exactly one hidden and one output layer")
        hidden, out = self.layers
        if hidden.activation != Activation.SELU or out.activation != Activation.LOGISTIC:
            raise ValueError("hidden layer must be SELU and output layer logistic")
        if hidden.n_out != out.n_in:
            raise ValueError("layer dimensions are incompatible")

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_in

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].n_out

    @property
    def n_hidden(self) -> int:
        return self.layers[0].n_out


def new_layer(n_in, n_out, activation, rng, *, sigma=INIT_SIGMA,
              random_biases=False, mu_min=1e-4) -> Layer:
    """Fresh fully-connected layer.

    Weights are N(0, sigma^2); biases are zero unless ``random_biases``
    (used by covering, which randomises the whole net).  The mutation-rate
    vector is seeded U[mu_min, 1] and eta uniformly inside its range.
    """
    weights = rng.standard_normal((n_out, n_in)) * sigma
    if random_biases:
        biases = rng.standard_normal(n_out) * sigma
    else:
        biases = np.zeros(n_out)
    mu = rng.uniform(mu_min, 1.0, 4)
    eta = float(rng.uniform(ETA_MIN, ETA_MAX))
    return Layer(
        weights=weights,
        biases=biases,
        mask=np.ones((n_out, n_in), dtype=np.uint8),
        activation=activation,
        eta=eta,
        mu=mu,
        mom_w=np.zeros((n_out, n_in)),
        mom_b=np.zeros(n_out),
    )


def new_network(n_inputs, n_hidden, n_outputs, rng, *, sigma=INIT_SIGMA,
                random_biases=False, mu_min=1e-4) -> Network:
    hidden = new_layer(n_inputs, n_hidden, Activation.SELU, rng,
                       sigma=sigma, random_biases=random_biases, mu_min=mu_min)
    out = new_layer(n_hidden, n_outputs, Activation.LOGISTIC, rng,
                    sigma=sigma, random_biases=random_biases, mu_min=mu_min)
    return Network([hidden, out])


def clone(net: Network) -> Network:
    """Deep copy; momentum buffers reset to zero."""
    return Network([layer.copy() for layer in net.layers])


def pred_args(net: Network) -> tuple:
    """Kernel argument tuple for the fused SGD step."""
    h, o = net.layers
    return (h.weights, h.biases, h.mask, h.mom_w, h.mom_b, h.eta,
            o.weights, o.biases, o.mask, o.mom_w, o.mom_b, o.eta)


def cond_args(net: Network) -> tuple:
    """Kernel argument tuple for the matching forward pass."""
    h, o = net.layers
    return (h.weights, h.biases, o.weights, o.biases)


def _as_vector(x, n, what):
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"{what} has shape {x.shape}, expected ({n},)")
    return x


def forward(net: Network, x) -> np.ndarray:
    """Activations of the output layer for input ``x``."""
    x = _as_vector(x, net.n_inputs, "input")
    _, y = kernels.forward2(*cond_args(net), x)
    return y


def sgd_update(net: Network, x, target, omega: float) -> np.ndarray:
    """One momentum-SGD step on the MSE between forward(net, x) and target.

    Updates weights, biases, and momentum buffers in place; masked-off
    weights are untouched.  Returns the pre-update outputs.
    """
    x = _as_vector(x, net.n_inputs, "input")
    target = _as_vector(target, net.n_outputs, "target")
    y = np.empty(net.n_outputs)
    kernels.fused_sgd2(*pred_args(net), omega, x, target, y)
    return y


def gradients(net: Network, x, target):
    """MSE gradients for every weight and bias, via the update kernel.

    Runs one momentum-free unit-rate step on a throwaway copy and reads the
    deltas back, so the values are exactly what the kernel applies.
    Returns [(dW, db), ...] per layer; masked entries are exactly zero.
    """
    probe = clone(net)
    before = [(l.weights.copy(), l.biases.copy()) for l in probe.layers]
    for layer in probe.layers:
        layer.eta = 1.0
    sgd_update(probe, x, target, omega=0.0)
    grads = []
    for (w0, b0), layer in zip(before, probe.layers):
        grads.append((w0 - layer.weights, b0 - layer.biases))
    return grads


def self_adapt(layer: Layer, rng, mu_min: float) -> None:
    """Mutate the layer's own mutation rates: mu <- mu * e^N(0,1), clamped."""
    layer.mu *= np.exp(rng.standard_normal(4))
    np.clip(layer.mu, mu_min, 1.0, out=layer.mu)


def mutate_weights(layer: Layer, rng) -> None:
    """Gaussian noise with sigma mu[0] on every active weight and bias."""
    sigma = layer.mu[MU_WEIGHT]
    dw = rng.standard_normal(layer.weights.shape) * sigma
    layer.weights += dw * layer.mask
    layer.biases += rng.standard_normal(layer.biases.shape) * sigma


def mutate_eta(layer: Layer, rng) -> None:
    """Gaussian noise with sigma mu[2] on the gradient-descent rate."""
    layer.eta = float(np.clip(layer.eta + rng.standard_normal() * layer.mu[MU_ETA],
                              ETA_MIN, ETA_MAX))


def mutate_connections(layer: Layer, rng) -> None:
    """Flip each mask bit with probability mu[3].

    Disabled connections are zeroed; re-enabled ones restart from a small
    random weight with zero momentum.
    """
    flips = rng.random(layer.mask.shape) < layer.mu[MU_CONNECT]
    fresh = rng.standard_normal(layer.weights.shape) * INIT_SIGMA
    if not flips.any():
        return
    enabled = flips & (layer.mask == 0)
    disabled = flips & (layer.mask == 1)
    layer.mask[flips] ^= 1
    layer.weights[enabled] = fresh[enabled]
    layer.weights[disabled] = 0.0
    layer.mom_w[flips] = 0.0


def mutate_neurons(net: Network, rng, h_M: int, h_max, connection_mutation: bool) -> None:
    """Grow or shrink the hidden layer by up to ``h_M`` neurons.

    The step is round(g * mu[1] * h_M) with g ~ N(0,1), clamped to
    [-h_M, h_M] and then so that the hidden size stays in [1, h_max].
    """
    hidden, out = net.layers
    g = rng.standard_normal()
    n = int(round(g * hidden.mu[MU_NEURON] * h_M))
    n = max(-h_M, min(h_M, n))
    h = hidden.n_out
    new_h = h + n
    if h_max is not None:
        new_h = min(new_h, h_max)
    new_h = max(1, new_h)
    k = new_h - h
    if k > 0:
        _add_neurons(net, k, rng, connection_mutation)
    elif k < 0:
        _remove_neurons(net, -k, rng)


def _add_neurons(net: Network, k: int, rng, connection_mutation: bool) -> None:
    hidden, out = net.layers
    n_in = hidden.n_in
    n_out = out.n_out

    w_new = rng.standard_normal((k, n_in)) * INIT_SIGMA
    if connection_mutation:
        m_new = (rng.random((k, n_in)) < 0.5).astype(np.uint8)
    else:
        m_new = np.ones((k, n_in), dtype=np.uint8)
    w_new *= m_new
    hidden.weights = np.concatenate([hidden.weights, w_new])
    hidden.mask = np.concatenate([hidden.mask, m_new])
    hidden.biases = np.concatenate([hidden.biases, np.zeros(k)])
    hidden.mom_w = np.concatenate([hidden.mom_w, np.zeros((k, n_in))])
    hidden.mom_b = np.concatenate([hidden.mom_b, np.zeros(k)])

    w_out = rng.standard_normal((n_out, k)) * INIT_SIGMA
    if connection_mutation:
        m_out = (rng.random((n_out, k)) < 0.5).astype(np.uint8)
    else:
        m_out = np.ones((n_out, k), dtype=np.uint8)
    w_out *= m_out
    out.weights = np.ascontiguousarray(np.concatenate([out.weights, w_out], axis=1))
    out.mask = np.ascontiguousarray(np.concatenate([out.mask, m_out], axis=1))
    out.mom_w = np.ascontiguousarray(np.concatenate([out.mom_w, np.zeros((n_out, k))], axis=1))


def _remove_neurons(net: Network, k: int, rng) -> None:
    hidden, out = net.layers
    drop = rng.choice(hidden.n_out, size=k, replace=False)
    hidden.weights = np.delete(hidden.weights, drop, axis=0)
    hidden.mask = np.delete(hidden.mask, drop, axis=0)
    hidden.biases = np.delete(hidden.biases, drop)
    hidden.mom_w = np.delete(hidden.mom_w, drop, axis=0)
    hidden.mom_b = np.delete(hidden.mom_b, drop)
    out.weights = np.ascontiguousarray(np.delete(out.weights, drop, axis=1))
    out.mask = np.ascontiguousarray(np.delete(out.mask, drop, axis=1))
    out.mom_w = np.ascontiguousarray(np.delete(out.mom_w, drop, axis=1))
