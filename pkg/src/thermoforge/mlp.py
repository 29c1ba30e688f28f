"""Fully-connected tanh networks, their derivatives, and Adam."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Jet, Var
from .errors import InvalidParameterError, TrainingDivergenceError
from .rng import stream

ACTIVATIONS = ("tanh", "identity")


@dataclass
class MlpNetwork:
    """Weights are stored ``(fan_in, fan_out)`` so a batch ``X @ W + b``
    maps rows to rows.  Hidden layers use ``activation``; the output layer
    is always linear."""

    layer_sizes: tuple
    weights: list
    biases: list
    activation: str = "tanh"
    seed: int | None = None
    step: int = 0

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2:
            raise InvalidParameterError("layer_sizes needs an input and an output size")
        if self.activation not in ACTIVATIONS:
            raise InvalidParameterError(f"unknown activation {self.activation!r}")
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        for k, (a, b) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            if self.weights[k].shape != (a, b) or self.biases[k].shape != (b,):
                raise InvalidParameterError(f"layer {k} parameter shapes do not match {a}->{b}")
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise InvalidParameterError("network parameters must be finite")

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def output_width(self):
        return self.layer_sizes[-1]

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_parameters(self, params) -> "MlpNetwork":
        params = [np.asarray(p, dtype=float) for p in params]
        return MlpNetwork(self.layer_sizes, params[0::2], params[1::2], self.activation, self.seed, self.step)

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def with_flat(self, vec) -> "MlpNetwork":
        vec = np.asarray(vec, dtype=float)
        params, pos = [], 0
        for p in self.parameters():
            params.append(vec[pos:pos + p.size].reshape(p.shape))
            pos += p.size
        return self.with_parameters(params)

    def _check_inputs(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_inputs:
            raise InvalidParameterError(f"expected {self.n_inputs} inputs, got {X.shape[1]}")
        return X, single

    def forward(self, X) -> np.ndarray:
        X, single = self._check_inputs(X)
        a = X
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if k < last and self.activation == "tanh":
                a = np.tanh(a)
        return a[0] if single else a

    def jet(self, X, wrt, params=None) -> Jet:
        """Output value and input derivatives as tape variables.

        ``params`` (a list of :class:`Var` in :meth:`parameters` order)
        lets callers differentiate the result with respect to the weights.
        """
        X, _ = self._check_inputs(X)
        for i in wrt:
            if not 0 <= i < self.n_inputs:
                raise InvalidParameterError(f"input index {i} out of range")
        if params is None:
            params = [Var(p) for p in self.parameters()]
        h = Jet.inputs(X, wrt)
        last = len(self.weights) - 1
        for k in range(len(self.weights)):
            h = h.matmul(params[2 * k]) + params[2 * k + 1]
            if k < last and self.activation == "tanh":
                h = h.tanh()
        return h

    __call__ = jet

    def to_dict(self) -> dict:
        return {"kind": "mlp", "layer_sizes": list(self.layer_sizes), "activation": self.activation,
                "seed": self.seed, "step": self.step, "weights": self.flat().tolist()}

    @classmethod
    def from_dict(cls, d) -> "MlpNetwork":
        sizes = d["layer_sizes"]
        template = cls(sizes, [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
                       [np.zeros(b) for b in sizes[1:]], d.get("activation", "tanh"), d.get("seed"),
                       d.get("step", 0))
        return template.with_flat(d["weights"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MlpNetwork":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def init_weights(layer_sizes, seed=0, activation="tanh") -> MlpNetwork:
    """Xavier-uniform weights (variance ``2 / (fan_in + fan_out)``), zero biases."""
    layer_sizes = tuple(layer_sizes)
    if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
        raise InvalidParameterError("layer_sizes must list at least two positive sizes")
    weights, biases = [], []
    for k, (a, b) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        limit = np.sqrt(6.0 / (a + b))
        weights.append(stream(seed, "init", k).uniform(-limit, limit, size=(a, b)))
        biases.append(np.zeros(b))
    return MlpNetwork(layer_sizes, weights, biases, activation, seed)


def forward(net: MlpNetwork, inputs) -> np.ndarray:
    return net.forward(inputs)


def input_derivatives(net: MlpNetwork, inputs, wrt, order=2) -> dict:
    """Exact ``du/dx_i`` (and ``d2u/dx_i2`` when ``order == 2``).

    Returns ``{i: (first, second)}``; arrays have shape ``(n, output_width)``
    (or ``(output_width,)`` for a single point); ``second`` is ``None`` for
    ``order == 1``.
    """
    if order not in (1, 2):
        raise InvalidParameterError("order must be 1 or 2")
    wrt = (wrt,) if np.isscalar(wrt) else tuple(wrt)
    X, single = net._check_inputs(inputs)
    h = net.jet(X, wrt)
    out = {}
    for i in wrt:
        d1 = h.first(i).value
        d2 = h.second(i).value if order == 2 else None
        if single:
            d1 = d1[0]
            d2 = None if d2 is None else d2[0]
        out[i] = (d1, d2)
    return out


def parameter_vars(net: MlpNetwork) -> list:
    return [Var(p) for p in net.parameters()]


def parameter_gradient(net: MlpNetwork, inputs, loss) -> np.ndarray:
    """Flat gradient of ``loss(u)`` with respect to every network parameter.

    ``loss`` receives the network output as a :class:`Var` of shape
    ``(n, output_width)`` and returns either a scalar ``Var`` or one loss
    per sample (summed).
    """
    X, _ = net._check_inputs(inputs)
    params = parameter_vars(net)
    u = net.jet(X, (), params).value
    L = loss(u)
    if not isinstance(L, Var):
        L = Var(L)
    if not np.all(np.isfinite(L.value)):
        bad = np.flatnonzero(~np.isfinite(np.atleast_1d(L.value)))
        rows = np.flatnonzero(~np.all(np.isfinite(u.value), axis=1))
        index = int(rows[0]) if rows.size else int(bad[0])
        raise TrainingDivergenceError(f"non-finite loss at batch index {index}", index=index)
    if L.value.ndim:
        L = L.sum()
    L.backward()
    return np.concatenate([(p.grad if p.grad is not None else np.zeros(p.shape)).ravel() for p in params])


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_parameters(cls, params, **kw) -> "AdamState":
        return cls(m=[np.zeros_like(p, dtype=float) for p in params],
                   v=[np.zeros_like(p, dtype=float) for p in params], **kw)


def adam_step(state: AdamState, params, grads):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    if not state.m:
        state = AdamState.for_parameters(params, learning_rate=state.learning_rate, beta1=state.beta1,
                                         beta2=state.beta2, eps=state.eps, step=state.step)
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InvalidParameterError("parameter, gradient and state lists differ in length")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        p = np.asarray(p, dtype=float)
        g = np.asarray(g, dtype=float)
        if p.shape != g.shape or m.shape != p.shape:
            raise InvalidParameterError(f"shape mismatch: parameter {p.shape}, gradient {g.shape}")
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new_p.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(state.learning_rate, b1, b2, state.eps, t, new_m, new_v)
