"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Var` records its parents and the vector-Jacobian product for each.
:meth:`Var.backward` visits nodes in reverse creation order, which is a
valid topological order because a node is always created after its parents.

Input derivatives of a network are obtained by pushing first- and
second-order tangents through the network with ordinary ``Var`` arithmetic
(see :class:`Jet`).  The tangents are therefore themselves on the tape and
parameter gradients of any loss built from them are exact.
"""
from __future__ import annotations

import itertools

import numpy as np

_counter = itertools.count()


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


class Var:
    __slots__ = ("value", "grad", "parents", "uid")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, value, parents=()):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.parents = parents
        self.uid = next(_counter)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = lift(other)
        return Var(self.value + other.value, (
            (self, lambda g: _unbroadcast(g, self.shape)),
            (other, lambda g: _unbroadcast(g, other.shape)),
        ))

    __radd__ = __add__

    def __sub__(self, other):
        other = lift(other)
        return Var(self.value - other.value, (
            (self, lambda g: _unbroadcast(g, self.shape)),
            (other, lambda g: _unbroadcast(-g, other.shape)),
        ))

    def __rsub__(self, other):
        return lift(other) - self

    def __neg__(self):
        return Var(-self.value, ((self, lambda g: -g),))

    def __mul__(self, other):
        other = lift(other)
        a, b = self.value, other.value
        return Var(a * b, (
            (self, lambda g: _unbroadcast(g * b, self.shape)),
            (other, lambda g: _unbroadcast(g * a, other.shape)),
        ))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = lift(other)
        a, b = self.value, other.value
        return Var(a / b, (
            (self, lambda g: _unbroadcast(g / b, self.shape)),
            (other, lambda g: _unbroadcast(-g * a / (b * b), other.shape)),
        ))

    def __rtruediv__(self, other):
        return lift(other) / self

    def __pow__(self, k):
        if isinstance(k, Var):
            raise TypeError("only constant exponents are supported")
        a = self.value
        return Var(a**k, ((self, lambda g: g * k * a ** (k - 1)),))

    def __matmul__(self, other):
        other = lift(other)
        a, b = self.value, other.value
        return Var(a @ b, (
            (self, lambda g: g @ b.T),
            (other, lambda g: a.T @ g),
        ))

    def __rmatmul__(self, other):
        return lift(other) @ self

    def __getitem__(self, idx):
        shape = self.shape

        def back(g):
            out = np.zeros(shape)
            np.add.at(out, idx, g)
            return out

        return Var(self.value[idx], ((self, back),))

    # reductions -----------------------------------------------------------
    def sum(self, axis=None):
        shape = self.shape

        def back(g):
            if axis is None:
                return np.broadcast_to(g, shape).copy()
            return np.broadcast_to(np.expand_dims(g, axis), shape).copy()

        return Var(self.value.sum(axis=axis), ((self, back),))

    def mean(self, axis=None):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis) / float(n)

    # backward -------------------------------------------------------------
    def backward(self, seed=None):
        """Accumulate d(self)/d(node) into ``node.grad`` for every ancestor."""
        nodes = {}
        stack = [self]
        while stack:
            v = stack.pop()
            if v.uid in nodes:
                continue
            nodes[v.uid] = v
            for p, _ in v.parents:
                if p.uid not in nodes:
                    stack.append(p)
        for v in nodes.values():
            v.grad = None
        self.grad = np.ones_like(self.value) if seed is None else np.asarray(seed, dtype=float)
        for uid in sorted(nodes, reverse=True):
            v = nodes[uid]
            if v.grad is None:
                continue
            for p, fn in v.parents:
                g = fn(v.grad)
                p.grad = g if p.grad is None else p.grad + g


def lift(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unary(x: Var, f, df):
    fx = f(x.value)
    d = df(x.value, fx)
    return Var(fx, ((x, lambda g: g * d),))


def tanh(x):
    return _unary(lift(x), np.tanh, lambda a, t: 1.0 - t * t)


def sin(x):
    return _unary(lift(x), np.sin, lambda a, s: np.cos(a))


def cos(x):
    return _unary(lift(x), np.cos, lambda a, c: -np.sin(a))


def exp(x):
    return _unary(lift(x), np.exp, lambda a, e: e)


def square(x):
    return x * x


def concat(parts, axis=1):
    parts = [lift(p) for p in parts]
    sizes = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def make_back(k):
        def back(g):
            return np.split(g, sizes, axis=axis)[k]
        return back

    value = np.concatenate([p.value for p in parts], axis=axis)
    return Var(value, tuple((p, make_back(k)) for k, p in enumerate(parts)))


class Jet:
    """Value with first and second derivatives along selected input axes.

    ``d1[i]`` and ``d2[i]`` hold the first and (diagonal) second derivative
    with respect to input ``i``; ``None`` means identically zero.
    """

    def __init__(self, value, d1, d2):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def inputs(cls, X, wrt):
        X = np.asarray(X, dtype=float)
        d1 = {}
        for i in wrt:
            e = np.zeros_like(X)
            e[:, i] = 1.0
            d1[i] = Var(e)
        return cls(Var(X), d1, {i: None for i in wrt})

    def column(self, j):
        return Jet(self.value[:, j:j + 1],
                   {i: None if d is None else d[:, j:j + 1] for i, d in self.d1.items()},
                   {i: None if d is None else d[:, j:j + 1] for i, d in self.d2.items()})

    @classmethod
    def concat(cls, jets):
        """Stack single-channel jets into one multi-channel jet."""
        keys = jets[0].d1.keys()

        def stack(chans):
            if all(c is None for c in chans):
                return None
            return concat([c if c is not None else Var(np.zeros(j.value.shape)) for c, j in zip(chans, jets)])

        return cls(concat([j.value for j in jets]),
                   {i: stack([j.d1[i] for j in jets]) for i in keys},
                   {i: stack([j.d2[i] for j in jets]) for i in keys})

    @staticmethod
    def _add(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return a + b

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value + other, self.d1, self.d2)
        return Jet(self.value + other.value,
                   {i: self._add(self.d1[i], other.d1[i]) for i in self.d1},
                   {i: self._add(self.d2[i], other.d2[i]) for i in self.d2})

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value * other,
                       {i: None if d is None else d * other for i, d in self.d1.items()},
                       {i: None if d is None else d * other for i, d in self.d2.items()})
        u, v = self.value, other.value
        d1, d2 = {}, {}
        for i in self.d1:
            du, dv = self.d1[i], other.d1[i]
            d1[i] = self._add(None if du is None else du * v, None if dv is None else u * dv)
            cross = None if du is None or dv is None else 2.0 * (du * dv)
            d2[i] = self._add(self._add(None if self.d2[i] is None else self.d2[i] * v,
                                        None if other.d2[i] is None else u * other.d2[i]), cross)
        return Jet(u * v, d1, d2)

    __rmul__ = __mul__

    def matmul(self, W):
        """Right-multiply by a (parameter) matrix: linear in every channel."""
        return Jet(self.value @ W,
                   {i: None if d is None else d @ W for i, d in self.d1.items()},
                   {i: None if d is None else d @ W for i, d in self.d2.items()})

    def apply(self, f, df, d2f):
        """Chain rule for an elementwise function with derivatives ``df``, ``d2f``."""
        z = self.value
        fz, f1, f2 = f(z), df(z), d2f(z)
        d1, d2 = {}, {}
        for i in self.d1:
            dz = self.d1[i]
            d1[i] = None if dz is None else f1 * dz
            term = None if dz is None else f2 * (dz * dz)
            d2[i] = self._add(None if self.d2[i] is None else f1 * self.d2[i], term)
        return Jet(fz, d1, d2)

    def tanh(self):
        t = tanh(self.value)

        def f(_):
            return t

        def df(_):
            return 1.0 - t * t

        def d2f(_):
            return -2.0 * t * (1.0 - t * t)

        return self.apply(f, df, d2f)

    def sin(self):
        return self.apply(sin, cos, lambda z: -sin(z))

    def cos(self):
        return self.apply(cos, lambda z: -sin(z), lambda z: -cos(z))

    def exp(self):
        e = exp(self.value)
        return self.apply(lambda _: e, lambda _: e, lambda _: e)

    def first(self, i):
        d = self.d1[i]
        return d if d is not None else Var(np.zeros(self.value.shape))

    def second(self, i):
        d = self.d2[i]
        return d if d is not None else Var(np.zeros(self.value.shape))
