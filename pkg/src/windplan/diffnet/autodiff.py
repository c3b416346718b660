"""Reverse-mode autodiff over numpy arrays.

A :class:`Var` records the operation that produced it; :func:`backward`
walks the recorded graph in reverse topological order.  Only the handful of
elementwise ops the planner needs are provided.  Broadcasting follows numpy
and gradients are summed back to each operand's shape.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


class Var:
    __slots__ = ("value", "grad", "parents", "name")
    __array_ufunc__ = None

    def __init__(self, value, parents=(), name: str = ""):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        # each parent is (Var, vjp) with vjp mapping the output cotangent to the parent's
        self.parents = parents
        self.name = name

    def __repr__(self):
        return f"Var({self.value!r})"

    @property
    def shape(self):
        return self.value.shape

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        other = lift(other)
        return Var(self.value + other.value,
                   ((self, lambda g: _unbroadcast(g, self.shape)),
                    (other, lambda g: _unbroadcast(g, other.shape))))

    __radd__ = __add__

    def __sub__(self, other):
        other = lift(other)
        return Var(self.value - other.value,
                   ((self, lambda g: _unbroadcast(g, self.shape)),
                    (other, lambda g: _unbroadcast(-g, other.shape))))

    def __rsub__(self, other):
        return lift(other) - self

    def __mul__(self, other):
        other = lift(other)
        a, b = self.value, other.value
        return Var(a * b,
                   ((self, lambda g: _unbroadcast(g * b, self.shape)),
                    (other, lambda g: _unbroadcast(g * a, other.shape))))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = lift(other)
        a, b = self.value, other.value
        return Var(a / b,
                   ((self, lambda g: _unbroadcast(g / b, self.shape)),
                    (other, lambda g: _unbroadcast(-g * a / (b * b), other.shape))))

    def __rtruediv__(self, other):
        return lift(other) / self

    def __neg__(self):
        return Var(-self.value, ((self, lambda g: -g),))

    def __pow__(self, k):
        if isinstance(k, Var):
            raise TypeError("only constant exponents are supported")
        a = self.value
        return Var(a ** k, ((self, lambda g: g * k * a ** (k - 1)),))

    def __matmul__(self, other):
        other = lift(other)
        a, b = self.value, other.value
        return Var(a @ b,
                   ((self, lambda g: g @ b.T),
                    (other, lambda g: a.T @ g)))

    def __rmatmul__(self, other):
        return lift(other) @ self

    def __getitem__(self, idx):
        shape = self.shape

        # basic indexing only (ints and slices), so no index repeats
        def vjp(g):
            out = np.zeros(shape)
            out[idx] = g
            return out
        return Var(self.value[idx], ((self, vjp),))

    def sum(self, axis=None):
        shape = self.shape

        def vjp(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return np.broadcast_to(g, shape).copy()
        return Var(self.value.sum(axis=axis), ((self, vjp),))

    def mean(self, axis=None):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis) * (1.0 / n)


def lift(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


# elementwise functions; each accepts Var or plain arrays ----------------------

def sin(x):
    if not isinstance(x, Var):
        return np.sin(x)
    c = np.cos(x.value)
    return Var(np.sin(x.value), ((x, lambda g: g * c),))


def cos(x):
    if not isinstance(x, Var):
        return np.cos(x)
    s = np.sin(x.value)
    return Var(np.cos(x.value), ((x, lambda g: -g * s),))


def sincos(x):
    """``(sin x, cos x)`` sharing one evaluation of each."""
    if not isinstance(x, Var):
        return np.sin(x), np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    return Var(s, ((x, lambda g: g * c),)), Var(c, ((x, lambda g: -g * s),))


def exp(x):
    if not isinstance(x, Var):
        return np.exp(x)
    e = np.exp(x.value)
    return Var(e, ((x, lambda g: g * e),))


def sqrt(x):
    if not isinstance(x, Var):
        return np.sqrt(x)
    r = np.sqrt(x.value)
    return Var(r, ((x, lambda g: g * 0.5 / r),))


def softplus(x):
    if not isinstance(x, Var):
        return np.logaddexp(0.0, x)
    sig = 0.5 * (1.0 + np.tanh(0.5 * x.value))
    return Var(np.logaddexp(0.0, x.value), ((x, lambda g: g * sig),))


def square(x):
    return x * x


def value(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=float)


def _toposort(root: Var) -> list:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Var) -> None:
    """Accumulate d(root)/d(node) into ``node.grad`` for every node reached.

    ``root`` must be a scalar.  Reduction order is fixed by the graph, so
    repeated calls on identical graphs give bit-identical gradients.
    """
    if root.value.size != 1:
        raise ValueError("backward needs a scalar output")
    order = _toposort(root)
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.grad is None or not node.parents:
            continue
        for parent, vjp in node.parents:
            contrib = vjp(node.grad)
            parent.grad = contrib if parent.grad is None else parent.grad + contrib


def grad_of(root: Var, leaves) -> list:
    """Run :func:`backward` and return gradients for ``leaves`` (zeros if unreached)."""
    backward(root)
    return [np.zeros_like(v.value) if v.grad is None else v.grad for v in leaves]
