"""Tensor with a value array, a gradient array and a recorded backward rule.

Every differentiable operation in the package returns a :class:`Tensor` whose
``_backward`` closure pushes ``self.grad`` into its parents. Calling
:func:`backward` on a scalar result walks the recorded graph in reverse
topological order.
"""

import numpy as np


class DimensionError(ValueError):
    """Operand shapes do not conform."""


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, values, requires_grad=False, name=None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 0:
            values = values.reshape(())
        self.values = values
        self.grad = np.zeros_like(values) if requires_grad else None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self):
        return self.values.size

    def item(self):
        return float(self.values)

    def zero_grad(self):
        if self.grad is not None:
            self.grad[...] = 0.0

    def detach(self):
        return Tensor(self.values.copy())

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True).reshape(self.values.shape)
        else:
            self.grad += g

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.values.shape}, requires_grad={self.requires_grad})"

    # arithmetic sugar; implementations live in ops
    def __add__(self, other):
        from .ops import add
        return add(self, other)

    def __radd__(self, other):
        from .ops import add
        return add(other, self)

    def __sub__(self, other):
        from .ops import sub
        return sub(self, other)

    def __rsub__(self, other):
        from .ops import sub
        return sub(other, self)

    def __mul__(self, other):
        from .ops import mul
        return mul(self, other)

    def __rmul__(self, other):
        from .ops import mul
        return mul(other, self)

    def __neg__(self):
        from .ops import mul
        return mul(self, -1.0)

    def __getitem__(self, index):
        from .ops import index as _index
        return _index(self, index)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def needs_grad(*tensors):
    return any(t.requires_grad for t in tensors)


def make_node(values, parents, backward):
    """Wrap ``values`` in a Tensor and record ``backward`` if any parent needs it."""
    out = Tensor(values)
    if needs_grad(*parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _topological_order(root):
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
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss, grad=None):
    """Accumulate d(loss)/d(leaf) into the ``grad`` of every reachable leaf."""
    if not loss.requires_grad:
        return
    seed = np.ones_like(loss.values) if grad is None else np.asarray(grad, dtype=np.float64)
    order = _topological_order(loss)
    # intermediate gradients are transient; leaves keep their buffers
    for node in order:
        if node._backward is not None:
            node.grad = None
    loss.accumulate(seed)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    for node in order:
        if node._backward is not None:
            node.grad = None
            node._backward = None
            node._parents = ()
