import numpy as np

from ..errors import ValidationError


def unbroadcast(grad, shape):
    """Sums `grad` over the axes broadcasting added or stretched to reach `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _real_if_needed(grad, data):
    if not np.iscomplexobj(data) and np.iscomplexobj(grad):
        return grad.real
    return grad


class Tensor:
    """
    Dense float64 (or complex128) array with a reverse-mode tape.

    A tensor created by an operation keeps references to its parents and a
    closure mapping the gradient of its value to the gradients of the parents.
    For complex values the gradient of a real loss L is stored as
    dL/dRe + i dL/dIm.
    """

    __array_priority__ = 100

    def __init__(self, data, parents=(), backward=None, requires_grad=False, name=None):
        data = np.asarray(data)
        if not np.iscomplexobj(data):
            data = data.astype(np.float64, copy=False)
        else:
            data = data.astype(np.complex128, copy=False)
        self.data = data
        self.grad = None
        self.name = name
        self._parents = tuple(parents)
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    def __repr__(self):
        return "<Tensor {}{} {}>".format(
            self.name + " " if self.name else "", self.shape, self.data.dtype
        )

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ValidationError(
                "Only single-element tensors convert to numbers, not {}".format(
                    self.shape
                )
            )
        return self.data.reshape(()).item()

    def __float__(self):
        return float(self.item())

    def zero_grad(self):
        self.grad = None

    # Arithmetic

    def __add__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def backward(g):
            return (
                unbroadcast(_real_if_needed(g, a.data), a.shape),
                unbroadcast(_real_if_needed(g, b.data), b.shape),
            )

        return Tensor(a.data + b.data, (a, b), backward)

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def backward(g):
            ga = g * (np.conj(b.data) if b.is_complex else b.data)
            gb = g * (np.conj(a.data) if a.is_complex else a.data)
            return (
                unbroadcast(_real_if_needed(ga, a.data), a.shape),
                unbroadcast(_real_if_needed(gb, b.data), b.shape),
            )

        return Tensor(a.data * b.data, (a, b), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self, other
        if a.is_complex or b.is_complex:
            raise ValidationError("Division is only defined for real tensors")

        def backward(g):
            return (
                unbroadcast(g / b.data, a.shape),
                unbroadcast(-g * a.data / b.data**2, b.shape),
            )

        return Tensor(a.data / b.data, (a, b), backward)

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, exponent):
        if isinstance(exponent, Tensor) or self.is_complex:
            raise ValidationError("Only real tensors to scalar powers are supported")
        a = self
        exponent = float(exponent)

        def backward(g):
            if exponent == 1.0:
                return (g,)
            return (g * exponent * a.data ** (exponent - 1),)

        return Tensor(a.data**exponent, (a,), backward)

    def __getitem__(self, index):
        a = self

        def backward(g):
            grad = np.zeros_like(a.data, dtype=g.dtype)
            np.add.at(grad, index, g)
            return (grad,)

        return Tensor(a.data[index], (a,), backward)

    # Reductions

    def sum(self, axis=None, keepdims=False):
        a = self

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, a.shape).copy(),)

        return Tensor(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else _axis_size(self.shape, axis)
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def transpose(self, *axes):
        a = self
        inverse = np.argsort(axes)
        return Tensor(
            np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),)
        )

    def reshape(self, *shape):
        a = self
        return Tensor(a.data.reshape(*shape), (a,), lambda g: (g.reshape(a.shape),))


def _axis_size(shape, axis):
    if isinstance(axis, int):
        axis = (axis,)
    return int(np.prod([shape[a] for a in axis]))


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def parameter(data, name=None) -> Tensor:
    """A leaf tensor that accumulates gradients."""
    return Tensor(np.array(data, copy=True), requires_grad=True, name=name)


def _topological_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor):
    """
    Accumulates d(loss)/d(leaf) into `.grad` of every leaf that requires grad.

    The loss has to be a single-element real tensor; the tape behind it is
    released afterwards.
    """
    if loss.data.size != 1:
        raise ValidationError(
            "backward needs a scalar loss, not shape {}".format(loss.shape)
        )
    if loss.is_complex:
        raise ValidationError("backward needs a real loss")
    if not loss.requires_grad:
        raise ValidationError("Loss does not depend on any parameter")
    order = _topological_order(loss)
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:
            node.grad = grad if node.grad is None else node.grad + grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = parent_grad
    for node in order:
        if node._backward is not None:
            node._parents = ()
            node._backward = None
