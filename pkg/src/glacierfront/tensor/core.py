"""Dense multidimensional arrays with reverse-mode differentiation.

A :class:`Tensor` wraps a numpy array and records the operation that
produced it, so that a scalar loss can be differentiated with one
reverse sweep. The engine is deliberately small: only the operations
needed to express a windowed-attention encoder, a residual
convolutional decoder, and their training losses exist.

Design constraints honoured here:

* float64 storage by default; reductions accumulate at 64-bit.
* every op output is checked for NaN/Inf (see :func:`finite_checks`);
  a non-finite value raises :class:`NumericError` naming the op.
* kernels are plain numpy and bit-deterministic for a fixed input.
* backward visits each recorded op exactly once, in reverse
  topological order.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import NumericError, ShapeError

_FINITE_CHECKS = True


def set_finite_checks(enabled: bool) -> None:
    """Globally enable or disable per-op NaN/Inf checking."""
    global _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)


@contextlib.contextmanager
def finite_checks(enabled: bool):
    """Temporarily toggle per-op NaN/Inf checking."""
    global _FINITE_CHECKS
    prev = _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)
    try:
        yield
    finally:
        _FINITE_CHECKS = prev


def _check_finite(arr: np.ndarray, op: str) -> None:
    if _FINITE_CHECKS and not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite value produced by op '{op}'")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A dense array plus the bookkeeping needed for backpropagation.

    Attributes:
        data: the underlying numpy array (owned; do not mutate in place
            once the tensor participates in a graph).
        requires_grad: whether gradients should flow into this tensor.
        grad: accumulated gradient (same shape as ``data``) after a
            ``backward()`` call, else ``None``.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn", "_op")

    def __init__(self, data, requires_grad: bool = False, dtype=np.float64):
        self.data = np.asarray(data, dtype=dtype)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self._op = "leaf"
        _check_finite(self.data, "tensor")

    # -- construction -------------------------------------------------

    @classmethod
    def _from_op(
        cls,
        data: np.ndarray,
        parents: tuple["Tensor", ...],
        backward_fn,
        op: str,
    ) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = any(p.requires_grad for p in parents)
        out.grad = None
        if out.requires_grad:
            out._parents = parents
            out._backward_fn = backward_fn
            out._op = op
        else:
            out._parents = ()
            out._backward_fn = None
            out._op = op
        _check_finite(data, op)
        return out

    # -- basic properties ---------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        """A defensive copy of the values."""
        return np.array(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        grad = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self._op}{grad})"

    # -- backward ------------------------------------------------------

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Reverse sweep from this tensor.

        Each recorded op is visited exactly once in reverse topological
        order; gradients of shared inputs accumulate by summation.
        """
        if not self.requires_grad:
            raise ValueError("backward() on a tensor that does not require grad")
        if grad is None:
            if self.size != 1:
                raise ValueError("backward() without an explicit gradient needs a scalar")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.data.shape:
            raise ShapeError(
                f"gradient shape {grad.shape} does not match tensor shape {self.data.shape}"
            )

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))

        grads: dict[int, np.ndarray] = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward_fn is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward_fn(g)
            _check_finite(g, f"backward:{node._op}")
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other, dtype=self.data.dtype)

    def __add__(self, other):
        other = self._coerce(other)
        data = self.data + other.data

        def backward(g):
            return _unbroadcast(g, self.data.shape), _unbroadcast(g, other.data.shape)

        return Tensor._from_op(data, (self, other), backward, "add")

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        data = self.data - other.data

        def backward(g):
            return _unbroadcast(g, self.data.shape), _unbroadcast(-g, other.data.shape)

        return Tensor._from_op(data, (self, other), backward, "sub")

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        other = self._coerce(other)
        data = self.data * other.data
        a, b = self, other

        def backward(g):
            return (
                _unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape),
            )

        return Tensor._from_op(data, (self, other), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        data = self.data / other.data
        a, b = self, other

        def backward(g):
            return (
                _unbroadcast(g / b.data, a.data.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
            )

        return Tensor._from_op(data, (self, other), backward, "div")

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __neg__(self):
        data = -self.data

        def backward(g):
            return (-g,)

        return Tensor._from_op(data, (self,), backward, "neg")

    def __pow__(self, exponent: float):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")
        data = self.data ** exponent
        base = self

        def backward(g):
            return (g * exponent * base.data ** (exponent - 1),)

        return Tensor._from_op(data, (self,), backward, "pow")

    def __matmul__(self, other):
        other = self._coerce(other)
        if self.data.shape[-1] != other.data.shape[-2]:
            raise ShapeError(
                f"matmul inner axes differ: {self.data.shape} @ {other.data.shape}"
            )
        data = self.data @ other.data
        a, b = self, other

        def backward(g):
            ga = g @ np.swapaxes(b.data, -1, -2)
            gb = np.swapaxes(a.data, -1, -2) @ g
            return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

        return Tensor._from_op(data, (self, other), backward, "matmul")

    # -- elementwise functions ------------------------------------------

    def exp(self):
        data = np.exp(self.data)

        def backward(g):
            return (g * data,)

        return Tensor._from_op(data, (self,), backward, "exp")

    def log(self):
        data = np.log(self.data)
        src = self

        def backward(g):
            return (g / src.data,)

        return Tensor._from_op(data, (self,), backward, "log")

    def sqrt(self):
        data = np.sqrt(self.data)

        def backward(g):
            return (g / (2.0 * data),)

        return Tensor._from_op(data, (self,), backward, "sqrt")

    def abs(self):
        data = np.abs(self.data)
        src = self

        def backward(g):
            # subgradient 0 at the kink
            return (g * np.sign(src.data),)

        return Tensor._from_op(data, (self,), backward, "abs")

    def tanh(self):
        data = np.tanh(self.data)

        def backward(g):
            return (g * (1.0 - data * data),)

        return Tensor._from_op(data, (self,), backward, "tanh")

    def sigmoid(self):
        data = 0.5 * (1.0 + np.tanh(0.5 * self.data))

        def backward(g):
            return (g * data * (1.0 - data),)

        return Tensor._from_op(data, (self,), backward, "sigmoid")

    def relu(self):
        data = np.maximum(self.data, 0.0)
        src = self

        def backward(g):
            return (g * (src.data > 0.0),)

        return Tensor._from_op(data, (self,), backward, "relu")

    # -- reductions ------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        data = self.data.sum(axis=axis, keepdims=keepdims, dtype=np.float64)
        data = np.asarray(data, dtype=self.data.dtype)
        src_shape = self.data.shape

        def backward(g):
            g = np.asarray(g)
            if axis is None:
                return (np.broadcast_to(g, src_shape).copy(),)
            axes = axis if isinstance(axis, tuple) else (axis,)
            if not keepdims:
                for ax in sorted(a % len(src_shape) for a in axes):
                    g = np.expand_dims(g, ax)
            return (np.broadcast_to(g, src_shape).copy(),)

        return Tensor._from_op(data, (self,), backward, "sum")

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            count = self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = 1
            for ax in axes:
                count *= self.data.shape[ax]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # -- shape manipulation ----------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        data = self.data.reshape(shape)
        src_shape = self.data.shape

        def backward(g):
            return (g.reshape(src_shape),)

        return Tensor._from_op(data, (self,), backward, "reshape")

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        data = np.ascontiguousarray(self.data.transpose(axes))
        inverse = np.argsort(axes)

        def backward(g):
            return (np.ascontiguousarray(g.transpose(inverse)),)

        return Tensor._from_op(data, (self,), backward, "transpose")

    def __getitem__(self, key):
        data = np.ascontiguousarray(self.data[key])
        src_shape = self.data.shape
        src_dtype = self.data.dtype

        def backward(g):
            full = np.zeros(src_shape, dtype=src_dtype)
            full[key] += g
            return (full,)

        return Tensor._from_op(data, (self,), backward, "slice")


# -- free functions ------------------------------------------------------


def concat(tensors: Iterable[Tensor], axis: int) -> Tensor:
    """Concatenate along `axis`; backward splits the gradient."""
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        out = []
        for i in range(len(sizes)):
            index = [slice(None)] * g.ndim
            index[axis] = slice(offsets[i], offsets[i + 1])
            out.append(np.ascontiguousarray(g[tuple(index)]))
        return out

    return Tensor._from_op(data, tuple(tensors), backward, "concat")


def take(table: Tensor, index: np.ndarray) -> Tensor:
    """Gather rows of `table` by an integer index array.

    Output shape is ``index.shape + table.shape[1:]``. Backward
    scatter-adds into the table (deterministic; uses np.add.at).
    """
    index = np.asarray(index)
    if not np.issubdtype(index.dtype, np.integer):
        raise TypeError("take() requires an integer index array")
    data = np.ascontiguousarray(table.data[index])
    table_shape = table.data.shape
    table_dtype = table.data.dtype

    def backward(g):
        full = np.zeros(table_shape, dtype=table_dtype)
        np.add.at(full, index, g)
        return (full,)

    return Tensor._from_op(data, (table,), backward, "take")


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise maximum; on ties the gradient goes to `a`."""
    data = np.maximum(a.data, b.data)
    pick_a = a.data >= b.data

    def backward(g):
        return (
            _unbroadcast(g * pick_a, a.data.shape),
            _unbroadcast(g * ~pick_a, b.data.shape),
        )

    return Tensor._from_op(data, (a, b), backward, "maximum")


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise minimum; on ties the gradient goes to `a`."""
    data = np.minimum(a.data, b.data)
    pick_a = a.data <= b.data

    def backward(g):
        return (
            _unbroadcast(g * pick_a, a.data.shape),
            _unbroadcast(g * ~pick_a, b.data.shape),
        )

    return Tensor._from_op(data, (a, b), backward, "minimum")


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit, tanh approximation."""
    c = np.sqrt(2.0 / np.pi)
    inner = c * (x.data + 0.044715 * x.data ** 3)
    t = np.tanh(inner)
    data = 0.5 * x.data * (1.0 + t)

    def backward(g):
        dt = (1.0 - t * t) * c * (1.0 + 3 * 0.044715 * x.data ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * dt),)

    return Tensor._from_op(data, (x,), backward, "gelu")


def silu(x: Tensor) -> Tensor:
    """x * sigmoid(x), the activation used inside the residual blocks."""
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    data = x.data * s

    def backward(g):
        return (g * (s + x.data * s * (1.0 - s)),)

    return Tensor._from_op(data, (x,), backward, "silu")
