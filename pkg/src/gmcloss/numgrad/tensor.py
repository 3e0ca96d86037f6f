"""Define-by-run reverse-mode autodiff over float64 numpy arrays.

Every op builds its output eagerly and, when any input requires a gradient,
records a closure that maps the output gradient to input gradients. Calling
:func:`backward` on a scalar walks the recorded graph in reverse topological
order. The graph is rebuilt on every forward pass.

Broadcasting is limited to tensor-vs-scalar for elementwise ops, plus
:func:`bias_add` and shared-weight batched :func:`matmul`.
"""
from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from . import special


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class Tensor:
    __slots__ = ("data", "requires_grad", "_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, *, _parents=(), _backward=None, op: str = ""):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self._grad = None
        self._parents = tuple(_parents)
        self._backward = _backward
        self.op = op

    # --- basic properties -------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def __len__(self) -> int:
        return len(self.data)

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            return np.zeros_like(self.data)
        return self._grad

    @grad.setter
    def grad(self, value) -> None:
        self._grad = None if value is None else np.array(value, dtype=np.float64)

    def zero_grad(self) -> None:
        self._grad = None

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    # --- operator sugar -----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def permute(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return permute(self, axes)

    @property
    def T(self):
        return transpose(self)

    def backward(self) -> None:
        backward(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


_state = threading.local()


def _recording() -> bool:
    return getattr(_state, "recording", True)


class no_grad:
    """Context manager that suspends graph recording on this thread."""

    def __enter__(self):
        self._prev = _recording()
        _state.recording = False

    def __exit__(self, *exc):
        _state.recording = self._prev


def _make(data, parents: Sequence[Tensor], grad_fn: Callable, op: str) -> Tensor:
    """Wrap an op result, recording ``grad_fn`` only if some parent needs it.

    ``grad_fn(g)`` returns one gradient (or None) per parent.
    """
    if _recording() and any(p.requires_grad for p in parents):
        return Tensor(data, True, _parents=parents, _backward=grad_fn, op=op)
    return Tensor(data, op=op)


# --- tape / backward -----------------------------------------------------------


class Tape:
    """Recorded operations reachable from a root, in topological order.

    ``nodes[i]`` never precedes any of its inputs. Constants (tensors that do
    not require a gradient) are pruned since nothing flows into them.
    """

    def __init__(self, nodes: list[Tensor]):
        self.nodes = nodes

    @classmethod
    def trace(cls, root: Tensor) -> "Tape":
        order: list[Tensor] = []
        seen: set[int] = set()
        if not root.requires_grad:
            return cls(order)
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable leaf."""
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = Tape.trace(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node._grad = g.copy() if node._grad is None else node._grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


# --- elementwise -----------------------------------------------------------------


def _is_scalar(t: Tensor) -> bool:
    return t.ndim == 0


def _check_binary(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ and neither is a scalar")


def _unbroadcast(g: np.ndarray, t: Tensor) -> np.ndarray:
    if _is_scalar(t) and g.ndim:
        return np.asarray(g.sum())
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary(a, b, "add")
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary(a, b, "sub")
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a), _unbroadcast(-g, b)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_binary(a, b, "mul")
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a), _unbroadcast(g * a.data, b)), "mul")


def div(a, b) -> Tensor:
    """Elementwise quotient. A zero anywhere in the denominator raises."""
    a, b = as_tensor(a), as_tensor(b)
    _check_binary(a, b, "div")
    if np.any(b.data == 0.0):
        raise ZeroDivisionError("div: zero in denominator")
    out = a.data / b.data

    def grad_fn(g):
        return _unbroadcast(g / b.data, a), _unbroadcast(-g * out / b.data, b)

    return _make(out, (a, b), grad_fn, "div")


def neg(x) -> Tensor:
    x = as_tensor(x)
    return _make(-x.data, (x,), lambda g: (-g,), "neg")


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return _make(out, (x,), lambda g: (g * out,), "exp")


def log(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0.0):
        raise ValueError("log: non-positive input")
    return _make(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


def sqrt(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data < 0.0):
        raise ValueError("sqrt: negative input")
    out = np.sqrt(x.data)
    return _make(out, (x,), lambda g: (g / (2.0 * out),), "sqrt")


def square(x) -> Tensor:
    x = as_tensor(x)
    return _make(x.data * x.data, (x,), lambda g: (2.0 * g * x.data,), "square")


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)
    return _make(out, (x,), lambda g: (g * (1.0 - out * out),), "tanh")


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0.0
    return _make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def erf(x) -> Tensor:
    x = as_tensor(x)
    out = special.erf(x.data)
    return _make(out, (x,), lambda g: (g * special.erf_grad(x.data),), "erf")


_UNARY = {"neg": neg, "exp": exp, "log": log, "sqrt": sqrt, "square": square,
          "tanh": tanh, "relu": relu, "erf": erf}
_BINARY = {"add": add, "sub": sub, "mul": mul, "div": div}


def elementwise(op_kind: str, a, b=None) -> Tensor:
    """Dispatch by name; binary kinds need ``b``, unary kinds must not get one."""
    if op_kind in _BINARY:
        if b is None:
            raise TypeError(f"{op_kind} is binary")
        return _BINARY[op_kind](a, b)
    if op_kind in _UNARY:
        if b is not None:
            raise TypeError(f"{op_kind} is unary")
        return _UNARY[op_kind](a)
    raise ValueError(f"unknown elementwise op {op_kind!r}")


def bias_add(x, b) -> Tensor:
    """``x + b`` with ``b`` (1-D) broadcast along the last axis of ``x``."""
    x, b = as_tensor(x), as_tensor(b)
    if b.ndim != 1 or x.ndim < 1 or x.shape[-1] != b.shape[0]:
        raise ShapeError(f"bias_add: bias {b.shape} does not match last axis of {x.shape}")

    def grad_fn(g):
        return g, g.reshape(-1, b.shape[0]).sum(axis=0)

    return _make(x.data + b.data, (x, b), grad_fn, "bias_add")


# --- linear algebra ------------------------------------------------------------


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes.

    Both operands are at least 2-D. Leading (batch) axes must match, except
    that a 2-D ``b`` is shared across every batch entry of ``a``.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs >=2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    shared_b = b.ndim == 2 and a.ndim > 2
    if not shared_b and a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul: batch dimensions differ, {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def grad_fn(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        if shared_b:
            k = a.shape[-1]
            gb = a.data.reshape(-1, k).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.swapaxes(a.data, -1, -2) @ g
        return ga, gb

    return _make(out, (a, b), grad_fn, "matmul")


def softmax(x, axis: int = -1) -> Tensor:
    """Max-shifted softmax along ``axis``."""
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def grad_fn(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make(out, (x,), grad_fn, "softmax")


# --- reductions ------------------------------------------------------------------


def _norm_axis(axis, ndim):
    if axis is None:
        return None
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise ShapeError(f"axis {ax} out of range for {ndim}-D tensor")
        out.append(ax % ndim)
    return tuple(sorted(out))


def _expand_grad(g, shape, axes, keepdims):
    if axes is None:
        return np.broadcast_to(g, shape)
    if not keepdims:
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def sum_(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    axes = _norm_axis(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)
    return _make(out, (x,), lambda g: (np.array(_expand_grad(g, x.shape, axes, keepdims)),), "sum")


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    axes = _norm_axis(axis, x.ndim)
    count = x.size if axes is None else int(np.prod([x.shape[a] for a in axes]))
    out = x.data.mean(axis=axes, keepdims=keepdims)
    return _make(out, (x,),
                 lambda g: (np.array(_expand_grad(g, x.shape, axes, keepdims)) / count,), "mean")


def reduce(op_kind: str, x, axis=None, keepdims: bool = False) -> Tensor:
    if op_kind == "sum":
        return sum_(x, axis, keepdims)
    if op_kind == "mean":
        return mean(x, axis, keepdims)
    raise ValueError(f"unknown reduction {op_kind!r}")


# --- layout ----------------------------------------------------------------------


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {x.shape} to {shape}") from exc
    return _make(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def permute(x, axes) -> Tensor:
    x = as_tensor(x)
    axes = tuple(axes)
    if sorted(a % x.ndim for a in axes) != list(range(x.ndim)) or len(axes) != x.ndim:
        raise ShapeError(f"permute: {axes} is not a permutation of {x.ndim} axes")
    inverse = np.argsort([a % x.ndim for a in axes])
    return _make(np.transpose(x.data, axes), (x,),
                 lambda g: (np.transpose(g, inverse),), "permute")


def transpose(x) -> Tensor:
    """Swap the last two axes."""
    x = as_tensor(x)
    if x.ndim < 2:
        raise ShapeError("transpose needs at least 2 axes")
    axes = list(range(x.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return permute(x, axes)


def concat(tensors: Iterable, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat of nothing")
    ndim = tensors[0].ndim
    if ndim == 0:
        raise ShapeError("concat needs at least 1-D tensors")
    ax = _norm_axis(axis, ndim)[0]
    for t in tensors[1:]:
        if t.ndim != ndim or t.shape[:ax] + t.shape[ax + 1:] != tensors[0].shape[:ax] + tensors[0].shape[ax + 1:]:
            raise ShapeError(f"concat: shape {t.shape} incompatible with {tensors[0].shape} on axis {ax}")
    out = np.concatenate([t.data for t in tensors], axis=ax)
    splits = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, splits, axis=ax))

    return _make(out, tuple(tensors), grad_fn, "concat")


def take(x, indices, axis: int = 0) -> Tensor:
    """Gather along ``axis`` (``np.take`` semantics); backward scatter-adds."""
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.intp)
    ax = _norm_axis(axis, x.ndim)[0]
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[ax]):
        raise IndexError(f"take: index out of range for axis of length {x.shape[ax]}")
    out = np.take(x.data, idx, axis=ax)

    def grad_fn(g):
        acc = np.zeros(np.moveaxis(x.data, ax, 0).shape)
        # g has idx.ndim axes where x had one; bring them to the front
        g_front = np.moveaxis(g, list(range(ax, ax + idx.ndim)), list(range(idx.ndim)))
        np.add.at(acc, idx, g_front)
        return (np.moveaxis(acc, 0, ax),)

    return _make(out, (x,), grad_fn, "take")
