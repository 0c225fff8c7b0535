"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

The graph is a tape of closures rebuilt on every forward pass: each operation
returns a fresh :class:`Tensor` holding its parents and a backward closure.
Tracked tensors are never mutated in place. The op set is intentionally small,
just enough to express projection losses over small MLPs: matmul, broadcast
add, relu, row normalization onto the unit sphere, elementwise |x|^r,
reductions, and sorting with the permutation frozen at forward time.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericalAbortError

__all__ = ["Tensor", "constant", "zero_grads"]


def _as_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericalAbortError("non-finite value in tensor construction")
    return arr


class Tensor:
    """A node of the tape: float64 data, optional gradient, backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_done")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._done = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    def item(self) -> float:
        return float(self.data)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        """Backpropagate from a scalar loss through the tape, once."""
        if self.data.size != 1:
            raise ValueError("backward requires a scalar loss")
        if self._done:
            raise RuntimeError("backward already called on this tape; rebuild the graph")
        self._done = True

        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- op construction ---------------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents: tuple["Tensor", ...],
                backward: Callable[[np.ndarray], None]) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(p for p in parents if p.requires_grad)
            out._backward = backward
        return out

    def __add__(self, other: "Tensor") -> "Tensor":
        other = _wrap(other)
        a, b = self, other
        data = a.data + b.data

        def backward(g: np.ndarray) -> None:
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b.data.shape))

        return Tensor._result(data, (a, b), backward)

    def __sub__(self, other: "Tensor") -> "Tensor":
        other = _wrap(other)
        a, b = self, other
        data = a.data - b.data

        def backward(g: np.ndarray) -> None:
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g, b.data.shape))

        return Tensor._result(data, (a, b), backward)

    def __neg__(self) -> "Tensor":
        a = self

        def backward(g: np.ndarray) -> None:
            a._accumulate(-g)

        return Tensor._result(-a.data, (a,), backward)

    def scale(self, c: float) -> "Tensor":
        """Multiply by a python float (not tracked)."""
        a = self
        c = float(c)

        def backward(g: np.ndarray) -> None:
            a._accumulate(c * g)

        return Tensor._result(c * a.data, (a,), backward)

    def mul(self, other: "Tensor") -> "Tensor":
        other = _wrap(other)
        a, b = self, other
        data = a.data * b.data

        def backward(g: np.ndarray) -> None:
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.data, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.data, b.data.shape))

        return Tensor._result(data, (a, b), backward)

    def matmul(self, other: "Tensor") -> "Tensor":
        other = _wrap(other)
        a, b = self, other
        data = a.data @ b.data

        def backward(g: np.ndarray) -> None:
            if a.requires_grad:
                a._accumulate(g @ b.data.T)
            if b.requires_grad:
                b._accumulate(a.data.T @ g)

        return Tensor._result(data, (a, b), backward)

    def transpose(self) -> "Tensor":
        a = self

        def backward(g: np.ndarray) -> None:
            a._accumulate(g.T)

        return Tensor._result(a.data.T, (a,), backward)

    def relu(self) -> "Tensor":
        a = self
        mask = a.data > 0.0

        def backward(g: np.ndarray) -> None:
            a._accumulate(g * mask)

        return Tensor._result(np.where(mask, a.data, 0.0), (a,), backward)

    def abs(self) -> "Tensor":
        a = self
        sign = np.sign(a.data)

        def backward(g: np.ndarray) -> None:
            a._accumulate(g * sign)

        return Tensor._result(np.abs(a.data), (a,), backward)

    def square(self) -> "Tensor":
        a = self

        def backward(g: np.ndarray) -> None:
            a._accumulate(g * 2.0 * a.data)

        return Tensor._result(a.data * a.data, (a,), backward)

    def abs_pow(self, r: float) -> "Tensor":
        """Elementwise |x|^r for r >= 1 (subgradient 0 at x = 0)."""
        a = self
        r = float(r)
        if r < 1.0:
            raise ValueError("abs_pow requires r >= 1")
        if r == 1.0:
            return a.abs()
        if r == 2.0:
            return a.square()
        absx = np.abs(a.data)
        deriv = r * absx ** (r - 1.0) * np.sign(a.data)

        def backward(g: np.ndarray) -> None:
            a._accumulate(g * deriv)

        return Tensor._result(absx**r, (a,), backward)

    def sum(self) -> "Tensor":
        a = self

        def backward(g: np.ndarray) -> None:
            a._accumulate(np.full_like(a.data, float(g)))

        return Tensor._result(np.asarray(a.data.sum()), (a,), backward)

    def mean(self) -> "Tensor":
        return self.sum().scale(1.0 / self.data.size)

    def mean_axis0(self) -> "Tensor":
        """Column means of a 2-D tensor."""
        a = self
        n = a.data.shape[0]

        def backward(g: np.ndarray) -> None:
            a._accumulate(np.broadcast_to(g / n, a.data.shape).copy())

        return Tensor._result(a.data.mean(axis=0), (a,), backward)

    def sort_axis0(self) -> "Tensor":
        """Sort columns ascending; the permutation is frozen for the backward
        pass (ties broken by original index via stable sort)."""
        a = self
        perm = np.argsort(a.data, axis=0, kind="stable")
        data = np.take_along_axis(a.data, perm, axis=0)

        def backward(g: np.ndarray) -> None:
            scattered = np.zeros_like(a.data)
            np.put_along_axis(scattered, perm, g, axis=0)
            a._accumulate(scattered)

        return Tensor._result(data, (a,), backward)

    def sphere_normalize(self, eps: float = 1e-12) -> "Tensor":
        """Divide each row by max(||row||, eps), mapping rows onto the unit
        sphere for every input with norm >= eps."""
        a = self
        x = a.data if a.data.ndim == 2 else a.data.reshape(1, -1)
        squeeze = a.data.ndim == 1
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        denom = np.maximum(norms, eps)
        out = x / denom
        on_sphere = norms >= eps

        def backward(g: np.ndarray) -> None:
            g2 = g.reshape(1, -1) if squeeze else g
            inner = (g2 * out).sum(axis=1, keepdims=True)
            ga = (g2 - np.where(on_sphere, inner * out, 0.0)) / denom
            a._accumulate(ga.reshape(a.data.shape))

        return Tensor._result(out.reshape(a.data.shape), (a,), backward)

    def root(self, r: float, floor: float = 1e-24) -> "Tensor":
        """Scalar z -> max(z, floor)^(1/r); gradient is 0 below the floor so
        losses stay differentiable at exact zero."""
        a = self
        r = float(r)
        if a.data.size != 1:
            raise ValueError("root expects a scalar")
        z = float(a.data)
        clamped = max(z, floor)
        val = clamped ** (1.0 / r)
        deriv = (1.0 / r) * clamped ** (1.0 / r - 1.0) if z > floor else 0.0

        def backward(g: np.ndarray) -> None:
            a._accumulate(np.asarray(float(g) * deriv).reshape(a.data.shape))

        return Tensor._result(np.asarray(val).reshape(a.data.shape), (a,), backward)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(data) -> Tensor:
    """An untracked tensor; convenience mirror of Tensor(data)."""
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to `shape` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def zero_grads(tensors) -> None:
    for t in tensors:
        t.grad = None
