"""Minimal reverse-mode automatic differentiation over numpy arrays.

Each ``Tensor`` remembers the tensors it was computed from and a closure
that pushes its gradient back to them.  ``backward`` walks the graph in
reverse topological order.  Graph recording can be switched off with
``no_grad`` for inference.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    global _GRAD_ENABLED
    old, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = old


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, dtype=np.float64):
        self.data = np.asarray(data, dtype=dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    # -- bookkeeping -------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
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
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if node._parents:
                    # interior node: release memory early
                    node.grad = None if node is not self else node.grad

    # -- graph construction ------------------------------------------------
    @staticmethod
    def _make(data: np.ndarray, parents: Sequence["Tensor"], backward) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(p for p in parents if p.requires_grad)
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

    # -- elementwise -------------------------------------------------------
    def __add__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b.shape))

        return Tensor._make(a.data + b.data, (a, b), bw)

    __radd__ = __add__

    def __neg__(self):
        a = self
        return Tensor._make(-a.data, (a,), lambda g: a._accumulate(-g))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.data, b.shape))

        return Tensor._make(a.data * b.data, (a, b), bw)

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                if b.data.ndim == 1:
                    ga = np.multiply.outer(g, b.data)
                else:
                    ga = g @ np.swapaxes(b.data, -1, -2)
                a._accumulate(_unbroadcast(ga, a.shape))
            if b.requires_grad:
                if a.data.ndim == 1:
                    gb = np.multiply.outer(a.data, g)
                elif b.data.ndim == 1:
                    gb = np.tensordot(a.data, g, axes=(list(range(a.data.ndim - 1)), list(range(g.ndim))))
                else:
                    gb = np.swapaxes(a.data, -1, -2) @ g
                b._accumulate(_unbroadcast(gb, b.shape))

        return Tensor._make(a.data @ b.data, (a, b), bw)

    def __getitem__(self, idx):
        a = self
        out = a.data[idx]

        def bw(g):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            a._accumulate(full)

        return Tensor._make(out, (a,), bw)

    def sum(self, axis=None, keepdims: bool = False):
        a = self

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.shape))

        return Tensor._make(a.data.sum(axis=axis, keepdims=keepdims), (a,), bw)

    def mean(self):
        return self.sum() * (1.0 / self.data.size)

    def reshape(self, *shape):
        a = self
        return Tensor._make(a.data.reshape(*shape), (a,), lambda g: a._accumulate(g.reshape(a.shape)))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def sigmoid(x: Tensor) -> Tensor:
    s = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    return Tensor._make(s, (x,), lambda g: x._accumulate(g * s * (1.0 - s)))


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    return Tensor._make(t, (x,), lambda g: x._accumulate(g * (1.0 - t * t)))


def log(x: Tensor) -> Tensor:
    return Tensor._make(np.log(x.data), (x,), lambda g: x._accumulate(g / x.data))


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)
    return Tensor._make(e, (x,), lambda g: x._accumulate(g * e))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        x._accumulate(p * (g - (g * p).sum(axis=axis, keepdims=True)))

    return Tensor._make(p, (x,), bw)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    p = np.exp(out)

    def bw(g):
        x._accumulate(g - p * g.sum(axis=axis, keepdims=True))

    return Tensor._make(out, (x,), bw)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ax = axis % tensors[0].data.ndim
    sizes = [t.data.shape[ax] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[ax] = slice(lo, hi)
                t._accumulate(g[tuple(sl)])

    return Tensor._make(np.concatenate([t.data for t in tensors], axis=ax), tensors, bw)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def bw(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(np.take(g, i, axis=axis))

    return Tensor._make(np.stack([t.data for t in tensors], axis=axis), tensors, bw)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    ids = np.asarray(ids)

    def bw(g):
        full = np.zeros_like(weight.data)
        np.add.at(full, ids, g)
        weight._accumulate(full)

    return Tensor._make(weight.data[ids], (weight,), bw)


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, W: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM step with fused gates, ``W`` of shape (in + hidden, 4*hidden)
    and gate order input, forget, candidate, output."""
    xh = np.concatenate([x.data, h.data], axis=-1)
    z = xh @ W.data + b.data
    n = h.data.shape[-1]
    i = 0.5 * (np.tanh(0.5 * z[..., :n]) + 1.0)
    f = 0.5 * (np.tanh(0.5 * z[..., n:2 * n]) + 1.0)
    gg = np.tanh(z[..., 2 * n:3 * n])
    o = 0.5 * (np.tanh(0.5 * z[..., 3 * n:]) + 1.0)
    c_new = f * c.data + i * gg
    tc = np.tanh(c_new)
    h_new = o * tc
    grads = {"dh": None, "dc": None}

    def _finish():
        dh, dc = grads["dh"], grads["dc"]
        dh = np.zeros_like(h_new) if dh is None else dh
        dc_total = (np.zeros_like(c_new) if dc is None else dc) + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dc_total * gg * i * (1.0 - i),
                dc_total * c.data * f * (1.0 - f),
                dc_total * i * (1.0 - gg * gg),
                dh * tc * o * (1.0 - o),
            ],
            axis=-1,
        )
        if W.requires_grad:
            W._accumulate(xh.reshape(-1, xh.shape[-1]).T @ dz.reshape(-1, dz.shape[-1]))
        if b.requires_grad:
            b._accumulate(dz.reshape(-1, dz.shape[-1]).sum(axis=0))
        dxh = dz @ W.data.T
        nx = x.data.shape[-1]
        if x.requires_grad:
            x._accumulate(dxh[..., :nx])
        if h.requires_grad:
            h._accumulate(dxh[..., nx:])
        if c.requires_grad:
            c._accumulate(dc_total * f)

    # h_new and c_new are produced together; the cell state carries a
    # zero-cost link to h_new so that both gradients are known when the
    # fused backward runs (h_new always sorts before c_new in reverse order).
    c_out = Tensor._make(c_new, (x, h, c, W, b), lambda g: (grads.__setitem__("dc", g), _finish()))
    def _bw_h(g):
        grads["dh"] = g
        c_out._accumulate(np.zeros_like(c_new))

    h_out = Tensor._make(h_new, (c_out,) if c_out.requires_grad else (), _bw_h)
    return h_out, c_out
