"""Reverse-mode automatic differentiation over dense float64 arrays.

A Tape records operations as they run (define-by-run); ``backward`` walks the
record in reverse and accumulates gradients for leaf tensors. Tensors that are
not attached to a tape compute the same forward math with no recording, so the
evaluation path and the training path share one implementation.

Elementwise binary ops broadcast a smaller operand whose shape is a trailing
suffix of the other (covers bias vectors and scalars); anything wider must go
through an explicit shape op such as ``repeat_last``.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DomainError, ShapeError

Array = np.ndarray


class Tensor:
    """Dense float64 array, optionally attached to a recording tape."""

    __slots__ = ("data", "tape", "nid")

    def __init__(self, data, tape=None, nid=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.nid = nid

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, taped={self.tape is not None})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class _Node:
    __slots__ = ("op", "parents", "vjp")

    def __init__(self, op, parents, vjp):
        self.op = op
        self.parents = parents
        self.vjp = vjp


class Tape:
    """Ordered operation record. Single-owner while recording; the node list
    is append-only, so parent ids always precede their consumers."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def leaf(self, data) -> Tensor:
        """Register a differentiable leaf (parameter or input)."""
        t = Tensor(data, self, len(self.nodes))
        self.nodes.append(_Node("leaf", (), None))
        return t


class Gradients:
    """Gradient lookup for the leaves of one backward pass."""

    def __init__(self, tape: Tape, grads: list):
        self._tape = tape
        self._grads = grads

    def of(self, t: Tensor) -> Array:
        if t.tape is not self._tape or t.nid is None:
            raise ContractError("tensor is not recorded on this tape")
        g = self._grads[t.nid]
        if g is None:
            return np.zeros_like(t.data)
        return np.broadcast_to(np.asarray(g), t.data.shape).astype(np.float64, copy=False)


def backward(tape: Tape, loss: Tensor) -> Gradients:
    """Accumulate d(loss)/d(node) for every recorded node; loss must be a
    recorded scalar. Leaves unreachable from the loss get zero gradient."""
    if loss.tape is not tape or loss.nid is None:
        raise ContractError("loss is not recorded on this tape")
    if loss.data.shape != ():
        raise ContractError(f"loss must be scalar, got shape {loss.data.shape}")
    grads: list = [None] * len(tape.nodes)
    grads[loss.nid] = np.ones(())
    for nid in range(loss.nid, -1, -1):
        g = grads[nid]
        node = tape.nodes[nid]
        if g is None or node.vjp is None:
            continue
        for pid, pg in zip(node.parents, node.vjp(g)):
            if pid is None or pg is None:
                continue
            grads[pid] = pg if grads[pid] is None else grads[pid] + pg
    return Gradients(tape, grads)


# ---------------------------------------------------------------------------
# op plumbing

def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tape_of(*ts: Tensor):
    tape = None
    for t in ts:
        if t.tape is not None:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise ContractError("operands are recorded on different tapes")
    return tape


def _emit(tape, out, op, srcs, vjp) -> Tensor:
    t = Tensor(out)
    if tape is not None:
        t.tape = tape
        t.nid = len(tape.nodes)
        parents = tuple(s.nid if s.tape is tape else None for s in srcs)
        tape.nodes.append(_Node(op, parents, vjp))
    return t


def _suffix_ok(sa, sb):
    if len(sb) > len(sa):
        sa, sb = sb, sa
    return sb == sa[len(sa) - len(sb):]


def _check_elemwise(a: Array, b: Array, op: str):
    if a.shape != b.shape and not _suffix_ok(a.shape, b.shape):
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not conform")


def _unbroadcast(g: Array, shape) -> Array:
    if g.shape == shape:
        return g
    return g.sum(axis=tuple(range(g.ndim - len(shape))))


def _sigmoid(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# elementwise binary ops

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_elemwise(a.data, b.data, "add")
    tape = _tape_of(a, b)
    ash, bsh = a.data.shape, b.data.shape

    def vjp(g):
        return _unbroadcast(g, ash), _unbroadcast(g, bsh)

    return _emit(tape, a.data + b.data, "add", (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_elemwise(a.data, b.data, "sub")
    tape = _tape_of(a, b)
    ash, bsh = a.data.shape, b.data.shape

    def vjp(g):
        return _unbroadcast(g, ash), _unbroadcast(-g, bsh)

    return _emit(tape, a.data - b.data, "sub", (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_elemwise(a.data, b.data, "mul")
    tape = _tape_of(a, b)
    ad, bd = a.data, b.data

    def vjp(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _emit(tape, ad * bd, "mul", (a, b), vjp)


# ---------------------------------------------------------------------------
# elementwise unary ops

def neg(x) -> Tensor:
    x = _wrap(x)

    def vjp(g):
        return (-g,)

    return _emit(_tape_of(x), -x.data, "neg", (x,), vjp)


def relu(x) -> Tensor:
    x = _wrap(x)
    xd = x.data

    def vjp(g):
        return (g * (xd > 0),)

    return _emit(_tape_of(x), np.maximum(xd, 0.0), "relu", (x,), vjp)


def tanh(x) -> Tensor:
    x = _wrap(x)
    y = np.tanh(x.data)

    def vjp(g):
        return (g * (1.0 - y * y),)

    return _emit(_tape_of(x), y, "tanh", (x,), vjp)


def sigmoid(x) -> Tensor:
    x = _wrap(x)
    y = _sigmoid(x.data)

    def vjp(g):
        return (g * y * (1.0 - y),)

    return _emit(_tape_of(x), y, "sigmoid", (x,), vjp)


def exp(x) -> Tensor:
    x = _wrap(x)
    y = np.exp(x.data)

    def vjp(g):
        return (g * y,)

    return _emit(_tape_of(x), y, "exp", (x,), vjp)


def log(x) -> Tensor:
    x = _wrap(x)
    xd = x.data
    if not np.all(xd > 0.0):
        raise DomainError("log requires strictly positive input")

    def vjp(g):
        return (g / xd,)

    return _emit(_tape_of(x), np.log(xd), "log", (x,), vjp)


def softplus(x) -> Tensor:
    x = _wrap(x)
    xd = x.data

    def vjp(g):
        return (g * _sigmoid(xd),)

    return _emit(_tape_of(x), np.logaddexp(0.0, xd), "softplus", (x,), vjp)


def clamp_min(x, floor: float) -> Tensor:
    """max(x, floor); gradient is zero wherever the floor is active."""
    x = _wrap(x)
    xd = x.data

    def vjp(g):
        return (g * (xd > floor),)

    return _emit(_tape_of(x), np.maximum(xd, floor), "clamp_min", (x,), vjp)


# ---------------------------------------------------------------------------
# reductions and shape ops

def logsumexp(x, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Stable log-sum-exp along one axis (max is subtracted per slice).

    The exponentials are summed in sorted order, so the result is exactly
    invariant under permutations of the reduced axis."""
    x = _wrap(x)
    xd = x.data
    m = np.max(xd, axis=axis, keepdims=True)
    e = np.exp(xd - m)
    s = np.sort(e, axis=axis).sum(axis=axis, keepdims=True)
    out = m + np.log(s)
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def vjp(g):
        gg = g if keepdims else np.expand_dims(g, axis)
        return (gg * (e / s),)

    return _emit(_tape_of(x), out, "logsumexp", (x,), vjp)


def sum(x, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001 - op name
    x = _wrap(x)
    xd = x.data
    out = xd.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None or keepdims:
            gg = g
        else:
            gg = np.expand_dims(g, axis)
        return (np.broadcast_to(gg, xd.shape),)

    return _emit(_tape_of(x), out, "sum", (x,), vjp)


def mean(x) -> Tensor:
    x = _wrap(x)
    return mul(sum(x), 1.0 / x.data.size)


def slice_cols(x, start: int, stop: int) -> Tensor:
    """Columns [start, stop) of a 2-d tensor."""
    x = _wrap(x)
    xd = x.data
    if xd.ndim != 2:
        raise ShapeError(f"slice_cols expects a 2-d tensor, got shape {xd.shape}")

    def vjp(g):
        out = np.zeros_like(xd)
        out[:, start:stop] = g
        return (out,)

    return _emit(_tape_of(x), xd[:, start:stop], "slice_cols", (x,), vjp)


def repeat_last(x, k: int) -> Tensor:
    """Repeat a trailing size-1 axis k times: (..., 1) -> (..., k)."""
    x = _wrap(x)
    xd = x.data
    if xd.shape[-1] != 1:
        raise ShapeError(f"repeat_last expects trailing axis 1, got shape {xd.shape}")

    def vjp(g):
        return (g.sum(axis=-1, keepdims=True),)

    return _emit(_tape_of(x), np.repeat(xd, k, axis=-1), "repeat_last", (x,), vjp)


def concat_cols(a, b) -> Tensor:
    """Concatenate two 2-d tensors along columns."""
    a, b = _wrap(a), _wrap(b)
    ad, bd = a.data, b.data
    if ad.ndim != 2 or bd.ndim != 2 or ad.shape[0] != bd.shape[0]:
        raise ShapeError(f"concat_cols: shapes {ad.shape} and {bd.shape} do not conform")
    na = ad.shape[1]

    def vjp(g):
        return g[:, :na], g[:, na:]

    return _emit(_tape_of(a, b), np.concatenate([ad, bd], axis=1), "concat_cols", (a, b), vjp)


# ---------------------------------------------------------------------------
# matrix products

def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    ad, bd = a.data, b.data
    if ad.ndim != 2 or bd.ndim != 2 or ad.shape[1] != bd.shape[0]:
        raise ShapeError(f"matmul: shapes {ad.shape} and {bd.shape} do not conform")

    def vjp(g):
        return g @ bd.T, ad.T @ g

    return _emit(_tape_of(a, b), ad @ bd, "matmul", (a, b), vjp)


def masked_matmul(a, w, mask: Array) -> Tensor:
    """a @ (w * mask) for a fixed 0/1 mask; masked-out weight positions get
    exactly zero gradient."""
    a, w = _wrap(a), _wrap(w)
    ad, wd = a.data, w.data
    if mask.shape != wd.shape:
        raise ShapeError(f"masked_matmul: mask {mask.shape} does not match weight {wd.shape}")
    if ad.ndim != 2 or wd.ndim != 2 or ad.shape[1] != wd.shape[0]:
        raise ShapeError(f"masked_matmul: shapes {ad.shape} and {wd.shape} do not conform")
    wm = wd * mask

    def vjp(g):
        return g @ wm.T, (ad.T @ g) * mask

    return _emit(_tape_of(a, w), ad @ wm, "masked_matmul", (a, w), vjp)
