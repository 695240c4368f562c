"""Reverse-mode automatic differentiation over dense float64 tensors.

A Tensor is a thin wrapper around a numpy array. Primitives record
themselves on the active Tape (a linear record of operations in execution
order); backward() replays the tape in reverse and accumulates gradients
into the ``grad`` field of every tensor that requires them. There is no
graph optimization: correctness over speed.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when a primitive receives incompatible shapes."""


class Tensor:
    """Dense float64 tensor with an optional gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the actual primitives live below.
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


class TapeNode:
    """One recorded primitive: op id, input refs, output ref, backward closure."""

    __slots__ = ("op", "inputs", "output", "backward")

    def __init__(self, op, inputs, output, backward):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.backward = backward


class Tape:
    """Execution-ordered record of primitives; also a context manager.

    Ops record onto the innermost active tape whenever any Tensor input
    requires a gradient. Outside any ``with Tape()`` block nothing is
    recorded, which makes inference passes allocation-free.
    """

    _stack: list["Tape"] = []

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __enter__(self):
        Tape._stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        Tape._stack.pop()
        return False

    @staticmethod
    def current():
        return Tape._stack[-1] if Tape._stack else None


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(op: str, inputs, out_data, backward) -> Tensor:
    tape = Tape.current()
    track = tape is not None and any(
        isinstance(t, Tensor) and t.requires_grad for t in inputs
    )
    out = Tensor(out_data, requires_grad=track)
    if track:
        tape.nodes.append(TapeNode(op, tuple(inputs), out, backward))
    return out


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)  # owning copy; g may be a view
        if t.grad.shape != t.data.shape:
            t.grad = np.broadcast_to(t.grad, t.data.shape).copy()
    else:
        t.grad += g


def backward(tape: Tape, loss: Tensor):
    """Populate grad fields for every requires_grad tensor reachable from loss.

    Visits each tape node exactly once, in reverse execution order (a valid
    reverse topological order by construction). Gradients accumulate with +=
    across multiple uses of the same tensor.
    """
    if loss.data.shape != ():
        raise ValueError(
            f"backward needs a scalar loss, got shape {loss.data.shape}"
        )
    if not tape.nodes:
        raise ValueError("backward on an empty tape")
    _accumulate(loss, np.ones_like(loss.data))
    for node in reversed(tape.nodes):
        g_out = node.output.grad
        if g_out is None:
            continue  # not on any path to the loss
        grads = node.backward(g_out)
        for t, g in zip(node.inputs, grads):
            if g is None or not isinstance(t, Tensor) or not t.requires_grad:
                continue
            _accumulate(t, g)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _binary(op, a, b, fwd, bwd):
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = fwd(a.data, b.data)
    except ValueError as e:
        raise ShapeError(
            f"{op}: incompatible shapes {a.data.shape} and {b.data.shape}"
        ) from e
    return _record(op, (a, b), out, lambda g: bwd(g, a.data, b.data))


# ---------------------------------------------------------------------------
# elementwise primitives


def add(a, b):
    return _binary(
        "add", a, b, np.add,
        lambda g, ad, bd: (_unbroadcast(g, ad.shape), _unbroadcast(g, bd.shape)),
    )


def sub(a, b):
    return _binary(
        "sub", a, b, np.subtract,
        lambda g, ad, bd: (_unbroadcast(g, ad.shape), _unbroadcast(-g, bd.shape)),
    )


def mul(a, b):
    return _binary(
        "mul", a, b, np.multiply,
        lambda g, ad, bd: (
            _unbroadcast(g * bd, ad.shape),
            _unbroadcast(g * ad, bd.shape),
        ),
    )


def div(a, b):
    return _binary(
        "div", a, b, np.divide,
        lambda g, ad, bd: (
            _unbroadcast(g / bd, ad.shape),
            _unbroadcast(-g * ad / (bd * bd), bd.shape),
        ),
    )


def neg(a):
    a = _as_tensor(a)
    return _record("neg", (a,), -a.data, lambda g: (-g,))


def exp(a):
    a = _as_tensor(a)
    out = np.exp(a.data)
    return _record("exp", (a,), out, lambda g: (g * out,))


def log(a):
    a = _as_tensor(a)
    return _record("log", (a,), np.log(a.data), lambda g: (g / a.data,))


def sqrt(a):
    a = _as_tensor(a)
    out = np.sqrt(a.data)
    return _record("sqrt", (a,), out, lambda g: (g * 0.5 / out,))


def clip(a, lo: float, hi: float):
    """Clamp to [lo, hi]; gradient is identity inside, zero outside."""
    a = _as_tensor(a)
    out = np.clip(a.data, lo, hi)
    mask = (a.data > lo) & (a.data < hi)
    return _record("clip", (a,), out, lambda g: (g * mask,))


def gelu(a):
    """Exact (erf-based) Gaussian Error Linear Unit."""
    from scipy.special import erf

    a = _as_tensor(a)
    x = a.data
    cdf = 0.5 * (1.0 + erf(x / np.sqrt(2.0)))
    out = x * cdf

    def bwd(g):
        pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
        return (g * (cdf + x * pdf),)

    return _record("gelu", (a,), out, bwd)


def softmax(a, axis: int = -1):
    """Numerically stable softmax along ``axis``."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _record("softmax", (a,), out, bwd)


# ---------------------------------------------------------------------------
# reductions and shape ops


def tsum(a, axis=None, keepdims: bool = False):
    a = _as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        g_exp = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g_exp, a.data.shape).copy(),)

    return _record("sum", (a,), out, bwd)


def tmean(a, axis=None, keepdims: bool = False):
    a = _as_tensor(a)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis] if isinstance(axis, int) else int(
            np.prod([a.data.shape[ax] for ax in axis])
        )

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g / count, a.data.shape).copy(),)
        g_exp = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g_exp / count, a.data.shape).copy(),)

    return _record("mean", (a,), out, bwd)


def reshape(a, shape):
    a = _as_tensor(a)
    return _record(
        "reshape", (a,), a.data.reshape(shape),
        lambda g: (g.reshape(a.data.shape),),
    )


def moveaxis(a, src: int, dst: int):
    a = _as_tensor(a)
    return _record(
        "moveaxis", (a,), np.moveaxis(a.data, src, dst),
        lambda g: (np.moveaxis(g, dst, src),),
    )


def concat(tensors, axis: int = 0):
    tensors = [_as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))

    return _record("concat", tuple(tensors), out, bwd)


def index_select(a, indices, axis: int = 0):
    """Select slices along ``axis`` by a 1-D integer index list."""
    a = _as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    out = np.take(a.data, idx, axis=axis)
    unique = np.unique(idx).size == idx.size

    def bwd(g):
        ga = np.zeros_like(a.data)
        ga_m = np.moveaxis(ga, axis, 0)
        g_m = np.moveaxis(g, axis, 0)
        if unique:
            ga_m[idx] = g_m
        else:
            np.add.at(ga_m, idx, g_m)
        return (ga,)

    return _record("index_select", (a,), out, bwd)


def gather_frames(a, indices: np.ndarray, axis: int = 1):
    """Per-item gather: out[b, ..., j, ...] = a[b, ..., indices[b, j], ...].

    ``indices`` has shape [B, m]; axis counts in ``a``'s layout and must not
    be 0 (axis 0 is the batch).
    """
    a = _as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 2 or idx.shape[0] != a.data.shape[0]:
        raise ShapeError(
            f"gather_frames: index shape {idx.shape} does not match batch "
            f"of {a.data.shape}"
        )
    moved = np.moveaxis(a.data, axis, 1)  # [B, F, rest...]
    batch = np.arange(moved.shape[0])[:, None]
    out_moved = moved[batch, idx]
    rows_unique = all(np.unique(row).size == row.size for row in idx)

    def bwd(g):
        gm = np.zeros_like(moved)
        g_m = np.moveaxis(g, axis, 1)
        if rows_unique:
            gm[batch, idx] = g_m
        else:
            np.add.at(gm, (batch, idx), g_m)
        return (np.moveaxis(gm, 1, axis),)

    return _record("gather_frames", (a,), np.moveaxis(out_moved, 1, axis), bwd)


# ---------------------------------------------------------------------------
# linear algebra / NN primitives


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(
            f"matmul: incompatible shapes {a.data.shape} and {b.data.shape}"
        ) from e

    def bwd(g):
        ad, bd = a.data, b.data
        if ad.ndim == 1 or bd.ndim == 1:
            # vector cases: fall back to outer/inner products
            ga = np.matmul(g, bd.T) if bd.ndim > 1 else np.multiply.outer(g, bd)
            gb = np.matmul(ad.T, g) if ad.ndim > 1 else np.multiply.outer(ad, g)
            return (_unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape))
        ga = np.matmul(g, np.swapaxes(bd, -1, -2))
        if bd.ndim == 2 and ad.ndim >= 2:
            # one shared weight: flatten batch dims into a single gemm
            gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = _unbroadcast(np.matmul(np.swapaxes(ad, -1, -2), g), bd.shape)
        return (_unbroadcast(ga, ad.shape), gb)

    return _record("matmul", (a, b), out, bwd)


def linear(x, w, b=None):
    """Affine map y = x @ w (+ b), with w shaped [in_dim, out_dim]."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.shape[-1] != w.data.shape[0]:
        raise ShapeError(
            f"linear: input {x.data.shape} incompatible with weight "
            f"{w.data.shape}"
        )
    y = matmul(x, w)
    if b is not None:
        y = add(y, b)
    return y


def conv1d(x, w, b=None, stride: int = 1, padding: int = 0):
    """1-D convolution: x [N, C_in, L], w [C_out, C_in, K], b [C_out]."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.ndim != 3 or w.data.ndim != 3 or x.data.shape[1] != w.data.shape[1]:
        raise ShapeError(
            f"conv1d: input {x.data.shape} incompatible with kernel "
            f"{w.data.shape} (expect [N,C_in,L] and [C_out,C_in,K])"
        )
    n, c_in, length = x.data.shape
    c_out, _, k = w.data.shape
    l_pad = length + 2 * padding
    if l_pad < k:
        raise ShapeError(
            f"conv1d: padded length {l_pad} shorter than kernel {k}"
        )
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    l_out = (l_pad - k) // stride + 1
    # im2col: windows [N, L_out, C_in * K], conv becomes one BLAS matmul
    win = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)[:, :, ::stride]
    cols = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(
        n * l_out, c_in * k
    )
    w_flat = w.data.reshape(c_out, c_in * k)
    out = (cols @ w_flat.T).reshape(n, l_out, c_out).transpose(0, 2, 1)
    if b is not None:
        bt = _as_tensor(b)
        out = out + bt.data[None, :, None]
    else:
        bt = None

    def bwd(g):
        g_cols = np.ascontiguousarray(g.transpose(0, 2, 1)).reshape(n * l_out, c_out)
        gw = (g_cols.T @ cols).reshape(w.data.shape)
        g_win = (g_cols @ w_flat).reshape(n, l_out, c_in, k)
        gxp = np.zeros_like(xp)
        for kk in range(k):
            gxp[:, :, kk : kk + stride * l_out : stride] += g_win[:, :, :, kk].transpose(0, 2, 1)
        gx = gxp[:, :, padding : padding + length] if padding else gxp
        gb = g.sum(axis=(0, 2)) if bt is not None else None
        return (gx, gw, gb) if bt is not None else (gx, gw)

    inputs = (x, w, bt) if bt is not None else (x, w)
    return _record("conv1d", inputs, out, bwd)


def view_linear(x, w, b=None):
    """Per-view affine map: x [B, K, ..., d] with w [K, d, z] and b [K, z].

    Applies an independent linear layer to each of the K views in one shot.
    """
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.ndim < 3 or w.data.ndim != 3 or x.data.shape[1] != w.data.shape[0] \
            or x.data.shape[-1] != w.data.shape[1]:
        raise ShapeError(
            f"view_linear: input {x.data.shape} incompatible with per-view "
            f"weights {w.data.shape} (expect [B,K,...,d] and [K,d,z])"
        )
    b_dim, k_views = x.data.shape[0], x.data.shape[1]
    d_in, z = w.data.shape[1], w.data.shape[2]
    # [K, B*T, d] stacked layout turns the per-view maps into one batched gemm
    xt = np.ascontiguousarray(
        x.data.reshape(b_dim, k_views, -1, d_in).swapaxes(0, 1)
    ).reshape(k_views, -1, d_in)
    out = np.matmul(xt, w.data)  # [K, B*T, z]
    out = out.reshape(k_views, b_dim, -1, z).swapaxes(0, 1).reshape(
        x.data.shape[:-1] + (z,)
    )
    bt = None
    if b is not None:
        bt = _as_tensor(b)
        bshape = (1, k_views) + (1,) * (x.data.ndim - 3) + (z,)
        out = out + bt.data.reshape(bshape)

    def bwd(g):
        gt = np.ascontiguousarray(
            g.reshape(b_dim, k_views, -1, z).swapaxes(0, 1)
        ).reshape(k_views, -1, z)
        gx = np.matmul(gt, w.data.swapaxes(1, 2))  # [K, B*T, d]
        gx = gx.reshape(k_views, b_dim, -1, d_in).swapaxes(0, 1).reshape(x.data.shape)
        gw = np.matmul(xt.swapaxes(1, 2), gt)      # [K, d, z]
        if bt is None:
            return (gx, gw)
        return (gx, gw, gt.sum(axis=1))

    inputs = (x, w, bt) if bt is not None else (x, w)
    return _record("view_linear", inputs, out, bwd)


def layernorm(x, gamma, beta, eps: float = 1e-5, axis: int = -1):
    """Layer normalization over ``axis`` with affine scale/shift."""
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    axis = axis % x.data.ndim
    d = x.data.shape[axis]
    if gamma.data.shape != (d,) or beta.data.shape != (d,):
        raise ShapeError(
            f"layernorm: scale/shift {gamma.data.shape}/{beta.data.shape} "
            f"do not match dim {d} of input {x.data.shape} at axis {axis}"
        )
    bshape = [1] * x.data.ndim
    bshape[axis] = d
    gamma_b = gamma.data.reshape(bshape)
    mu = x.data.mean(axis=axis, keepdims=True)
    var = x.data.var(axis=axis, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma_b + beta.data.reshape(bshape)

    def bwd(g):
        gg = g * gamma_b
        gx = inv * (
            gg
            - gg.mean(axis=axis, keepdims=True)
            - xhat * (gg * xhat).mean(axis=axis, keepdims=True)
        )
        reduce_axes = tuple(i for i in range(x.data.ndim) if i != axis)
        ggamma = (g * xhat).sum(axis=reduce_axes)
        gbeta = g.sum(axis=reduce_axes)
        return (gx, ggamma, gbeta)

    return _record("layernorm", (x, gamma, beta), out, bwd)
