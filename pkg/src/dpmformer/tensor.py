"""Dense N-D tensors with reverse-mode automatic differentiation.

A dynamic tape over a fixed op set: elementwise arithmetic, 2-D
convolution, pixel (un)shuffle, softmax, GELU, channel layer norm, 2-D
DFT, batched matmul, reductions, reshapes/slices/concat. CPU only;
numpy arrays are the element buffers, float32 by default with float64
available for gradient checking. Tensors are immutable after
construction except for gradient accumulation.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .errors import ShapeError

DEFAULT_DTYPE = np.float32

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape construction inside the block (inference / FD probes)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """N-D array plus optional autodiff bookkeeping.

    ``_parents``/``_backward`` are set only on tensors produced by an op
    while gradients are enabled and at least one input requires them.
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is not None:
            self.data = np.asarray(data, dtype=dtype)
        elif isinstance(data, (np.ndarray, np.generic)) and data.dtype in (np.float32, np.float64):
            self.data = np.asarray(data)
        else:
            # float32 is the default; float64 only by explicit request
            self.data = np.asarray(data, dtype=DEFAULT_DTYPE)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[Tensor] = None
        self._parents: Optional[tuple] = None
        self._backward: Optional[Callable] = None

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # -- autodiff ------------------------------------------------------
    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_as_tensor(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)


class Parameter(Tensor):
    """Learnable leaf tensor; ``name`` is its dot-separated model path."""

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name


def tensor(data, dtype=DEFAULT_DTYPE, requires_grad=False) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=requires_grad)


def _as_tensor(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _check_same_dtype(*ts: Tensor):
    dtypes = {t.dtype for t in ts}
    if len(dtypes) > 1:
        raise ShapeError(f"mixed dtypes in op: {sorted(d.name for d in dtypes)}")


def _make(data, parents: Sequence[Tensor], backward_fn) -> Tensor:
    """Wrap an op result; attach tape node only when gradients can flow."""
    if _grad_enabled and any(p.requires_grad for p in parents):
        out = Tensor(data, requires_grad=True)
        out._parents = tuple(parents)
        out._backward = backward_fn
        return out
    return Tensor(data)


def backward(loss: Tensor):
    """Accumulate d(loss)/d(leaf) into every reachable requires_grad leaf.

    Repeated calls keep accumulating; use zero_grad to reset.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward() needs a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node._parents is not None:
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._parents is None:
            if node.grad is None:
                node.grad = Tensor(np.array(g, copy=True))
            else:
                node.grad.data += g
            continue
        parent_grads = node._backward(g)
        for p, pg in zip(node._parents, parent_grads):
            if pg is None or not p.requires_grad:
                continue
            acc = grads.get(id(p))
            grads[id(p)] = pg if acc is None else acc + pg


# -- elementwise -------------------------------------------------------


def add(a, b) -> Tensor:
    a = _as_tensor(a, getattr(b, "dtype", DEFAULT_DTYPE))
    b = _as_tensor(b, a.dtype)
    _check_same_dtype(a, b)
    data = a.data + b.data

    def bw(g):
        return (
            _unbroadcast(g, a.shape) if a.requires_grad else None,
            _unbroadcast(g, b.shape) if b.requires_grad else None,
        )

    return _make(data, (a, b), bw)


def sub(a, b) -> Tensor:
    a = _as_tensor(a, getattr(b, "dtype", DEFAULT_DTYPE))
    b = _as_tensor(b, a.dtype)
    _check_same_dtype(a, b)
    data = a.data - b.data

    def bw(g):
        return (
            _unbroadcast(g, a.shape) if a.requires_grad else None,
            _unbroadcast(-g, b.shape) if b.requires_grad else None,
        )

    return _make(data, (a, b), bw)


def mul(a, b) -> Tensor:
    a = _as_tensor(a, getattr(b, "dtype", DEFAULT_DTYPE))
    b = _as_tensor(b, a.dtype)
    _check_same_dtype(a, b)
    data = a.data * b.data

    def bw(g):
        return (
            _unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
            _unbroadcast(g * a.data, b.shape) if b.requires_grad else None,
        )

    return _make(data, (a, b), bw)


def div(a, b) -> Tensor:
    a = _as_tensor(a, getattr(b, "dtype", DEFAULT_DTYPE))
    b = _as_tensor(b, a.dtype)
    _check_same_dtype(a, b)
    data = a.data / b.data

    def bw(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = (
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape)
            if b.requires_grad
            else None
        )
        return (ga, gb)

    return _make(data, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    def bw(g):
        return (-g,)

    return _make(-a.data, (a,), bw)


def sqrt(a: Tensor) -> Tensor:
    data = np.sqrt(a.data)

    def bw(g):
        return (g * (0.5 / data),)

    return _make(data, (a,), bw)


def absolute(a: Tensor) -> Tensor:
    data = np.abs(a.data)

    def bw(g):
        return (g * np.sign(a.data),)

    return _make(data, (a,), bw)


def gelu(a: Tensor) -> Tensor:
    """Exact-erf GELU: x * Phi(x)."""
    x = a.data
    phi = 0.5 * (1.0 + erf(x / np.sqrt(2.0, dtype=x.dtype)))
    data = (x * phi).astype(x.dtype)

    def bw(g):
        pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
        return ((g * (phi + x * pdf)).astype(x.dtype),)

    return _make(data, (a,), bw)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- reductions --------------------------------------------------------


def _expand_reduced(g: np.ndarray, shape: tuple, axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    axes = tuple(a % len(shape) for a in axes)
    if not keepdims:
        for a in sorted(axes):
            g = np.expand_dims(g, a)
    return np.broadcast_to(g, shape)


def tsum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        return (_expand_reduced(g, a.shape, axis, keepdims),)

    return _make(data, (a,), bw)


def tmean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size / max(data.size, 1)

    def bw(g):
        return (_expand_reduced(g, a.shape, axis, keepdims) / np.asarray(count, a.dtype),)

    return _make(data, (a,), bw)


# -- shape manipulation ------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    data = a.data.reshape(shape)

    def bw(g):
        return (g.reshape(a.shape),)

    return _make(data, (a,), bw)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    data = a.data.transpose(axes)

    def bw(g):
        return (g.transpose(inv),)

    return _make(data, (a,), bw)


def getitem(a: Tensor, idx) -> Tensor:
    data = a.data[idx].copy()

    def bw(g):
        gx = np.zeros_like(a.data)
        gx[idx] = g
        return (gx,)

    return _make(data, (a,), bw)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    tensors = list(tensors)
    _check_same_dtype(*tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        out = []
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(int(lo), int(hi))
                out.append(g[tuple(sl)])
            else:
                out.append(None)
        return tuple(out)

    return _make(data, tensors, bw)


def chunk(a: Tensor, n: int, axis: int) -> list[Tensor]:
    total = a.shape[axis]
    if total % n:
        raise ShapeError(f"cannot chunk extent {total} into {n} equal parts")
    step = total // n
    pieces = []
    for i in range(n):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(i * step, (i + 1) * step)
        pieces.append(getitem(a, tuple(sl)))
    return pieces


# -- linear algebra ----------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matmul over the two trailing dims with leading broadcast."""
    _check_same_dtype(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul requires ndim >= 2 operands")
    data = np.matmul(a.data, b.data)

    def bw(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return (ga, gb)

    return _make(data, (a, b), bw)


def l2_normalize(a: Tensor, axis: int) -> Tensor:
    """x / ||x||_2 along ``axis``, smoothed so the origin stays finite."""
    sq = tsum(mul(a, a), axis=axis, keepdims=True)
    norm = sqrt(add(sq, float(np.finfo(a.dtype).tiny)))
    return div(a, norm)


def softmax(a: Tensor, axis: int) -> Tensor:
    m = a.data.max(axis=axis, keepdims=True)
    e = np.exp(a.data - m)
    data = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        return (data * (g - dot),)

    return _make(data, (a,), bw)


def layer_norm_channel(x: Tensor, gamma: Tensor) -> Tensor:
    """Normalize across channels per spatial location, scale by gamma.

    Bias-free; variance floor 1e-5 defines the constant-input case
    (output is exactly zero there).
    """
    if x.ndim != 4:
        raise ShapeError(f"layer_norm_channel expects NCHW, got {x.shape}")
    c = x.shape[1]
    if gamma.shape != (c,):
        raise ShapeError(f"gamma shape {gamma.shape} != ({c},)")
    mu = tmean(x, axis=1, keepdims=True)
    xc = sub(x, mu)
    var = tmean(mul(xc, xc), axis=1, keepdims=True)
    inv = div(xc, sqrt(add(var, 1e-5)))
    return mul(inv, reshape(gamma, (1, c, 1, 1)))


# -- padding and convolution -------------------------------------------


def _axis_slice(ndim: int, axis: int, s: slice) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = s
    return tuple(idx)


def _reflect_pad_axis(a: Tensor, pad: int, axis: int) -> Tensor:
    n = a.shape[axis]
    if pad == 0:
        return a
    if pad > n - 1:
        raise ShapeError(f"reflect pad {pad} too large for extent {n}")
    width = [(0, 0)] * a.ndim
    width[axis] = (pad, pad)
    data = np.pad(a.data, width, mode="reflect")

    def bw(g):
        core = g[_axis_slice(g.ndim, axis, slice(pad, pad + n))].copy()
        head = np.flip(g[_axis_slice(g.ndim, axis, slice(0, pad))], axis=axis)
        tail = np.flip(g[_axis_slice(g.ndim, axis, slice(pad + n, pad + n + pad))], axis=axis)
        core[_axis_slice(g.ndim, axis, slice(1, 1 + pad))] += head
        core[_axis_slice(g.ndim, axis, slice(n - 1 - pad, n - 1))] += tail
        return (core,)

    return _make(data, (a,), bw)


def pad_reflect2d(x: Tensor, pad: int) -> Tensor:
    """Reflect-pad the two trailing (spatial) axes of an NCHW tensor."""
    return _reflect_pad_axis(_reflect_pad_axis(x, pad, 2), pad, 3)


def conv2d(
    x: Tensor,
    w: Tensor,
    b: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
    groups: int = 1,
) -> Tensor:
    """2-D cross-correlation (no kernel flip) with zero padding.

    ``groups == Cin`` with ``Cout == Cin`` is depth-wise; weights are
    (Cout, Cin/groups, k, k).
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D x and w, got {x.shape} and {w.shape}")
    _check_same_dtype(x, w)
    n, cin, h, wd = x.shape
    cout, cin_g, kh, kw = w.shape
    if kh != kw or kh % 2 == 0:
        raise ShapeError(f"conv2d kernels must be square with odd extent, got {kh}x{kw}")
    k = kh
    if cin % groups or cout % groups:
        raise ShapeError(f"channels ({cin}->{cout}) not divisible by groups={groups}")
    if cin_g * groups != cin:
        raise ShapeError(
            f"weight expects {cin_g * groups} input channels, tensor has {cin}"
        )
    if b is not None and b.shape != (cout,):
        raise ShapeError(f"bias shape {b.shape} != ({cout},)")

    xp = x.data
    if padding:
        xp = np.pad(xp, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (h + 2 * padding - k) // stride + 1
    ow = (wd + 2 * padding - k) // stride + 1
    if oh <= 0 or ow <= 0:
        raise ShapeError(f"conv2d output would be empty for input {h}x{wd}, k={k}")

    def unpad(gxp):
        if padding:
            return gxp[:, :, padding:-padding, padding:-padding]
        return gxp

    parents = (x, w) if b is None else (x, w, b)

    if k == 1 and stride == 1 and groups == 1:
        w2 = w.data.reshape(cout, cin)
        x3 = xp.reshape(n, cin, oh * ow)
        data = np.matmul(w2, x3).reshape(n, cout, oh, ow)
        if b is not None:
            data = data + b.data.reshape(1, cout, 1, 1)

        def bw(g):
            gx = gw = gb = None
            g3 = g.reshape(n, cout, oh * ow)
            if x.requires_grad:
                gx = unpad(np.matmul(w2.T, g3).reshape(n, cin, oh, ow))
            if w.requires_grad:
                gw = np.matmul(g3, x3.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
            if b is not None and b.requires_grad:
                gb = g.sum(axis=(0, 2, 3))
            return (gx, gw) if b is None else (gx, gw, gb)

        return _make(data, parents, bw)

    if groups == cin and cout == cin:
        # shift-and-accumulate beats einsum over strided window views here
        wk = w.data[:, 0]

        def taps():
            for ki in range(k):
                for kj in range(k):
                    yield ki, kj, xp[
                        :, :, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride
                    ]

        data = np.zeros((n, cin, oh, ow), dtype=xp.dtype)
        tmp = np.empty_like(data)
        for ki, kj, tap in taps():
            np.multiply(tap, wk[:, ki, kj].reshape(1, cin, 1, 1), out=tmp)
            data += tmp
        if b is not None:
            data = data + b.data.reshape(1, cout, 1, 1)

        def bw(g):
            gx = gw = gb = None
            if w.requires_grad:
                gw = np.empty_like(w.data)
                for ki, kj, tap in taps():
                    gw[:, 0, ki, kj] = np.einsum("nchw,nchw->c", tap, g, optimize=True)
            if x.requires_grad:
                gxp = np.zeros_like(xp)
                buf = np.empty_like(g)
                for ki in range(k):
                    for kj in range(k):
                        np.multiply(g, wk[:, ki, kj].reshape(1, cin, 1, 1), out=buf)
                        gxp[:, :, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride] += buf
                gx = unpad(gxp)
            if b is not None and b.requires_grad:
                gb = g.sum(axis=(0, 2, 3))
            return (gx, gw) if b is None else (gx, gw, gb)

        return _make(data, parents, bw)

    windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]

    if groups == 1:
        cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
            n * oh * ow, cin * k * k
        )
        w2 = w.data.reshape(cout, cin * k * k)
        data = (cols @ w2.T).reshape(n, oh, ow, cout).transpose(0, 3, 1, 2)
        if b is not None:
            data = data + b.data.reshape(1, cout, 1, 1)

        def bw(g):
            gx = gw = gb = None
            g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * oh * ow, cout)
            if w.requires_grad:
                gw = (g2.T @ cols).reshape(w.shape)
            if x.requires_grad:
                dcols = (g2 @ w2).reshape(n, oh, ow, cin, k, k)
                gxp = np.zeros_like(xp)
                for ki in range(k):
                    for kj in range(k):
                        gxp[:, :, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride] += (
                            dcols[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
                        )
                gx = unpad(gxp)
            if b is not None and b.requires_grad:
                gb = g.sum(axis=(0, 2, 3))
            return (gx, gw) if b is None else (gx, gw, gb)

        return _make(np.ascontiguousarray(data), parents, bw)

    # general grouped path: correctness fallback, python loop over groups
    cig, cog = cin // groups, cout // groups
    wins_g = windows.reshape(n, groups, cig, oh, ow, k, k)
    wg = w.data.reshape(groups, cog, cig, k, k)
    data = np.einsum("ngihwkl,goikl->ngohw", wins_g, wg, optimize=True).reshape(
        n, cout, oh, ow
    )
    if b is not None:
        data = data + b.data.reshape(1, cout, 1, 1)

    def bw(g):
        gx = gw = gb = None
        gg = g.reshape(n, groups, cog, oh, ow)
        if w.requires_grad:
            gw = np.einsum("ngihwkl,ngohw->goikl", wins_g, gg, optimize=True).reshape(
                w.shape
            )
        if x.requires_grad:
            dcols = np.einsum("ngohw,goikl->ngihwkl", gg, wg, optimize=True).reshape(
                n, cin, oh, ow, k, k
            )
            gxp = np.zeros_like(xp)
            for ki in range(k):
                for kj in range(k):
                    gxp[:, :, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride] += (
                        dcols[:, :, :, :, ki, kj]
                    )
            gx = unpad(gxp)
        if b is not None and b.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return (gx, gw) if b is None else (gx, gw, gb)

    return _make(data, parents, bw)


# -- pixel shuffle -----------------------------------------------------


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Space-to-depth: (N,C,H,W) -> (N,C*r^2,H/r,W/r), bijective."""
    n, c, h, w = x.shape
    if h % r or w % r:
        raise ShapeError(f"spatial extents {h}x{w} not divisible by r={r}")
    t = reshape(x, (n, c, h // r, r, w // r, r))
    t = transpose(t, (0, 1, 3, 5, 2, 4))
    return reshape(t, (n, c * r * r, h // r, w // r))


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Depth-to-space: exact inverse of pixel_unshuffle."""
    n, c, h, w = x.shape
    if c % (r * r):
        raise ShapeError(f"channel extent {c} not divisible by r^2={r * r}")
    t = reshape(x, (n, c // (r * r), r, r, h, w))
    t = transpose(t, (0, 1, 4, 2, 5, 3))
    return reshape(t, (n, c // (r * r), h * r, w * r))


# -- Fourier -----------------------------------------------------------


def _dft2_stack(x: Tensor) -> Tensor:
    """(2,N,C,H,W) stack of the 2-D DFT's real and imaginary parts."""
    X = np.fft.fft2(x.data, axes=(-2, -1))
    data = np.stack([X.real, X.imag]).astype(x.dtype)
    hw = x.shape[-2] * x.shape[-1]

    def bw(g):
        G = g[0] + 1j * g[1]
        # adjoint of the linear DFT: scaled inverse transform
        gx = np.fft.ifft2(G, axes=(-2, -1)).real * hw
        return (gx.astype(x.dtype),)

    return _make(data, (x,), bw)


def dft2(x: Tensor) -> tuple[Tensor, Tensor]:
    """Per-channel 2-D DFT over H,W as separate (re, im) tensors."""
    s = _dft2_stack(x)
    return s[0], s[1]
