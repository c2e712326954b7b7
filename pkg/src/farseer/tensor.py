"""Dense float32 tensors with reverse-mode automatic differentiation.

The graph is taped implicitly: each op returns a Tensor holding its parent
tensors and a closure that routes the upstream gradient to them
(micrograd-style). Storage is contiguous float32; reductions, statistics,
and FFTs accumulate in float64 before casting back, so finite-difference
gradient checks stay meaningful at 32-bit storage.

Every forward op validates that its output is finite and raises
NumericError otherwise; NaN/Inf is never a silent state.

Complex spectra are carried as paired real buffers. Internally the model
uses the "stacked" layout ``[... , 2, h, w//2+1]`` (axis -3 indexes
re/im) produced by :func:`rfft2_stacked`; the public :class:`ComplexTensor`
wraps separate re/im views for API-level use.
"""

import math

import numpy as np

from .errors import ConfigError, DimensionError, NumericError, UsageError
from .fft import irfft2_raw, mirror_scale, rfft2_raw

_f32 = np.float32


def _finite(arr, op):
    if not np.isfinite(arr).all():
        bad = int(np.size(arr) - np.isfinite(arr).sum())
        raise NumericError(f"{op} produced {bad} non-finite value(s)")


class Tensor:
    """A contiguous float32 array plus optional gradient and graph record."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward",
                 "_backward_ran", "_f64")

    def __init__(self, data, requires_grad=False):
        arr = np.ascontiguousarray(np.asarray(data, dtype=_f32))
        _finite(arr, "Tensor")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self._backward_ran = False
        self._f64 = None  # float64 value of a reduction output, when known

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise UsageError(f"item() on tensor of shape {self.shape}")
        return float(self._f64 if self._f64 is not None else self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data.copy())

    def backward(self):
        """Reverse-mode sweep from a scalar; populates .grad on every
        reachable tensor that requires grad."""
        if self.data.size != 1:
            raise UsageError(
                f"backward() requires a scalar loss, got shape {self.shape}")
        if self._backward_ran:
            raise UsageError(
                "backward() already ran for this graph; rebuild the forward "
                "pass before differentiating again")
        self._backward_ran = True

        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def reshape(self, shape):
        return reshape(self, shape)

    def __repr__(self):
        flags = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={tuple(self.shape)}{flags})"


def _accum(t, g):
    if not t.requires_grad:
        return
    g = np.asarray(g, dtype=_f32)
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _result(data, parents, backward):
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {tuple(a.shape)} and "
                             f"{tuple(b.shape)} differ")


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------

def add(a, b):
    _same_shape(a, b, "add")
    data = a.data + b.data
    _finite(data, "add")

    def backward(g):
        _accum(a, g)
        _accum(b, g)

    return _result(data, (a, b), backward)


def sub(a, b):
    _same_shape(a, b, "sub")
    data = a.data - b.data
    _finite(data, "sub")

    def backward(g):
        _accum(a, g)
        _accum(b, -g)

    return _result(data, (a, b), backward)


def mul(a, b):
    _same_shape(a, b, "mul")
    data = a.data * b.data
    _finite(data, "mul")

    def backward(g):
        _accum(a, g * b.data)
        _accum(b, g * a.data)

    return _result(data, (a, b), backward)


def scale(a, s):
    s = float(s)
    data = a.data * _f32(s)
    _finite(data, "scale")

    def backward(g):
        _accum(a, g * _f32(s))

    return _result(data, (a,), backward)


def tsum(a):
    """Sum of all elements, accumulated in float64."""
    val = float(a.data.sum(dtype=np.float64))
    out = _result(np.asarray(val, dtype=_f32), (a,),
                  lambda g: _accum(a, np.broadcast_to(g, a.shape)))
    out._f64 = val
    _finite(out.data, "sum")
    return out


def tmean(a):
    """Mean of all elements, accumulated in float64."""
    n = a.data.size
    val = float(a.data.sum(dtype=np.float64)) / n
    out = _result(np.asarray(val, dtype=_f32), (a,),
                  lambda g: _accum(a, np.broadcast_to(g / n, a.shape)))
    out._f64 = val
    _finite(out.data, "mean")
    return out


def reshape(a, shape):
    shape = tuple(int(s) for s in shape)
    data = a.data.reshape(shape)

    def backward(g):
        _accum(a, g.reshape(a.shape))

    return _result(data, (a,), backward)


def transpose(a, axes):
    axes = tuple(axes)
    data = np.ascontiguousarray(a.data.transpose(axes))
    inv = np.argsort(axes)

    def backward(g):
        _accum(a, g.transpose(inv))

    return _result(data, (a,), backward)


def concat(tensors, axis):
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    return _result(data, tuple(tensors), backward)


def slice_axis(a, axis, start, length):
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    data = np.ascontiguousarray(a.data[idx])

    def backward(g):
        full = np.zeros(a.shape, dtype=_f32)
        full[idx] = g
        _accum(a, full)

    return _result(data, (a,), backward)


# ---------------------------------------------------------------------------
# activations and linear algebra
# ---------------------------------------------------------------------------

def leaky_relu(a, slope=0.01):
    data = np.where(a.data >= 0, a.data, _f32(slope) * a.data)
    _finite(data, "leaky_relu")

    def backward(g):
        _accum(a, np.where(a.data >= 0, g, _f32(slope) * g))

    return _result(data, (a,), backward)


def relu(a):
    return leaky_relu(a, 0.0)


def tanh(a):
    data = np.tanh(a.data)

    def backward(g):
        _accum(a, g * (1.0 - data * data))

    return _result(data, (a,), backward)


def linear(x, w, b=None):
    """Affine map over the last axis: x[..., din] @ w[din, dout] + b."""
    din, dout = w.shape
    if x.shape[-1] != din:
        raise DimensionError(f"linear: input last axis {x.shape[-1]} != "
                             f"weight rows {din}")
    flat = x.data.reshape(-1, din)
    out = flat @ w.data
    if b is not None:
        out = out + b.data
    out = out.reshape(x.shape[:-1] + (dout,))
    _finite(out, "linear")
    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g2 = g.reshape(-1, dout)
        _accum(x, (g2 @ w.data.T).reshape(x.shape))
        _accum(w, flat.T @ g2)
        if b is not None:
            _accum(b, g2.sum(axis=0, dtype=np.float64))

    return _result(out, parents, backward)


def _conv_geometry(h, w, k, stride, padding, op):
    if stride < 1:
        raise DimensionError(f"{op}: stride must be >= 1, got {stride}")
    hp, wp = h + 2 * padding, w + 2 * padding
    if k > hp or k > wp:
        raise DimensionError(
            f"{op}: kernel {k} exceeds padded input (axes H={hp}, W={wp})")
    return (hp - k) // stride + 1, (wp - k) // stride + 1


def _im2col(xp, k, stride, oh, ow):
    n, c = xp.shape[:2]
    s0, s1, s2, s3 = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp, (n, oh, ow, c, k, k),
        (s0, s2 * stride, s3 * stride, s1, s2, s3), writeable=False)
    return np.ascontiguousarray(view).reshape(n, oh * ow, c * k * k)


def conv2d(x, w, b=None, stride=1, padding=0):
    """2-D cross-correlation; x [n,cin,h,w], w [cout,cin,k,k], b [cout]."""
    if x.ndim != 4 or w.ndim != 4:
        raise DimensionError(f"conv2d: need rank-4 input/weight, got "
                             f"{x.ndim}/{w.ndim}")
    n, cin, h, wdt = x.shape
    cout, cin_w, k, k2 = w.shape
    if k != k2:
        raise DimensionError(f"conv2d: non-square kernel {k}x{k2}")
    if cin != cin_w:
        raise DimensionError(f"conv2d: input channels (axis 1 = {cin}) != "
                             f"weight in-channels (axis 1 = {cin_w})")
    oh, ow = _conv_geometry(h, wdt, k, stride, padding, "conv2d")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding),
                         (padding, padding))) if padding else x.data
    cols = _im2col(xp, k, stride, oh, ow)          # [n, oh*ow, cin*k*k]
    wmat = w.data.reshape(cout, -1)
    out = cols @ wmat.T                             # [n, oh*ow, cout]
    if b is not None:
        out = out + b.data
    out = np.ascontiguousarray(out.transpose(0, 2, 1)).reshape(n, cout, oh, ow)
    _finite(out, "conv2d")
    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g2 = np.ascontiguousarray(
            g.reshape(n, cout, oh * ow).transpose(0, 2, 1))  # [n, ohw, cout]
        _accum(w, (g2.reshape(-1, cout).T
                   @ cols.reshape(-1, cin * k * k)).reshape(w.shape))
        if b is not None:
            _accum(b, g.sum(axis=(0, 2, 3), dtype=np.float64))
        dcols = (g2 @ wmat).reshape(n, oh, ow, cin, k, k)
        dxp = np.zeros_like(xp)
        for ki in range(k):
            he = ki + (oh - 1) * stride + 1
            for kj in range(k):
                we = kj + (ow - 1) * stride + 1
                dxp[:, :, ki:he:stride, kj:we:stride] += \
                    dcols[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
        if padding:
            dxp = dxp[:, :, padding:padding + h, padding:padding + wdt]
        _accum(x, dxp)

    return _result(out, parents, backward)


def conv_transpose2d(x, w, b=None, stride=1, padding=0):
    """Adjoint of conv2d: x [n,c1,h,w], w [c1,c2,k,k] -> [n,c2,h',w'] with
    h' = (h-1)*stride - 2*padding + k."""
    if x.ndim != 4 or w.ndim != 4:
        raise DimensionError(f"conv_transpose2d: need rank-4 input/weight, "
                             f"got {x.ndim}/{w.ndim}")
    n, c1, h, wdt = x.shape
    c1_w, c2, k, k2 = w.shape
    if k != k2:
        raise DimensionError(f"conv_transpose2d: non-square kernel {k}x{k2}")
    if c1 != c1_w:
        raise DimensionError(f"conv_transpose2d: input channels (axis 1 = "
                             f"{c1}) != weight rows (axis 0 = {c1_w})")
    hf, wf = (h - 1) * stride + k, (wdt - 1) * stride + k
    oh, ow = hf - 2 * padding, wf - 2 * padding
    if oh < 1 or ow < 1:
        raise DimensionError(f"conv_transpose2d: output extent {oh}x{ow} "
                             f"not positive")

    tmp = np.tensordot(x.data, w.data, axes=([1], [0]))  # [n,h,w,c2,k,k]
    full = np.zeros((n, c2, hf, wf), dtype=_f32)
    for ki in range(k):
        he = ki + (h - 1) * stride + 1
        for kj in range(k):
            we = kj + (wdt - 1) * stride + 1
            full[:, :, ki:he:stride, kj:we:stride] += \
                tmp[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
    out = full[:, :, padding:hf - padding, padding:wf - padding]
    if b is not None:
        out = out + b.data.reshape(1, c2, 1, 1)
    out = np.ascontiguousarray(out)
    _finite(out, "conv_transpose2d")
    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gfull = np.zeros((n, c2, hf, wf), dtype=_f32)
        gfull[:, :, padding:hf - padding, padding:wf - padding] = g
        dx = np.zeros_like(x.data)
        dw = np.zeros_like(w.data)
        for ki in range(k):
            he = ki + (h - 1) * stride + 1
            for kj in range(k):
                we = kj + (wdt - 1) * stride + 1
                sub = gfull[:, :, ki:he:stride, kj:we:stride]  # [n,c2,h,w]
                dx += np.tensordot(sub, w.data[:, :, ki, kj],
                                   axes=([1], [1])).transpose(0, 3, 1, 2)
                dw[:, :, ki, kj] = np.tensordot(
                    x.data, sub, axes=([0, 2, 3], [0, 2, 3]))
        _accum(x, dx)
        _accum(w, dw)
        if b is not None:
            _accum(b, g.sum(axis=(0, 2, 3), dtype=np.float64))

    return _result(out, parents, backward)


def group_norm(x, gamma, beta, groups, eps=1e-5):
    """GroupNorm over [n,c,h,w]: per (sample, group) standardization plus a
    per-channel affine. Statistics accumulate in float64."""
    if x.ndim != 4:
        raise DimensionError(f"group_norm: need rank-4 input, got {x.ndim}")
    n, c, h, w = x.shape
    from .errors import ConfigError
    if c % groups != 0:
        raise ConfigError(f"group_norm: channels {c} not divisible by "
                          f"groups {groups}")
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"group_norm: affine shapes {gamma.shape}/"
                             f"{beta.shape} != ({c},)")
    m = (c // groups) * h * w
    xg = x.data.reshape(n, groups, m).astype(np.float64)
    mean = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mean) * inv).reshape(n, c, h, w)
    out = (xhat * gamma.data.astype(np.float64).reshape(1, c, 1, 1)
           + beta.data.astype(np.float64).reshape(1, c, 1, 1)).astype(_f32)
    _finite(out, "group_norm")

    def backward(g):
        g64 = g.astype(np.float64)
        _accum(gamma, (g64 * xhat).sum(axis=(0, 2, 3)))
        _accum(beta, g64.sum(axis=(0, 2, 3)))
        dxhat = (g64 * gamma.data.astype(np.float64).reshape(1, c, 1, 1))
        dxg = dxhat.reshape(n, groups, m)
        xhg = xhat.reshape(n, groups, m)
        dx = inv * (dxg - dxg.mean(axis=2, keepdims=True)
                    - xhg * (dxg * xhg).mean(axis=2, keepdims=True))
        _accum(x, dx.reshape(n, c, h, w))

    return _result(out, (x, gamma, beta), backward)


def nearest_resize(x, out_h, out_w):
    """Nearest-neighbor resample of [n,c,h,w] via one-hot row/col maps."""
    n, c, h, w = x.shape
    rows = np.floor(np.arange(out_h) * h / out_h).astype(np.int64)
    cols = np.floor(np.arange(out_w) * w / out_w).astype(np.int64)
    rmat = np.zeros((out_h, h), dtype=_f32)
    rmat[np.arange(out_h), rows] = 1.0
    cmat = np.zeros((out_w, w), dtype=_f32)
    cmat[np.arange(out_w), cols] = 1.0
    tmp = np.einsum("oh,nchw->ncow", rmat, x.data)
    data = np.einsum("pw,ncow->ncop", cmat, tmp)

    def backward(g):
        t = np.einsum("pw,ncop->ncow", cmat, g)
        _accum(x, np.einsum("oh,ncow->nchw", rmat, t))

    return _result(np.ascontiguousarray(data), (x,), backward)


# ---------------------------------------------------------------------------
# spectral ops
# ---------------------------------------------------------------------------

def rfft2_stacked(x):
    """Real 2-D FFT over the last two axes of x, returned with re/im
    stacked on a new axis -3: [..., 2, h, w//2+1]."""
    h, w = x.shape[-2], x.shape[-1]
    spec = rfft2_raw(x.data)
    data = np.stack([spec.real, spec.imag], axis=-3).astype(_f32)
    _finite(data, "rfft2")

    def backward(g):
        # adjoint of the half-spectrum DFT: halve mirrored columns so the
        # implicit conjugate doubling inside irfft2_raw cancels, scale h*w
        gc = g[..., 0, :, :].astype(np.float64) + \
            1j * g[..., 1, :, :].astype(np.float64)
        gc = gc / mirror_scale(w)
        _accum(x, irfft2_raw(gc, h, w) * (h * w))

    return _result(data, (x,), backward)


def irfft2_stacked(s, out_h, out_w):
    """Inverse of rfft2_stacked: s [..., 2, h, w//2+1] -> [..., h, w]."""
    wh = out_w // 2 + 1
    if s.shape[-1] != wh or s.shape[-2] != out_h or s.shape[-3] != 2:
        raise DimensionError(
            f"irfft2: spectrum shape {tuple(s.shape[-3:])} inconsistent with "
            f"target ({out_h}, {out_w}); expected (2, {out_h}, {wh})")
    spec = s.data[..., 0, :, :].astype(np.float64) + \
        1j * s.data[..., 1, :, :].astype(np.float64)
    data = irfft2_raw(spec, out_h, out_w).astype(_f32)
    _finite(data, "irfft2")

    def backward(g):
        gc = rfft2_raw(g.astype(np.float64)) / (out_h * out_w)
        gc = gc * mirror_scale(out_w)
        _accum(s, np.stack([gc.real, gc.imag], axis=-3))

    return _result(data, (s,), backward)


class ComplexTensor:
    """Half-spectrum coefficients as paired real tensors."""

    def __init__(self, re, im):
        if re.shape != im.shape:
            raise DimensionError(f"ComplexTensor: re shape {re.shape} != "
                                 f"im shape {im.shape}")
        self.re = re
        self.im = im

    @property
    def shape(self):
        return self.re.shape

    def to_numpy(self):
        return self.re.data.astype(np.float64) + 1j * self.im.data.astype(np.float64)


def rfft2(x):
    """Public real 2-D FFT: Tensor [..., h, w] -> ComplexTensor of the
    half spectrum [..., h, w//2+1]."""
    stacked = rfft2_stacked(x)
    axis = stacked.ndim - 3
    re = slice_axis(stacked, axis, 0, 1)
    im = slice_axis(stacked, axis, 1, 1)
    sh = x.shape[:-1] + (x.shape[-1] // 2 + 1,)
    return ComplexTensor(reshape(re, sh), reshape(im, sh))


def irfft2(spec, out_h, out_w):
    """Public inverse: ComplexTensor [..., h, w//2+1] -> Tensor [..., h, w]."""
    wh = spec.shape[-1]
    if wh != out_w // 2 + 1:
        raise DimensionError(f"irfft2: spectrum last axis {wh} != "
                             f"{out_w // 2 + 1} for width {out_w}")
    lead = spec.shape[:-2]
    sh = lead + (1, spec.shape[-2], wh)
    stacked = concat([reshape(spec.re, sh), reshape(spec.im, sh)],
                     axis=len(lead))
    return irfft2_stacked(stacked, out_h, out_w)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def zeros(shape, requires_grad=False):
    return Tensor(np.zeros(shape, dtype=_f32), requires_grad=requires_grad)


def ones(shape, requires_grad=False):
    return Tensor(np.ones(shape, dtype=_f32), requires_grad=requires_grad)


def uniform_init(rng, shape, bound, requires_grad=True):
    """Uniform(-bound, +bound) init from the package RNG."""
    return Tensor(rng.uniform(-bound, bound, shape), requires_grad=requires_grad)


def fan_in_uniform(rng, shape, fan_in, requires_grad=True):
    return uniform_init(rng, shape, 1.0 / math.sqrt(fan_in), requires_grad)
