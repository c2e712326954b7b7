"""FFT kernels backing the tensor-level spectral ops.

Transforms run in complex128. Power-of-two lengths take an iterative
radix-2 Cooley-Tukey path vectorized over all leading axes; every other
length goes through the Bluestein chirp-z algorithm (built on the radix-2
path), so arbitrary extents are supported without padding the data itself.
Chirp phases are computed from ``k**2 mod 2n`` in exact integer arithmetic
to avoid large-angle precision loss.

Real 2-D transforms keep the non-redundant half spectrum along the last
axis (width ``w`` maps to ``w // 2 + 1`` columns); the inverse rebuilds the
mirrored columns from conjugate symmetry.
"""

from functools import lru_cache

import numpy as np


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@lru_cache(maxsize=64)
def _bit_reverse(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


@lru_cache(maxsize=256)
def _twiddle(m, inverse):
    sign = 1.0 if inverse else -1.0
    return np.exp(sign * 2j * np.pi * np.arange(m // 2) / m)


def _fft_pow2(a, inverse):
    """Unscaled DFT along the last axis; length must be a power of two."""
    n = a.shape[-1]
    if n == 1:
        return a.copy()
    a = a[..., _bit_reverse(n)]
    lead = a.shape[:-1]
    m = 2
    while m <= n:
        half = m // 2
        tw = _twiddle(m, inverse)
        a = a.reshape(lead + (n // m, m))
        u = a[..., :half]
        t = a[..., half:] * tw
        a = np.concatenate((u + t, u - t), axis=-1).reshape(lead + (n,))
        m *= 2
    return a


@lru_cache(maxsize=64)
def _bluestein_tables(n, inverse):
    sign = 1.0 if inverse else -1.0
    k2 = (np.arange(n, dtype=object) ** 2) % (2 * n)  # exact ints
    chirp = np.exp(sign * 1j * np.pi * np.asarray(k2, dtype=np.float64) / n)
    m = 1
    while m < 2 * n - 1:
        m *= 2
    kernel = np.zeros(m, dtype=np.complex128)
    kernel[:n] = np.conj(chirp)
    kernel[m - n + 1:] = np.conj(chirp[1:][::-1])
    return chirp, _fft_pow2(kernel, inverse=False), m


def _fft_bluestein(a, inverse):
    n = a.shape[-1]
    chirp, kernel_f, m = _bluestein_tables(n, inverse)
    buf = np.zeros(a.shape[:-1] + (m,), dtype=np.complex128)
    buf[..., :n] = a * chirp
    conv = _fft_pow2(_fft_pow2(buf, inverse=False) * kernel_f, inverse=True) / m
    return conv[..., :n] * chirp


def fft1d(a, axis=-1, inverse=False):
    """Unscaled complex DFT along ``axis`` (inverse carries no 1/n)."""
    a = np.asarray(a, dtype=np.complex128)
    moved = np.moveaxis(a, axis, -1)
    n = moved.shape[-1]
    if _is_pow2(n):
        out = _fft_pow2(moved, inverse)
    else:
        out = _fft_bluestein(moved, inverse)
    return np.moveaxis(out, -1, axis)


def rfft2_raw(x):
    """Real 2-D DFT over the last two axes, half spectrum: [..., h, w//2+1]."""
    x = np.asarray(x, dtype=np.float64)
    w = x.shape[-1]
    spec = fft1d(x.astype(np.complex128), axis=-1)[..., : w // 2 + 1]
    return fft1d(spec, axis=-2)


def mirror_scale(w):
    """Per-column weights: 2 for columns with a conjugate mirror, else 1."""
    wh = w // 2 + 1
    scale = np.ones(wh)
    for k in range(1, wh):
        if (2 * k) % w != 0:
            scale[k] = 2.0
    return scale


def irfft2_raw(spec, h, w):
    """Inverse of rfft2_raw onto an (h, w) grid; returns float64."""
    spec = np.asarray(spec, dtype=np.complex128)
    wh = w // 2 + 1
    full = np.zeros(spec.shape[:-1] + (w,), dtype=np.complex128)
    full[..., :wh] = spec
    if w > 1 and wh < w:
        ks = np.arange(wh, w)
        rows = (-np.arange(h)) % h
        full[..., ks] = np.conj(spec[..., rows, :][..., :, w - ks])
    out = fft1d(fft1d(full, axis=-2, inverse=True), axis=-1, inverse=True)
    return out.real / (h * w)
