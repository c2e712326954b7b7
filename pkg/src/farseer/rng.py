"""Deterministic pseudo-random numbers for data generation and weight init.

Implements xoshiro256** streams seeded by a splitmix64 expander, so every
dataset, initialization, and shuffle is bit-reproducible across platforms
and numpy versions (the algorithm is fixed here rather than delegated to
``numpy.random``).

To keep bulk generation fast the generator advances ``lanes`` independent
xoshiro256** streams in lockstep as a vectorized uint64 array. Output order
is step-major: one 64-bit word from lane 0..lanes-1, then the next step.
Lane states are seeded lane-major from a single splitmix64 stream (four
words for lane 0, four for lane 1, ...). The lane count is therefore part
of the reproducibility contract; it defaults to 8 everywhere.

Doubles in [0, 1) use the conventional 53-bit mantissa mapping
``(word >> 11) * 2**-53``.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_DEFAULT_LANES = 8


def splitmix64(state):
    """Advance splitmix64 once; returns (new_state, output) as python ints."""
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Xoshiro256:
    """Vectorized xoshiro256** generator with a documented output order."""

    def __init__(self, seed, lanes=_DEFAULT_LANES):
        if lanes < 1:
            raise ValueError("lanes must be >= 1")
        self.seed = int(seed) & _MASK64
        self.lanes = lanes
        state = np.empty((4, lanes), dtype=np.uint64)
        sm = self.seed
        for lane in range(lanes):
            for j in range(4):
                sm, word = splitmix64(sm)
                state[j, lane] = word
        self._s = state
        self._buffer = np.empty(0, dtype=np.uint64)

    def _next_block(self):
        """One lockstep step of all lanes; returns uint64[lanes]."""
        s = self._s
        result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
        t = s[1] << np.uint64(17)
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def raw(self, n):
        """Next n uint64 words in step-major lane order."""
        out = np.empty(n, dtype=np.uint64)
        filled = 0
        if self._buffer.size:
            take = min(n, self._buffer.size)
            out[:take] = self._buffer[:take]
            self._buffer = self._buffer[take:]
            filled = take
        while filled < n:
            block = self._next_block()
            take = min(n - filled, self.lanes)
            out[filled:filled + take] = block[:take]
            if take < self.lanes:
                self._buffer = block[take:].copy()
            filled += take
        return out

    def random(self, shape=None):
        """float64 samples in [0, 1)."""
        if shape is None:
            return float(self.raw(1)[0] >> np.uint64(11)) * 2.0 ** -53
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        vals = (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return vals.reshape(shape)

    def uniform(self, low, high, shape=None):
        return low + (high - low) * self.random(shape)

    def randint(self, n):
        """Uniform int in [0, n) via the double mapping (desk-scale n)."""
        return int(self.random() * n)

    def shuffle(self, indices):
        """In-place Fisher-Yates shuffle of a 1-D numpy array or list."""
        for i in range(len(indices) - 1, 0, -1):
            j = self.randint(i + 1)
            indices[i], indices[j] = indices[j], indices[i]
        return indices


class ScalarXoshiro256:
    """Pure-python single-stream xoshiro256**, kept as an independent
    reference implementation for the vectorized lanes."""

    def __init__(self, s0, s1, s2, s3):
        self.s = [s0 & _MASK64, s1 & _MASK64, s2 & _MASK64, s3 & _MASK64]

    @staticmethod
    def _rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & _MASK64

    def next(self):
        s = self.s
        result = (self._rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = self._rotl(s[3], 45)
        return result
