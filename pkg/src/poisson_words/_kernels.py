"""Numba kernels for the hot loops: bit generation and rolling windows.

All arithmetic on generator state is uint64 with wrap-around; literals are
wrapped in ``np.uint64`` so numba never promotes a mixed expression to float.
"""

import numba as nb
import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)

COUNT_MAX = np.uint32(0xFFFFFFFF)


@nb.njit(nb.uint64(nb.uint64), nogil=True, cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(nogil=True, cache=True)
def raw_variates(key, start, count):
    out = np.empty(count, dtype=np.uint64)
    base = np.uint64(start)
    for i in range(count):
        out[i] = mix64(key + (base + np.uint64(i) + _ONE) * GAMMA)
    return out


@nb.njit(nogil=True, cache=True)
def bernoulli_packed(key, start, length, threshold):
    """Packed little-endian bits; bit i is 1 iff the 53-bit variate i < threshold."""
    out = np.zeros((length + 7) // 8, dtype=np.uint8)
    base = np.uint64(start)
    for i in range(length):
        z = mix64(key + (base + np.uint64(i) + _ONE) * GAMMA)
        if (z >> _S11) < threshold:
            out[i >> 3] |= np.uint8(1 << (i & 7))
    return out


@nb.njit(nogil=True, cache=True)
def _bit(packed, i):
    return np.uint64((packed[i >> 3] >> (i & 7)) & 1)


@nb.njit(nogil=True, cache=True)
def window_values(packed, start, n_windows, k, weight):
    """Values of the windows starting at ``start .. start+n_windows-1``.

    Bit t of a window value is the t-th bit of the window. With
    ``weight >= 0`` only windows of that Hamming weight are emitted.
    """
    out = np.empty(n_windows, dtype=np.uint64)
    if n_windows == 0:
        return out
    top = np.uint64(k - 1)
    v = np.uint64(0)
    w = 0
    for t in range(k):
        b = _bit(packed, start + t)
        v |= b << np.uint64(t)
        w += int(b)
    m = 0
    for j in range(n_windows):
        if weight < 0 or w == weight:
            out[m] = v
            m += 1
        if j + 1 < n_windows:
            b = _bit(packed, start + j + k)
            w += int(b) - int(v & _ONE)
            v = (v >> _ONE) | (b << top)
    return out[:m]


@nb.njit(nogil=True, cache=True)
def dense_counts(packed, start, n_windows, k, weight):
    """Saturating per-value window counts in a 2^k array; returns (counts, saturated)."""
    counts = np.zeros(1 << k, dtype=np.uint32)
    saturated = False
    if n_windows == 0:
        return counts, saturated
    top = np.uint64(k - 1)
    v = np.uint64(0)
    w = 0
    for t in range(k):
        b = _bit(packed, start + t)
        v |= b << np.uint64(t)
        w += int(b)
    for j in range(n_windows):
        if weight < 0 or w == weight:
            c = counts[v]
            if c < COUNT_MAX:
                counts[v] = c + np.uint32(1)
            else:
                saturated = True
        if j + 1 < n_windows:
            b = _bit(packed, start + j + k)
            w += int(b) - int(v & _ONE)
            v = (v >> _ONE) | (b << top)
    return counts, saturated


@nb.njit(nogil=True, cache=True)
def popcount64(values):
    out = np.empty(values.shape[0], dtype=np.int64)
    for i in range(values.shape[0]):
        x = values[i]
        c = 0
        while x:
            x &= x - _ONE
            c += 1
        out[i] = c
    return out
