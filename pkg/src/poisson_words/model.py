"""Reproducible sampling of Bernoulli(p) sequences and k-bit words.

Generator
---------
Every variate is a pure function of ``(seed, stream_id, index)``, using the
SplitMix64 output function in counter mode::

    key      = mix64(mix64(seed) + (stream_id + 1) * GAMMA)
    raw(u)   = mix64(key + (u + 1) * GAMMA)          (all mod 2**64)
    unif(u)  = (raw(u) >> 11) * 2**-53

with ``GAMMA = 0x9E3779B97F4A7C15`` and ``mix64`` the SplitMix64 finalizer
(shifts 30/27/31, multipliers 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB).
Changing any of these constants changes every golden value in the tests.

Sequences
---------
Bit ``i`` of a sampled sequence is 1 iff ``unif(start + i) < p``. Words of
width k are stored as integers whose bit ``j`` is the ``j+1``-th letter.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .analytic import MAX_K, _check_p
from .errors import DomainError

_MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64_int(z: int) -> int:
    """SplitMix64 finalizer on Python ints (reference implementation)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """Immutable descriptor of one counter-based random stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    @property
    def key(self) -> np.uint64:
        k = mix64_int(mix64_int(self.seed) + (self.stream_id + 1) * GAMMA)
        return np.uint64(k)

    def derive(self, label: int) -> "RngStream":
        """A child stream, distinct for each ``label``, on the same seed."""
        return RngStream(self.seed, mix64_int(self.stream_id * GAMMA + label + 1))

    def raw(self, start: int, count: int) -> np.ndarray:
        return _kernels.raw_variates(self.key, np.uint64(start), count)

    def uniforms(self, start: int, count: int) -> np.ndarray:
        """53-bit uniforms in [0, 1) for indices ``start .. start+count-1``."""
        return (self.raw(start, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform_reference(rng: RngStream, index: int) -> float:
    """Single variate computed with Python integers only (golden-test oracle)."""
    key = mix64_int(mix64_int(rng.seed) + (rng.stream_id + 1) * GAMMA)
    return (mix64_int(key + (index + 1) * GAMMA) >> 11) * 2.0**-53


def _threshold(p: float) -> np.uint64:
    # u < p  <=>  m < p * 2^53 for integer m; p * 2^53 is exact in binary64
    return np.uint64(math.ceil(p * 2.0**53))


# -- sequences -------------------------------------------------------------------


@dataclass(eq=False)
class BitSequence:
    """A finite binary sequence stored as little-endian packed bits.

    Padding bits beyond ``length`` are always zero, so two sequences are
    equal iff their lengths and packed bytes are equal.
    """

    data: np.ndarray
    length: int

    _HEADER = struct.Struct("<Q")

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if self.data.shape != ((self.length + 7) // 8,):
            raise DomainError(f"packed buffer of {self.data.size} bytes does not hold {self.length} bits")
        tail = self.length % 8
        if tail and self.data[-1] >> tail:
            raise DomainError("padding bits beyond length must be zero")

    @classmethod
    def from_bits(cls, bits) -> "BitSequence":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or (arr > 1).any():
            raise DomainError("bits must be a 1-d array of 0/1 values")
        return cls(np.packbits(arr, bitorder="little"), int(arr.size))

    @classmethod
    def from_string(cls, s: str) -> "BitSequence":
        return cls.from_bits([int(ch) for ch in s])

    def to_bits(self) -> np.ndarray:
        return np.unpackbits(self.data, count=self.length, bitorder="little")

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(f"bit index {i} out of range for length {self.length}")
        return int((self.data[i >> 3] >> (i & 7)) & 1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return self.length == other.length and bytes(self.data) == bytes(other.data)

    def to_bytes(self) -> bytes:
        """8-byte little-endian bit count, then the packed bytes."""
        return self._HEADER.pack(self.length) + bytes(self.data)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "BitSequence":
        if len(blob) < 8:
            raise DomainError("truncated header")
        (length,) = cls._HEADER.unpack_from(blob)
        body = np.frombuffer(blob, dtype=np.uint8, offset=8)
        return cls(body.copy(), length)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "BitSequence":
        return cls.from_bytes(Path(path).read_bytes())


@dataclass(frozen=True)
class Word:
    """A k-bit word; bit ``j`` of ``value`` is letter ``j+1``."""

    value: int
    width: int
    weight: int = field(init=False)

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_K:
            raise DomainError(f"word width must be in [1, {MAX_K}], got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise DomainError(f"value {self.value:#x} does not fit in {self.width} bits")
        object.__setattr__(self, "weight", int(self.value).bit_count())

    @classmethod
    def from_string(cls, s: str) -> "Word":
        value = sum(1 << j for j, ch in enumerate(s) if ch == "1")
        if set(s) - {"0", "1"}:
            raise DomainError(f"not a binary string: {s!r}")
        return cls(value, len(s))

    def __str__(self) -> str:
        return "".join("1" if (self.value >> j) & 1 else "0" for j in range(self.width))


def sample_sequence(rng: RngStream, length: int, p: float, start: int = 0) -> BitSequence:
    """Bernoulli(p) bits from variates ``start .. start+length-1`` of ``rng``."""
    _check_p(p)
    if length < 0:
        raise DomainError(f"length must be non-negative, got {length}")
    packed = _kernels.bernoulli_packed(rng.key, np.uint64(start), length, _threshold(p))
    return BitSequence(packed, length)


def bernoulli_bits(rng: RngStream, start: int, count: int, p: float) -> np.ndarray:
    """Unpacked 0/1 array, identical to ``sample_sequence(...).to_bits()``."""
    return sample_sequence(rng, count, p, start).to_bits()


def _pack_rows(bits: np.ndarray) -> np.ndarray:
    k = bits.shape[-1]
    shifts = np.arange(k, dtype=np.uint64)
    return np.bitwise_or.reduce(bits.astype(np.uint64) << shifts, axis=-1)


def sample_words(rng: RngStream, k: int, p: float, count: int, start: int = 0) -> np.ndarray:
    """Values of ``count`` independent Ber^k words; draw ``i`` uses variates
    ``(start+i)*k .. (start+i+1)*k - 1``."""
    if not 1 <= k <= MAX_K:
        raise DomainError(f"k must be in [1, {MAX_K}], got {k}")
    bits = bernoulli_bits(rng, start * k, count * k, p).reshape(count, k)
    return _pack_rows(bits)


def sample_word(rng: RngStream, k: int, p: float, index: int = 0) -> Word:
    return Word(int(sample_words(rng, k, p, 1, start=index)[0]), k)


def sample_fixed_weight_words(rng: RngStream, k: int, n: int, count: int, start: int = 0) -> np.ndarray:
    """Uniform words of weight exactly ``n`` by partial Fisher-Yates.

    Draw ``i`` reads variates ``(start+i)*k`` onward, one per selected
    position: position slot ``t`` swaps with ``t + floor(u * (k - t))``.
    """
    if not 0 <= n <= k <= MAX_K or k < 1:
        raise DomainError(f"need 0 <= n <= k <= {MAX_K}, got k={k}, n={n}")
    perm = np.tile(np.arange(k, dtype=np.int64), (count, 1))
    u = rng.uniforms(start * k, count * k).reshape(count, k)
    rows = np.arange(count)
    for t in range(n):
        j = t + np.floor(u[:, t] * (k - t)).astype(np.int64)
        held = perm[rows, t].copy()
        perm[rows, t] = perm[rows, j]
        perm[rows, j] = held
    values = np.zeros(count, dtype=np.uint64)
    for t in range(n):
        values |= np.left_shift(np.uint64(1), perm[:, t].astype(np.uint64))
    if (_kernels.popcount64(values) != n).any():
        raise AssertionError("fixed-weight sampler produced a word of the wrong weight")
    return values


def sample_fixed_weight_word(rng: RngStream, k: int, n: int, index: int = 0) -> Word:
    return Word(int(sample_fixed_weight_words(rng, k, n, 1, start=index)[0]), k)
