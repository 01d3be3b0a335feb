"""Exact occurrence counting of k-bit windows and the derived count laws.

Window ``j`` (0-indexed here, 1-indexed in reports) is ``x[j .. j+k-1]`` and
is encoded with ``x[j]`` in bit 0, matching :class:`~poisson_words.model.Word`.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

from . import _kernels
from .analytic import MAX_K, _check_p, fixed_weight_count, weight_log_prob
from .errors import DomainError, GuardError, InvariantError
from .model import RngStream, Word, bernoulli_bits, sample_fixed_weight_words, sample_words

COUNT_MAX = int(_kernels.COUNT_MAX)
DENSE_MAX_K = 24
HONEST_MAX_BITS = 1 << 40
BRUTE_FORCE_MAX_K = 28


@dataclass(frozen=True, eq=False)
class CountTable:
    """Multiset of k-bit windows: sorted distinct values and their counts.

    ``weight`` is set when only windows of that Hamming weight were kept;
    ``n_counted`` is then the number of such windows, otherwise it equals
    ``n_windows``.
    """

    k: int
    n_windows: int
    keys: np.ndarray
    counts: np.ndarray
    n_counted: int
    weight: int | None = None
    saturated: bool = False

    def __post_init__(self) -> None:
        if self.saturated:
            # capped counts no longer sum to the window total; the flag says so
            return
        if int(self.counts.sum(dtype=np.uint64)) != self.n_counted:
            raise InvariantError("window counts do not sum to the number of windows counted")
        if self.weight is None and self.n_counted != self.n_windows:
            raise InvariantError("unrestricted table must count every window")

    def __len__(self) -> int:
        return int(self.keys.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountTable):
            return NotImplemented
        return (
            (self.k, self.n_windows, self.n_counted, self.weight, self.saturated)
            == (other.k, other.n_windows, other.n_counted, other.weight, other.saturated)
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.counts, other.counts)
        )

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.keys.tolist(), self.counts.tolist()))

    def weights(self) -> np.ndarray:
        return _kernels.popcount64(self.keys)

    def to_csv(self, path: str | Path | None = None) -> str:
        """``window_hex,weight,count`` rows sorted by window value."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_hex", "weight", "count"])
        digits = max(1, (self.k + 3) // 4)
        for key, wt, c in zip(self.keys.tolist(), self.weights().tolist(), self.counts.tolist()):
            w.writerow([f"{key:0{digits}x}", wt, c])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _chunk_table(packed, start, n, k, weight, dense):
    wsel = -1 if weight is None else weight
    if dense:
        arr, sat = _kernels.dense_counts(packed, start, n, k, wsel)
        keys = np.flatnonzero(arr).astype(np.uint64)
        return keys, arr[keys].astype(np.uint64), sat
    vals = _kernels.window_values(packed, start, n, k, wsel)
    keys, counts = np.unique(vals, return_counts=True)
    return keys, counts.astype(np.uint64), False


def build_count_table(x, k: int, n: int, threads: int = 1, weight: int | None = None) -> CountTable:
    """Count the ``n`` windows of width ``k`` starting at positions 0..n-1 of ``x``.

    The window range is split into ``threads`` chunks overlapping by k-1 bits;
    per-chunk tables are merged by key, so the result does not depend on the
    thread count.
    """
    if not 1 <= k <= MAX_K:
        raise DomainError(f"k must be in [1, {MAX_K}], got {k}")
    if n < 1:
        raise DomainError(f"number of windows must be positive, got {n}")
    if x.length < n + k - 1:
        raise DomainError(f"sequence of length {x.length} is too short for {n} windows of width {k}")
    if weight is not None and not 0 <= weight <= k:
        raise DomainError(f"weight filter {weight} outside [0, {k}]")
    threads = max(1, min(int(threads), n))
    dense = k <= DENSE_MAX_K and (1 << k) <= 16 * n
    bounds = [n * i // threads for i in range(threads + 1)]
    jobs = [(bounds[i], bounds[i + 1] - bounds[i]) for i in range(threads)]
    if threads == 1:
        parts = [_chunk_table(x.data, s, m, k, weight, dense) for s, m in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _chunk_table(x.data, job[0], job[1], k, weight, dense), jobs))

    saturated = any(p[2] for p in parts)
    if len(parts) == 1:
        keys, counts = parts[0][0], parts[0][1]
    else:
        all_keys = np.concatenate([p[0] for p in parts])
        all_counts = np.concatenate([p[1] for p in parts])
        keys, inverse = np.unique(all_keys, return_inverse=True)
        counts = np.zeros(keys.size, dtype=np.uint64)
        np.add.at(counts, inverse, all_counts)
    if counts.size and counts.max() > COUNT_MAX:
        saturated = True
    n_counted = int(counts.sum(dtype=np.uint64))
    counts32 = np.minimum(counts, COUNT_MAX).astype(np.uint32)
    if weight is None and not saturated and n_counted != n:
        raise InvariantError(f"counted {n_counted} windows, expected {n}")
    return CountTable(
        k=k,
        n_windows=n,
        keys=keys.astype(np.uint64),
        counts=counts32,
        n_counted=n_counted if not saturated else int(counts32.sum(dtype=np.uint64)),
        weight=weight,
        saturated=saturated,
    )


def count_word(table: CountTable, omega: Word) -> int:
    """Occurrences of ``omega`` among the counted windows (0 if absent)."""
    if omega.width != table.k:
        raise DomainError(f"word width {omega.width} does not match table k={table.k}")
    if table.weight is not None and omega.weight != table.weight:
        raise DomainError("table was restricted to a different Hamming weight")
    i = int(np.searchsorted(table.keys, np.uint64(omega.value)))
    if i < table.keys.size and int(table.keys[i]) == omega.value:
        return int(table.counts[i])
    return 0


# -- count distributions ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CountDistribution:
    """pmf over counts 0..n_max plus the mass of counts above n_max."""

    pmf: np.ndarray
    tail: float
    support_kind: str

    def __post_init__(self) -> None:
        pmf = np.asarray(self.pmf, dtype=np.float64)
        object.__setattr__(self, "pmf", pmf)
        if (pmf < -1e-12).any() or (pmf > 1 + 1e-12).any() or not -1e-12 <= self.tail <= 1 + 1e-12:
            raise InvariantError("probabilities must lie in [0, 1]")
        if abs(math.fsum(pmf.tolist()) + self.tail - 1.0) > 1e-9:
            raise InvariantError("pmf and tail do not sum to one")

    @property
    def n_max(self) -> int:
        return self.pmf.size - 1

    def head(self, m: int) -> np.ndarray:
        out = np.zeros(m)
        out[: min(m, self.pmf.size)] = self.pmf[:m]
        return out

    def tail_above(self, m: int) -> float:
        """P(count > m)."""
        if m >= self.n_max:
            return self.tail
        return math.fsum(self.pmf[m + 1 :].tolist()) + self.tail

    def mean_lower_bound(self) -> float:
        return float(np.dot(np.arange(self.pmf.size), self.pmf))


def _count_histogram(counts: np.ndarray, n_max: int) -> np.ndarray:
    """Integer number of keys with count n for n = 1..n_max, then > n_max."""
    clipped = np.minimum(counts.astype(np.int64), n_max + 1)
    return np.bincount(clipped, minlength=n_max + 2)


def quenched_distribution_fixed_weight(table: CountTable, n_k: int, n_max: int) -> CountDistribution:
    """Exact law of the count of a word drawn uniformly from the weight-n_k class."""
    k = table.k
    if not 0 <= n_k <= k:
        raise DomainError(f"n_k={n_k} outside [0, {k}]")
    if table.weight is not None and table.weight != n_k:
        raise DomainError(f"table restricted to weight {table.weight}, asked for {n_k}")
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    total = fixed_weight_count(k, n_k)
    if table.weight is None:
        sel = table.weights() == n_k
        counts = table.counts[sel]
    else:
        counts = table.counts
    hist = _count_histogram(counts, n_max)
    hist[0] += total - int(counts.size)
    pmf = np.array([int(h) / total for h in hist[: n_max + 1]])
    tail = int(hist[n_max + 1]) / total
    return CountDistribution(pmf, tail, f"FixedWeight({n_k})")


def quenched_distribution_all_words(table: CountTable, p: float, n_max: int) -> CountDistribution:
    """Exact law of the count of a Ber^k(p) word in the counted prefix.

    Keys are grouped by (weight, count); each group contributes its integer
    size times p^w (1-p)^(k-w), so the pmf is a short sum of exact products.
    """
    _check_p(p)
    if table.weight is not None:
        raise DomainError("all-words distribution needs an unrestricted table")
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    k = table.k
    word_p = np.array([2.0 ** weight_log_prob(w, k, p) for w in range(k + 1)])
    cols = n_max + 2
    clipped = np.minimum(table.counts.astype(np.int64), n_max + 1)
    grid = np.bincount(table.weights() * cols + clipped, minlength=(k + 1) * cols).reshape(k + 1, cols)
    by_count = [math.fsum((grid[:, n] * word_p).tolist()) for n in range(cols)]
    seen = [int(grid[w, 1:].sum()) for w in range(k + 1)]
    # unseen words of weight w: C(k, w) - seen_w, each with mass p^w (1-p)^(k-w)
    by_count[0] = math.fsum((math.comb(k, w) - seen[w]) * word_p[w] for w in range(k + 1))
    norm = math.fsum(by_count)
    pmf = np.array(by_count[: n_max + 1]) / norm
    return CountDistribution(pmf, by_count[n_max + 1] / norm, f"AllWords({p!r})")


# -- non-intersecting model ------------------------------------------------------------


def simulate_nonintersecting(
    rng: RngStream,
    k: int,
    n_tilde: int,
    p: float,
    trials: int,
    fast: bool = True,
    word_weight: int | None = None,
) -> np.ndarray:
    """Samples of the match count of a random word against ``n_tilde`` independent blocks.

    The word is Ber^k(p), or uniform over weight ``word_weight`` when given.
    Honest mode draws every block bit; fast mode draws the count directly
    from Binomial(n_tilde, Ber^k(word)), which has the same law.
    """
    _check_p(p)
    if trials < 1:
        raise DomainError("trials must be positive")
    if not 1 <= k <= MAX_K:
        raise DomainError(f"k must be in [1, {MAX_K}], got {k}")
    if n_tilde < 1:
        raise DomainError("n_tilde must be positive")
    word_rng, block_rng = rng.derive(0), rng.derive(1)
    if word_weight is None:
        words = sample_words(word_rng, k, p, trials)
    else:
        words = sample_fixed_weight_words(word_rng, k, word_weight, trials)
    if fast:
        w = _kernels.popcount64(words)
        q = np.exp2(w * math.log2(p) + (k - w) * math.log2(1 - p))
        # shift off zero so the quantile never falls below the support
        u = block_rng.uniforms(0, trials) + 2.0**-54
        return stats.binom.ppf(u, n_tilde, q).astype(np.int64)
    if n_tilde * k > HONEST_MAX_BITS:
        raise GuardError(f"honest mode would materialize {n_tilde * k} bits per trial")
    out = np.empty(trials, dtype=np.int64)
    per_trial = n_tilde * k
    batch = max(1, (1 << 24) // per_trial)
    for t0 in range(0, trials, batch):
        t1 = min(trials, t0 + batch)
        bits = bernoulli_bits(block_rng, t0 * per_trial, (t1 - t0) * per_trial, p)
        blocks = bits.reshape(t1 - t0, n_tilde, k).astype(np.uint64) << np.arange(k, dtype=np.uint64)
        values = np.bitwise_or.reduce(blocks, axis=-1)
        out[t0:t1] = (values == words[t0:t1, None]).sum(axis=1)
    return out


# -- fixed-weight overlap classes ------------------------------------------------------


@lru_cache(maxsize=16)
def _fixed_weight_words(k: int, n: int) -> np.ndarray:
    if n < 0 or n > k:
        return np.zeros(0, dtype=np.uint64)
    if k == 0:
        return np.zeros(1, dtype=np.uint64)
    low = _fixed_weight_words(k - 1, n)
    high = _fixed_weight_words(k - 1, n - 1) | np.uint64(1 << (k - 1))
    out = np.concatenate([low, high])
    out.setflags(write=False)
    return out


def fixed_weight_words(k: int, n: int) -> np.ndarray:
    """All k-bit words of weight ``n`` as a sorted uint64 array."""
    if not 0 <= n <= k <= BRUTE_FORCE_MAX_K:
        raise GuardError(f"enumeration of weight-{n} words needs 0 <= n <= k <= {BRUTE_FORCE_MAX_K}")
    return _fixed_weight_words(k, n)


def overlap_class(k: int, n_k: int, ell: int) -> np.ndarray:
    """Weight-n_k words whose first ``ell`` letters equal their last ``ell``."""
    if not 1 <= ell <= k:
        raise DomainError(f"overlap length must be in [1, {k}], got {ell}")
    words = fixed_weight_words(k, n_k)
    mask = np.uint64((1 << ell) - 1)
    return words[(words & mask) == (words >> np.uint64(k - ell))]


def _pair_mean(words: np.ndarray, k: int, n_k_or_w, ell: int, p: float) -> np.ndarray:
    u = _kernels.popcount64(words & np.uint64((1 << ell) - 1))
    w = n_k_or_w
    ones = 2 * w - u
    zeros = 2 * (k - w) - (ell - u)
    return np.exp2(ones * math.log2(p) + zeros * math.log2(1 - p))


def indicator_product_mean_bruteforce(k: int, n_k: int, ell: int, p: float) -> float:
    """E[I_i I_j] for windows at offset k - ell, word uniform on weight n_k.

    Enumerates the overlap class and sums
    p^(2 n_k - u) (1-p)^(2(k - n_k) - (ell - u)) / C(k, n_k), where u is the
    weight of the shared ``ell``-letter block.
    """
    _check_p(p)
    if not 1 <= ell <= k - 1:
        raise DomainError(f"overlap length must be in [1, {k - 1}], got {ell}")
    z = overlap_class(k, n_k, ell)
    if z.size == 0:
        return 0.0
    return math.fsum(_pair_mean(z, k, n_k, ell, p).tolist()) / math.comb(k, n_k)


def indicator_product_mean_all_words(k: int, ell: int, p: float) -> float:
    """E[I_i I_j] at offset k - ell with the word drawn from Ber^k(p) (no weight conditioning)."""
    _check_p(p)
    if not 1 <= ell <= k - 1:
        raise DomainError(f"overlap length must be in [1, {k - 1}], got {ell}")
    if k > 20:
        raise GuardError("all-words enumeration is limited to k <= 20")
    words = np.arange(1 << k, dtype=np.uint64)
    mask = np.uint64((1 << ell) - 1)
    z = words[(words & mask) == (words >> np.uint64(k - ell))]
    w = _kernels.popcount64(z)
    u = _kernels.popcount64(z & mask)
    ones = 3 * w - u
    zeros = 3 * (k - w) - (ell - u)
    return math.fsum(np.exp2(ones * math.log2(p) + zeros * math.log2(1 - p)).tolist())
