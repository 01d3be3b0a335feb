"""Closed-form scalar functions for Bernoulli(p) word statistics.

Small probabilities are carried as base-2 logarithms; a word probability at
k = 64 can sit near 1e-18 and products of several of them underflow quickly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

from .errors import DomainError, RegimeOverflowError

MAX_K = 64
MAX_LOG2_N = 62.0

# Values of p*k - c*sqrt(k) closer than this to an integer snap onto it, so
# decimal inputs such as p=0.7, k=100 give 70 rather than 69.
_FLOOR_SNAP = 1e-9


def _check_p(p: float) -> None:
    if not (0.0 < p < 1.0) or math.isnan(p):
        raise DomainError(f"p must lie strictly inside (0,1), got {p!r}")


def _check_k(k: int) -> None:
    if not (1 <= k <= MAX_K):
        raise DomainError(f"k must satisfy 1 <= k <= {MAX_K}, got {k!r}")


@dataclass(frozen=True)
class ModelParams:
    """Success probability ``p`` and word length ``k``."""

    p: float
    k: int

    def __post_init__(self) -> None:
        _check_p(self.p)
        if not isinstance(self.k, int) or isinstance(self.k, bool):
            raise DomainError(f"k must be an integer, got {self.k!r}")
        _check_k(self.k)


@dataclass(frozen=True)
class FixedWeightSpec:
    """Target Hamming weight ``n_k`` and Poisson mean ``lam``.

    ``c`` is the centering offset in units of sqrt(k). When ``n_k`` is set
    directly (a generic weight sequence) ``c`` is informational only.
    """

    c: float
    n_k: int
    lam: float

    def __post_init__(self) -> None:
        if self.n_k < 0:
            raise DomainError(f"target weight must be non-negative, got {self.n_k}")
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam!r}")

    @classmethod
    def from_params(cls, params: ModelParams, c: float, lam: float) -> "FixedWeightSpec":
        return cls(c=c, n_k=weight_floor(params.k, params.p, c), lam=lam)

    def log2_q(self, params: ModelParams) -> float:
        """log2 of p^n_k (1-p)^(k-n_k), the probability of one fixed word."""
        if self.n_k > params.k:
            raise DomainError(f"n_k={self.n_k} exceeds k={params.k}")
        return self.n_k * math.log2(params.p) + (params.k - self.n_k) * math.log2(1 - params.p)


# -- regime rules ------------------------------------------------------------


@dataclass(frozen=True)
class EntropyScaled:
    """N_k = round(2^(k H(p)) * a^sqrt(k))."""

    a: float

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a!r}")


@dataclass(frozen=True)
class EntropyExponentShifted:
    """N_k = round(2^(k (H(p) + delta)))."""

    delta: float


@dataclass(frozen=True)
class ConditionalPoisson:
    """N_k = floor(lam / q) with q the probability of one weight-n_k word."""

    c: float
    lam: float
    n_k: int | None = None

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam!r}")

    def weight(self, params: ModelParams) -> FixedWeightSpec:
        if self.n_k is not None:
            if not 0 <= self.n_k <= params.k:
                raise DomainError(f"n_k={self.n_k} outside [0, {params.k}]")
            return FixedWeightSpec(c=self.c, n_k=self.n_k, lam=self.lam)
        return FixedWeightSpec.from_params(params, self.c, self.lam)


@dataclass(frozen=True)
class Explicit:
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"explicit N must be positive, got {self.n!r}")


RegimeRule = Union[EntropyScaled, EntropyExponentShifted, ConditionalPoisson, Explicit]


# -- scalar functions ----------------------------------------------------------


def binary_entropy(p: float) -> float:
    """Binary entropy in bits, ``-p log2 p - (1-p) log2 (1-p)``."""
    _check_p(p)
    # log1p keeps full relative precision when p or 1-p is tiny
    return -(p * math.log(p) + (1.0 - p) * math.log1p(-p)) / math.log(2.0)


def gaussian_cdf(s: float) -> float:
    """Standard normal CDF.

    Evaluated as ``erfc(-s / sqrt 2) / 2``; using erfc rather than
    ``1 + erf`` keeps full relative accuracy in the lower tail.
    """
    return 0.5 * math.erfc(-s / math.sqrt(2.0))


def gaussian_cdf_scaled(s: float, p: float) -> float:
    """CDF of a centred Gaussian with variance p(1-p)."""
    _check_p(p)
    return gaussian_cdf(s / math.sqrt(p * (1.0 - p)))


def weight_log_prob(weight: int, k: int, p: float) -> float:
    """log2 of the Bernoulli(p) product measure of any k-bit word of given weight."""
    _check_p(p)
    if not 0 <= weight <= k:
        raise DomainError(f"weight {weight} outside [0, {k}]")
    return weight * math.log2(p) + (k - weight) * math.log2(1.0 - p)


def word_log_prob(omega, p: float) -> float:
    """log2 Ber^k(omega); ``omega`` is a :class:`~poisson_words.model.Word`."""
    return weight_log_prob(omega.weight, omega.width, p)


def log_odds_exponent(a: float, p: float) -> float:
    """Logarithm of ``a`` in base p/(1-p)."""
    _check_p(p)
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    if p == 0.5:
        raise DomainError("log-odds exponent is undefined at p = 1/2")
    return math.log(a) / math.log(p / (1.0 - p))


def limit_atom(a: float, p: float) -> float:
    """Limiting mass at zero for N_k of order 2^(k H(p)) a^sqrt(k), p > 1/2."""
    if not 0.5 < p < 1.0:
        raise DomainError(f"limit_atom requires p in (1/2, 1), got {p!r}")
    return gaussian_cdf_scaled(-log_odds_exponent(a, p), p)


def match_prob(k: int, p: float) -> float:
    """Probability that two independent Bernoulli(p) k-words coincide."""
    _check_p(p)
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    return (p * p + (1.0 - p) * (1.0 - p)) ** k


def fixed_weight_count(k: int, n: int) -> int:
    """Number of k-bit words of Hamming weight ``n`` (exact)."""
    if not (0 <= n <= k <= MAX_K):
        raise DomainError(f"need 0 <= n <= k <= {MAX_K}, got k={k}, n={n}")
    return math.comb(k, n)


class WeightMass(NamedTuple):
    exact: float
    approx: float

    @property
    def ratio(self) -> float:
        return self.exact / self.approx


def fixed_weight_mass(k: int, n: int, p: float) -> WeightMass:
    """Binomial(k, p) mass at ``n`` together with its local Gaussian approximation."""
    _check_p(p)
    if not 0 <= n <= k:
        raise DomainError(f"need 0 <= n <= k, got k={k}, n={n}")
    log_exact = (
        math.lgamma(k + 1)
        - math.lgamma(n + 1)
        - math.lgamma(k - n + 1)
        + n * math.log(p)
        + (k - n) * math.log1p(-p)
    )
    var = k * p * (1.0 - p)
    approx = math.exp(-((n - p * k) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    return WeightMass(math.exp(log_exact), approx)


def weight_floor(k: int, p: float, c: float) -> int:
    """floor(p k - c sqrt(k)), required to land in [0, k]."""
    _check_p(p)
    x = p * k - c * math.sqrt(k)
    r = round(x)
    n = int(r) if abs(x - r) <= _FLOOR_SNAP * max(1.0, abs(x)) else math.floor(x)
    if not 0 <= n <= k:
        raise DomainError(f"target weight floor(pk - c sqrt k) = {n} outside [0, {k}]")
    return n


# -- sequence length rules -------------------------------------------------------


def regime_log2(rule: RegimeRule, p: float, k: int) -> float:
    """log2 of the (unrounded) sequence length a rule prescribes.

    Unlike :func:`resolve_regime` this has no 62-bit cap and no k <= 64 cap,
    which is what the exact annealed formulas need at k in the thousands.
    """
    _check_p(p)
    if isinstance(rule, EntropyScaled):
        return k * binary_entropy(p) + math.sqrt(k) * math.log2(rule.a)
    if isinstance(rule, EntropyExponentShifted):
        h = binary_entropy(p)
        # no upper limit: N_k beyond 2^k is meaningful (every word gets many hits)
        if not rule.delta > -h:
            raise DomainError(f"delta must exceed -H(p) = {-h:.6g}, got {rule.delta!r}")
        return k * (h + rule.delta)
    if isinstance(rule, ConditionalPoisson):
        n_k = rule.n_k if rule.n_k is not None else weight_floor(k, p, rule.c)
        return math.log2(rule.lam) - weight_log_prob(n_k, k, p)
    if isinstance(rule, Explicit):
        return math.log2(rule.n)
    raise TypeError(f"unknown regime rule {rule!r}")


def resolve_regime(rule: RegimeRule, params: ModelParams | tuple[float, int]) -> int:
    """Integer sequence length N_k for one k.

    ``params`` may also be a plain ``(p, k)`` pair, so the overflow guard can
    be exercised for k beyond the 64-bit word limit. Raises
    :class:`RegimeOverflowError` when log2 N_k exceeds 62.
    """
    p, k = (params.p, params.k) if isinstance(params, ModelParams) else params
    if isinstance(rule, Explicit):
        return rule.n
    log2_n = regime_log2(rule, p, k)
    if log2_n > MAX_LOG2_N:
        raise RegimeOverflowError(f"log2 N_k = {log2_n:.6g} exceeds {MAX_LOG2_N:g} at k={k}")
    if isinstance(rule, ConditionalPoisson):
        n_k = rule.n_k if rule.n_k is not None else weight_floor(k, p, rule.c)
        if not 0 <= n_k <= k:
            raise DomainError(f"n_k={n_k} outside [0, {k}]")
        pf = Fraction(p)
        q = pf**n_k * (1 - pf) ** (k - n_k)
        lam = Fraction(rule.lam)
        n = math.floor(2.0**log2_n)
        # float estimate, then exact rational correction: n q <= lam < (n+1) q
        while n * q > lam:
            n -= 1
        while (n + 1) * q <= lam:
            n += 1
        if n < 1:
            raise DomainError(f"lambda/q < 1 at k={k}; N_k would be zero")
        return n
    n = round(2.0**log2_n)
    if n < 1:
        raise DomainError(f"rule {rule!r} resolves to N_k < 1 at k={k}")
    return n


def conditional_q(params: ModelParams, n_k: int) -> float:
    """p^n_k (1-p)^(k-n_k) as a float."""
    return 2.0 ** weight_log_prob(n_k, params.k, params.p)
