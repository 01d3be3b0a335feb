"""Exact evaluation of match-count laws, Poisson references and TV bounds."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field

import numpy as np

from .analytic import (
    ConditionalPoisson,
    ModelParams,
    _check_p,
    fixed_weight_mass,
    match_prob,
    resolve_regime,
    weight_floor,
    weight_log_prob,
)
from .counting import BRUTE_FORCE_MAX_K, CountDistribution, indicator_product_mean_bruteforce
from .errors import DomainError, GuardError

LN2 = math.log(2.0)
# (N - n) q_i beyond this flushes (1 - q_i)^(N - n) to zero (error <= e^-700)
FLUSH_EXPONENT = 700.0
# terms below 2^-1100 relative to nothing are dropped; they are recorded
DROP_LOG2 = -1100.0
# ln q below this: -log1p(-q) = q (1 + q/2 + ...) and ln(q (1 + q/2)) = ln q to double precision
_TINY_LNQ = -40.0


@dataclass(frozen=True)
class AnnealedSpec:
    """Word length, bias and block count for the non-intersecting match law.

    ``n_tilde`` is exact when it fits comfortably in a float; otherwise only
    ``log2_n_tilde`` is kept.
    """

    k: int
    p: float
    log2_n_tilde: float
    n_tilde: int | None = None
    n_max: int = 20

    def __post_init__(self) -> None:
        _check_p(self.p)
        if self.k < 1:
            raise DomainError(f"k must be positive, got {self.k}")
        if self.n_tilde is not None and self.n_tilde < 1:
            raise DomainError("n_tilde must be at least 1")
        if self.log2_n_tilde < 0 or math.isnan(self.log2_n_tilde):
            raise DomainError("n_tilde must be at least 1")
        if self.n_max < 0:
            raise DomainError("n_max must be non-negative")

    @classmethod
    def from_count(cls, k: int, p: float, n_tilde: int, n_max: int | None = None) -> "AnnealedSpec":
        if n_tilde < 1:
            raise DomainError("n_tilde must be at least 1")
        return cls(k, p, math.log2(n_tilde), int(n_tilde), n_tilde if n_max is None else n_max)

    @classmethod
    def from_log2(cls, k: int, p: float, log2_n_tilde: float, n_max: int = 20) -> "AnnealedSpec":
        if log2_n_tilde <= 52:
            return cls.from_count(k, p, max(1, round(2.0**log2_n_tilde)), n_max)
        return cls(k, p, log2_n_tilde, None, n_max)

    @property
    def ln_n_tilde(self) -> float:
        return math.log(self.n_tilde) if self.n_tilde is not None else self.log2_n_tilde * LN2

    def ln_n_minus(self, n: int) -> float:
        """ln(N - n), for N > n."""
        if self.n_tilde is not None:
            return math.log(self.n_tilde - n)
        return self.ln_n_tilde + math.log1p(-n * math.exp(-self.ln_n_tilde))

    def ln_binom(self, n: int) -> float:
        """ln C(N, n) as sum_{j<n} ln(N - j) - ln n!."""
        if self.n_tilde is not None and self.n_tilde < 2**53 and n > 64:
            return math.lgamma(self.n_tilde + 1) - math.lgamma(n + 1) - math.lgamma(self.n_tilde - n + 1)
        ln_n = self.ln_n_tilde
        inv = math.exp(-ln_n)
        return n * ln_n + math.fsum(math.log1p(-j * inv) for j in range(1, n)) - math.lgamma(n + 1)


def _ln_neg_log1p_neg(ln_q: float) -> float:
    """ln(-ln(1 - q)) from ln q."""
    if ln_q < _TINY_LNQ:
        return ln_q
    return math.log(-math.log1p(-math.exp(ln_q)))


def _logsumexp(terms: list[float]) -> float:
    finite = [t for t in terms if t != -math.inf]
    if not finite:
        return -math.inf
    top = max(finite)
    return top + math.log(math.fsum(math.exp(t - top) for t in finite))


def annealed_log_terms(spec: AnnealedSpec, n: int) -> list[float]:
    """Natural-log summands of P(count = n), one per weight class i = 0..k."""
    if n < 0 or n > spec.n_max or (spec.n_tilde is not None and n > spec.n_tilde):
        raise DomainError(f"n={n} outside [0, min(N, n_max)]")
    k, p = spec.k, spec.p
    ln_p, ln_q1 = math.log(p), math.log1p(-p)
    ln_binom_n = spec.ln_binom(n)
    rest = spec.n_tilde is None or spec.n_tilde > n
    ln_rest = spec.ln_n_minus(n) if rest else -math.inf
    terms = []
    for i in range(k + 1):
        ln_qi = i * ln_p + (k - i) * ln_q1
        ln_ci = math.lgamma(k + 1) - math.lgamma(i + 1) - math.lgamma(k - i + 1)
        if rest:
            # (N - n) * ln(1 - q_i) = -exp(ln(N - n) + ln(-ln(1 - q_i)))
            ln_decay = ln_rest + _ln_neg_log1p_neg(ln_qi)
            if ln_decay > math.log(FLUSH_EXPONENT):
                terms.append(-math.inf)
                continue
            survive = -math.exp(ln_decay)
        else:
            survive = 0.0
        terms.append(ln_binom_n + ln_ci + (n + 1) * ln_qi + survive)
    return terms


def annealed_pmf(spec: AnnealedSpec, n: int) -> float:
    """P(count = n) for a Ber^k word against N independent Ber^k blocks."""
    return math.exp(min(0.0, _logsumexp(annealed_log_terms(spec, n))))


def annealed_truncation_bound(spec: AnnealedSpec, n: int) -> float:
    """Upper bound on the mass discarded by flushing and dropping terms at ``n``."""
    dropped = 0
    for t in annealed_log_terms(spec, n):
        if t == -math.inf or t / LN2 < DROP_LOG2:
            dropped += 1
    return dropped * max(math.exp(-FLUSH_EXPONENT), 2.0**DROP_LOG2)


def annealed_distribution(spec: AnnealedSpec) -> CountDistribution:
    top = spec.n_max if spec.n_tilde is None else min(spec.n_max, spec.n_tilde)
    pmf = np.array([annealed_pmf(spec, n) for n in range(top + 1)])
    head = math.fsum(pmf.tolist())
    if head > 1.0:
        pmf = pmf / head
        head = 1.0
    return CountDistribution(pmf, max(0.0, 1.0 - head), f"AllWords({spec.p!r})")


def annealed_mean(spec: AnnealedSpec) -> float:
    """N (p^2 + (1-p)^2)^k, evaluated in log space."""
    ln_m = spec.ln_n_tilde + spec.k * math.log(spec.p**2 + (1 - spec.p) ** 2)
    return math.exp(ln_m)


def conditional_mean_fixed_weight(k: int, m: int, p: float, n_tilde: int) -> float:
    """Mean match count given the word has weight ``m``: N p^m (1-p)^(k-m)."""
    if not 0 <= m <= k:
        raise DomainError(f"m={m} outside [0, {k}]")
    # exact rational product, rounded once, so the result keeps the bracket set by the length rule
    pf = Fraction(p)
    return float(n_tilde * pf**m * (1 - pf) ** (k - m))


def poisson_pmf(lam: float, n: int) -> float:
    if not lam > 0:
        raise DomainError(f"Poisson mean must be positive, got {lam!r}")
    if n < 0:
        raise DomainError("n must be non-negative")
    return math.exp(-lam + n * math.log(lam) - math.lgamma(n + 1))


def poisson_distribution(lam: float, n_max: int) -> CountDistribution:
    pmf = np.array([poisson_pmf(lam, n) for n in range(n_max + 1)])
    return CountDistribution(pmf, max(0.0, 1.0 - math.fsum(pmf.tolist())), f"Poisson({lam!r})")


def _as_dist(d) -> CountDistribution | np.ndarray:
    if isinstance(d, CountDistribution):
        return d
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError("pmf must be one-dimensional")
    return arr


def _coarsen(d, m: int) -> np.ndarray:
    """Vector of P(0..m) then P(> m)."""
    if isinstance(d, CountDistribution):
        return np.append(d.head(m + 1), d.tail_above(m))
    head = np.zeros(m + 1)
    head[: min(m + 1, d.size)] = d[: m + 1]
    return np.append(head, math.fsum(d[m + 1 :].tolist()))


def tv_distance(d1, d2) -> float:
    """Total variation distance between two count laws.

    Inputs are :class:`CountDistribution` objects or plain pmf vectors. When
    either carries a tail bucket, both are compared on 0..m plus one "above
    m" outcome, m being the smaller n_max among tailed inputs.
    """
    a, b = _as_dist(d1), _as_dist(d2)
    for d in (a, b):
        total = d.pmf.sum() + d.tail if isinstance(d, CountDistribution) else d.sum()
        if abs(total - 1.0) > 1e-6:
            raise DomainError(f"distribution not normalized (total {total:.9g})")
    tailed = [d.n_max for d in (a, b) if isinstance(d, CountDistribution)]
    if tailed:
        m = min(tailed)
    else:
        m = max(a.size, b.size) - 1
    va, vb = _coarsen(a, m), _coarsen(b, m)
    return min(1.0, 0.5 * math.fsum(np.abs(va - vb).tolist()))


# -- Stein-Chen bound ------------------------------------------------------------------


@dataclass
class TvBoundReport:
    """Itemized Stein-Chen bound on TV(count, Poisson(lambda_k)).

    Edge terms sum over ordered pairs (i, j) with 0 < |i - j| < k, so every
    unordered dependent pair contributes twice.
    """

    k: int
    p: float
    c: float
    lam: float
    n_k: int
    N_k: int
    q: float
    lambda_k: float
    term_self: float
    term_edges: float
    bound: float
    mode: str
    per_ell: list[dict] = field(default_factory=list)

    def to_dict(self, verbose: bool = False) -> dict:
        d = asdict(self)
        if not verbose:
            d.pop("per_ell")
        return d

    def to_json(self, verbose: bool = False) -> str:
        return json.dumps(self.to_dict(verbose), indent=2, sort_keys=True)


def pair_mean_analytic(k: int, n_k: int, ell: int, p: float) -> float:
    """Evaluable upper bound on E[I_i I_j] at overlap ``ell`` for p >= 1/2."""
    if p < 0.5:
        raise DomainError("analytic pair bound needs p >= 1/2")
    q = 2.0 ** weight_log_prob(n_k, k, p)
    if ell < math.sqrt(k):
        return q * q * (1.0 - p) ** (-ell)
    return q * match_prob(ell, p) / fixed_weight_mass(k, n_k, p).exact


def stein_chen_bound(k: int, p: float, c: float, lam: float, mode: str = "BruteForce", n_k: int | None = None) -> TvBoundReport:
    if mode not in ("BruteForce", "AnalyticBound"):
        raise DomainError(f"unknown mode {mode!r}")
    if mode == "BruteForce" and k > BRUTE_FORCE_MAX_K:
        raise GuardError(f"BruteForce mode is limited to k <= {BRUTE_FORCE_MAX_K}")
    params = ModelParams(p, k)
    rule = ConditionalPoisson(c, lam, n_k)
    n_k = rule.weight(params).n_k
    N = resolve_regime(rule, params)
    q = 2.0 ** weight_log_prob(n_k, k, p)
    lam_k = N * q
    term_self = N * q * q
    per_ell = []
    edges = []
    for ell in range(1, k):
        pairs = 2 * max(N - (k - ell), 0)
        if mode == "BruteForce":
            e = indicator_product_mean_bruteforce(k, n_k, ell, p)
        else:
            e = pair_mean_analytic(k, n_k, ell, p)
        contrib = pairs * (q * q + e)
        edges.append(contrib)
        per_ell.append({"ell": ell, "ordered_pairs": pairs, "pair_mean": e, "contribution": contrib})
    term_edges = math.fsum(edges)
    bound = min(1.0, 1.0 / lam_k) * (term_self + term_edges)
    return TvBoundReport(
        k=k, p=p, c=c, lam=lam, n_k=n_k, N_k=N, q=q, lambda_k=lam_k,
        term_self=term_self, term_edges=term_edges, bound=bound, mode=mode, per_ell=per_ell,
    )
