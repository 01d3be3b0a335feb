import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisson_words.analytic import (
    ConditionalPoisson,
    EntropyExponentShifted,
    EntropyScaled,
    Explicit,
    FixedWeightSpec,
    ModelParams,
    binary_entropy,
    conditional_q,
    fixed_weight_count,
    fixed_weight_mass,
    gaussian_cdf,
    gaussian_cdf_scaled,
    limit_atom,
    log_odds_exponent,
    match_prob,
    regime_log2,
    resolve_regime,
    weight_floor,
    weight_log_prob,
    word_log_prob,
)
from poisson_words.errors import DomainError, RegimeOverflowError
from poisson_words.model import Word

mpmath.mp.dps = 40

probs = st.floats(min_value=1e-6, max_value=1 - 1e-6, allow_nan=False)
biased = st.floats(min_value=0.51, max_value=0.95)


def mp_entropy(p):
    p = mpmath.mpf(p)
    return float(-p * mpmath.log(p, 2) - (1 - p) * mpmath.log(1 - p, 2))


def mp_phi(s):
    return float(mpmath.ncdf(s))


class TestModelParams:
    def test_valid(self):
        m = ModelParams(0.6, 24)
        assert (m.p, m.k) == (0.6, 24)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
    def test_bad_p(self, p):
        with pytest.raises(DomainError):
            ModelParams(p, 10)

    @pytest.mark.parametrize("k", [0, -3, 65])
    def test_bad_k(self, k):
        with pytest.raises(DomainError):
            ModelParams(0.5, k)

    def test_k_limits(self):
        ModelParams(0.5, 1)
        ModelParams(0.5, 64)


class TestEntropy:
    def test_half(self):
        assert binary_entropy(0.5) == 1.0

    @pytest.mark.parametrize("p", [0.6, 0.1, 0.75, 1e-9, 0.999])
    def test_against_mpmath(self, p):
        assert binary_entropy(p) == pytest.approx(mp_entropy(p), rel=1e-14, abs=1e-300)

    def test_frozen_value(self):
        # mpmath oracle, 40 digits
        assert binary_entropy(0.6) == pytest.approx(0.9709505944546686, abs=1e-15)

    @given(probs)
    def test_symmetry_and_range(self, p):
        h = binary_entropy(p)
        assert 0.0 < h <= 1.0
        assert h == pytest.approx(binary_entropy(1 - p), rel=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            binary_entropy(p)


class TestGaussian:
    def test_values(self):
        assert gaussian_cdf(0.0) == 0.5
        assert gaussian_cdf(1.959964) == pytest.approx(0.975, abs=1e-8)

    def test_deep_tail_relative(self):
        assert gaussian_cdf(-8.0) == pytest.approx(mp_phi(-8), rel=1e-12)
        assert gaussian_cdf(-30.0) == pytest.approx(mp_phi(-30), rel=1e-12)

    @given(st.floats(min_value=-30, max_value=30))
    def test_against_mpmath(self, s):
        # relative condition number of Phi in the lower tail grows like s^2
        assert gaussian_cdf(s) == pytest.approx(mp_phi(s), rel=2e-15 * max(1.0, s * s), abs=1e-300)

    @given(st.floats(min_value=-10, max_value=10), probs)
    def test_scaled_reflection(self, s, p):
        assert gaussian_cdf_scaled(s, p) + gaussian_cdf_scaled(-s, p) == pytest.approx(1.0, abs=1e-15)

    def test_scaled_variance(self):
        p = 0.6
        sd = math.sqrt(p * (1 - p))
        assert gaussian_cdf_scaled(sd, p) == pytest.approx(gaussian_cdf(1.0), rel=1e-15)


class TestLimitAtom:
    def test_a_one_is_half(self):
        assert limit_atom(1.0, 0.6) == 0.5
        assert limit_atom(1.0, 0.9) == 0.5

    def test_log_odds(self):
        assert log_odds_exponent(1.5, 0.75) == pytest.approx(0.36907024642854, abs=1e-12)

    def test_frozen_value(self):
        # Phi((-ln 1.5 / ln 3) / sqrt(3/16)) by mpmath
        c = mpmath.log(1.5) / mpmath.log(3)
        expect = float(mpmath.ncdf(-c / mpmath.sqrt(mpmath.mpf(3) / 16)))
        assert limit_atom(1.5, 0.75) == pytest.approx(expect, rel=1e-13)
        assert limit_atom(1.5, 0.75) == pytest.approx(0.19701514017, abs=1e-10)

    @pytest.mark.parametrize("p", [0.5, 0.4, 1.0])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            limit_atom(1.0, p)

    @given(st.floats(min_value=0.01, max_value=100), st.floats(min_value=1.01, max_value=2), biased)
    def test_decreasing_in_a(self, a, factor, p):
        assert limit_atom(a * factor, p) <= limit_atom(a, p)

    @given(st.floats(min_value=0.01, max_value=100), biased)
    def test_in_unit_interval(self, a, p):
        assert 0.0 <= limit_atom(a, p) <= 1.0

    def test_log_odds_undefined_at_half(self):
        with pytest.raises(DomainError):
            log_odds_exponent(2.0, 0.5)


class TestMatchProb:
    def test_values(self):
        assert match_prob(3, 0.7) == pytest.approx(0.58**3, rel=1e-15)
        assert match_prob(3, 0.7) == pytest.approx(0.195112, rel=1e-12)
        assert match_prob(10, 0.5) == 2.0**-10

    @given(st.integers(1, 200), probs)
    def test_bounds(self, k, p):
        assert 0.0 < match_prob(k, p) <= 1.0
        assert match_prob(k, p) >= 2.0**-k * (1 - 1e-12)


class TestFixedWeight:
    def test_counts(self):
        assert fixed_weight_count(24, 14) == 1961256
        assert fixed_weight_count(64, 32) == 1832624140942590534
        assert fixed_weight_count(5, 0) == 1

    def test_count_domain(self):
        with pytest.raises(DomainError):
            fixed_weight_count(10, 11)

    def test_weight_log_prob(self):
        assert weight_log_prob(14, 24, 0.6) == pytest.approx(14 * math.log2(0.6) + 10 * math.log2(0.4), rel=1e-15)

    def test_word_log_prob(self):
        w = Word.from_string("110")
        assert word_log_prob(w, 0.7) == pytest.approx(math.log2(0.7 * 0.7 * 0.3), rel=1e-15)

    def test_mass_ratio(self):
        m = fixed_weight_mass(400, 240, 0.6)
        exact = float(mpmath.binomial(400, 240) * mpmath.mpf("0.6") ** 240 * mpmath.mpf("0.4") ** 160)
        assert m.exact == pytest.approx(exact, rel=1e-10)
        assert abs(m.ratio - 1.0) <= 0.05

    @given(st.integers(1, 64), probs)
    def test_mass_sums_to_one(self, k, p):
        total = math.fsum(fixed_weight_mass(k, n, p).exact for n in range(k + 1))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestWeightFloor:
    def test_values(self):
        assert weight_floor(24, 0.6, 0.0) == 14
        assert weight_floor(100, 0.7, 0.0) == 70
        assert weight_floor(100, 0.5, 1.0) == 40

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            weight_floor(4, 0.5, 10.0)

    @given(st.integers(1, 64), probs, st.floats(min_value=-1, max_value=1))
    def test_in_range_or_error(self, k, p, c):
        try:
            n = weight_floor(k, p, c)
        except DomainError:
            x = p * k - c * math.sqrt(k)
            assert x < 0 or x >= k + 1 - 1e-9
            return
        assert 0 <= n <= k
        assert abs(n - (p * k - c * math.sqrt(k))) < 1 + 1e-9


class TestResolveRegime:
    def test_conditional_k24(self):
        expect = math.floor(1 / (Fraction(3, 5) ** 14 * Fraction(2, 5) ** 10))
        assert resolve_regime(ConditionalPoisson(0.0, 1.0), ModelParams(0.6, 24)) == expect == 12169775

    def test_entropy_scaled_k24(self):
        n = resolve_regime(EntropyScaled(1.0), ModelParams(0.6, 24))
        assert n == round(2.0 ** (24 * mp_entropy(0.6)))
        assert n == pytest.approx(1.0348e7, rel=1e-3)

    def test_explicit(self):
        assert resolve_regime(Explicit(77), ModelParams(0.5, 10)) == 77

    def test_uniform_control(self):
        assert resolve_regime(EntropyScaled(1.0), ModelParams(0.5, 24)) == 2**24

    def test_overflow(self):
        with pytest.raises(RegimeOverflowError):
            resolve_regime(EntropyScaled(1.0), (0.6, 1000))
        with pytest.raises(RegimeOverflowError):
            resolve_regime(EntropyScaled(1.0), ModelParams(0.5, 63))

    def test_shifted_log2(self):
        assert regime_log2(EntropyExponentShifted(-0.1), 0.6, 1024) == pytest.approx(1024 * (mp_entropy(0.6) - 0.1))
        with pytest.raises(DomainError):
            regime_log2(EntropyExponentShifted(-1.5), 0.6, 10)

    def test_bad_rules(self):
        with pytest.raises(DomainError):
            EntropyScaled(0.0)
        with pytest.raises(DomainError):
            ConditionalPoisson(0.0, -1.0)
        with pytest.raises(DomainError):
            Explicit(0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(4, 64),
        st.floats(min_value=0.3, max_value=0.8),
        st.floats(min_value=-0.5, max_value=0.5),
        st.floats(min_value=0.1, max_value=5.0),
    )
    def test_conditional_bracket(self, k, p, c, lam):
        # N q <= lambda < (N + 1) q, i.e. lambda_k lies in (lambda - q, lambda]
        params = ModelParams(p, k)
        rule = ConditionalPoisson(c, lam)
        try:
            fw = rule.weight(params)
            n = resolve_regime(rule, params)
        except (DomainError, RegimeOverflowError):
            return
        q = Fraction(p) ** fw.n_k * (1 - Fraction(p)) ** (k - fw.n_k)
        assert n * q <= Fraction(lam) < (n + 1) * q
        assert conditional_q(params, fw.n_k) == pytest.approx(float(q), rel=1e-12)

    def test_fixed_weight_spec(self):
        fw = FixedWeightSpec.from_params(ModelParams(0.6, 24), 0.0, 1.0)
        assert fw.n_k == 14
        assert fw.log2_q(ModelParams(0.6, 24)) == pytest.approx(weight_log_prob(14, 24, 0.6))
