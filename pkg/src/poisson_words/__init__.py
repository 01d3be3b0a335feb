"""Occurrence counts of k-letter words in Bernoulli sequences: exact laws,
quenched counting and Poisson approximation diagnostics."""

from .analytic import (
    ConditionalPoisson,
    EntropyExponentShifted,
    EntropyScaled,
    Explicit,
    FixedWeightSpec,
    ModelParams,
    binary_entropy,
    fixed_weight_count,
    fixed_weight_mass,
    gaussian_cdf,
    gaussian_cdf_scaled,
    limit_atom,
    log_odds_exponent,
    match_prob,
    resolve_regime,
    weight_floor,
    word_log_prob,
)
from .counting import (
    CountDistribution,
    CountTable,
    build_count_table,
    count_word,
    indicator_product_mean_bruteforce,
    quenched_distribution_all_words,
    quenched_distribution_fixed_weight,
    simulate_nonintersecting,
)
from .errors import ConfigError, DomainError, GuardError, InvariantError, RegimeOverflowError
from .exact import (
    AnnealedSpec,
    TvBoundReport,
    annealed_distribution,
    annealed_mean,
    annealed_pmf,
    conditional_mean_fixed_weight,
    poisson_pmf,
    stein_chen_bound,
    tv_distance,
)
from .experiments import ExperimentReport, ExperimentSpec, run
from .model import BitSequence, RngStream, Word, sample_sequence, sample_word

__version__ = "0.1.0"
