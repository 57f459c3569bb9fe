"""Global and sampled top-k Hit-Ratio curves and the mappings between them."""

__version__ = "0.1.0"

from .analysis import (
    Dominance,
    ErrorReport,
    WinnerTable,
    dominance,
    error_report,
    sampling_theorem_check,
    winner_table,
)
from .core import (
    CatalogSpec,
    HitRatioCurve,
    RankHistogram,
    RankProfile,
    SampledRankRecord,
    histogram,
    load_rank_profile,
    load_sampled_ranks,
)
from .dist import (
    beta_fn,
    binom_tail_prob,
    hoeffding_population_bound,
    hyper_tail_prob,
    log_gamma,
)
from .errors import (
    ComputationError,
    ConfigurationError,
    DomainError,
    FitError,
    ParseError,
    SampledHRError,
)
from .mapping import (
    FitConfig,
    FitTrace,
    MappingSpec,
    MappingTable,
    beta_first,
    beta_map_table,
    bound_map,
    evaluate_mapped_hr,
    fit_beta_param,
    linear_map,
    uniform_map,
)
from .metrics import (
    MonteCarloConfig,
    SamplingScheme,
    expected_shr_curve,
    hr_curve,
    sample_rank,
    shr_curve_monte_carlo,
    shr_variance_curve,
    simulate_profile,
)
