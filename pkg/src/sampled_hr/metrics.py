"""Global and sampled hit-ratio curves.

Exact expectations use the tail kernels from :mod:`sampled_hr.dist`; Monte
Carlo estimates draw every user's sampled rank from a seeded stream so that
results depend only on ``(inputs, seed)``, never on thread scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CatalogSpec, HitRatioCurve, RankHistogram, RankProfile, SampledRankRecord
from .dist import WITH_REPLACEMENT, WITHOUT_REPLACEMENT, tail_matrix
from .errors import ConfigurationError, DomainError

IRRELEVANT_ONLY = "actual"
SCHEME_KINDS = (WITH_REPLACEMENT, WITHOUT_REPLACEMENT, IRRELEVANT_ONLY)

# users per RNG stream; fixed so results do not depend on the worker count
BLOCK_SIZE = 4096
# rows of the rank x cutoff kernel evaluated at once
_KERNEL_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class SamplingScheme:
    """How the ``n - 1`` comparison items are drawn for each user.

    ``binom`` samples with replacement, ``hyper`` without, and ``actual``
    without replacement from a per-user pool of ``per_user_catalog[u]``
    items the user never interacted with (target included).
    """

    kind: str
    per_user_catalog: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise DomainError(f"unknown sampling scheme {self.kind!r}; use one of {SCHEME_KINDS}")
        if self.kind == IRRELEVANT_ONLY:
            if self.per_user_catalog is None:
                raise ConfigurationError("the 'actual' scheme needs per-user effective_N values")
            eff = np.array(self.per_user_catalog, dtype=np.int64)
            eff.setflags(write=False)
            object.__setattr__(self, "per_user_catalog", eff)
        elif self.per_user_catalog is not None:
            raise ConfigurationError(f"scheme {self.kind!r} takes no per-user catalog")

    @classmethod
    def for_profile(cls, kind: str, profile: RankProfile) -> "SamplingScheme":
        if kind == IRRELEVANT_ONLY:
            if profile.effective_N is None:
                raise ConfigurationError(
                    "the 'actual' scheme needs a rank file with an effective_N column"
                )
            return cls(kind, profile.effective_N)
        return cls(kind)

    def check(self, profile: RankProfile, catalog: CatalogSpec):
        if self.kind != IRRELEVANT_ONLY:
            return
        eff = self.per_user_catalog
        if eff.shape != profile.ranks.shape:
            raise ConfigurationError("per-user catalog does not match the number of users")
        if np.any(eff < catalog.n):
            raise ConfigurationError(f"every effective_N must be >= n={catalog.n}")
        if np.any(profile.ranks > eff):
            raise ConfigurationError("a rank exceeds that user's effective_N")


@dataclass(frozen=True)
class MonteCarloConfig:
    seed: int = 0
    runs: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise DomainError(f"runs must be >= 1, got {self.runs}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned value")


def hr_curve(profile: RankProfile) -> HitRatioCurve:
    """Global HR@K for K = 1..N."""
    counts = np.bincount(profile.ranks - 1, minlength=profile.N)
    values = np.cumsum(counts) / profile.M
    values[-1] = 1.0
    return HitRatioCurve(values)


def _exact_kind(scheme: SamplingScheme) -> str:
    if scheme.kind == IRRELEVANT_ONLY:
        raise ConfigurationError(
            "exact expectations are not available for the 'actual' scheme; "
            "use shr_curve_monte_carlo"
        )
    return scheme.kind


def _weighted_tails(hist: RankHistogram, scheme: SamplingScheme, catalog: CatalogSpec):
    kind = _exact_kind(scheme)
    if hist.N != catalog.N:
        raise ConfigurationError(f"histogram covers N={hist.N}, catalog has N={catalog.N}")
    ranks, weights = hist.support()
    mean = np.zeros(catalog.n)
    second = np.zeros(catalog.n)
    for start in range(0, ranks.size, _KERNEL_CHUNK):
        sl = slice(start, start + _KERNEL_CHUNK)
        tails = tail_matrix(ranks[sl], catalog, kind)
        w = weights[sl]
        mean += w @ tails
        second += w @ (tails * (1.0 - tails))
    return mean, second


def expected_shr_curve(hist: RankHistogram, scheme: SamplingScheme,
                       catalog: CatalogSpec) -> HitRatioCurve:
    """E[SHR@k] = sum_R W_R Pr(r <= k | R) for k = 1..n."""
    mean, _ = _weighted_tails(hist, scheme, catalog)
    np.clip(mean, 0.0, 1.0, out=mean)
    mean[-1] = 1.0
    return HitRatioCurve(np.maximum.accumulate(mean))


def shr_variance_curve(hist: RankHistogram, scheme: SamplingScheme,
                       catalog: CatalogSpec, M: int) -> np.ndarray:
    """Var[SHR@k] = (1/M) sum_R W_R p_R (1 - p_R) for k = 1..n."""
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    _, second = _weighted_tails(hist, scheme, catalog)
    second = np.maximum(second, 0.0) / M
    second[-1] = 0.0
    return second


def user_stream(seed: int, user: int, run: int) -> np.random.Generator:
    """Independent generator for one (user, run) pair."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run, user))))


def block_stream(seed: int, block: int, run: int) -> np.random.Generator:
    """Generator for a fixed block of ``BLOCK_SIZE`` consecutive users."""
    ss = np.random.SeedSequence(seed, spawn_key=(run, 1 << 32, block))
    return np.random.Generator(np.random.PCG64(ss))


def _draw(rng, ranks, N_u, n, kind):
    if kind == WITH_REPLACEMENT:
        p = (ranks - 1) / (N_u - 1)
        return 1 + rng.binomial(n - 1, p)
    return 1 + rng.hypergeometric(ranks - 1, N_u - ranks, n - 1)


def sample_rank(R: int, scheme: SamplingScheme, catalog: CatalogSpec,
                rng: np.random.Generator, user: int = 0) -> int:
    """Draw one sampled rank for a user at global rank ``R``.

    For ``actual`` the rank is read as the position among the user's
    ``per_user_catalog[user]`` candidates.
    """
    N = catalog.N
    if scheme.kind == IRRELEVANT_ONLY:
        N = int(scheme.per_user_catalog[user])
        if N < catalog.n:
            raise ConfigurationError(f"effective_N={N} is below n={catalog.n}")
    if not 1 <= R <= N:
        raise DomainError(f"rank {R} outside [1, {N}]")
    kind = WITH_REPLACEMENT if scheme.kind == WITH_REPLACEMENT else WITHOUT_REPLACEMENT
    return int(_draw(rng, np.int64(R), np.int64(N), catalog.n, kind))


def sample_profile(profile: RankProfile, scheme: SamplingScheme, catalog: CatalogSpec,
                   seed: int, run: int = 0, workers: int = 1) -> SampledRankRecord:
    """Sampled ranks of every user for one Monte Carlo run."""
    if profile.N != catalog.N:
        raise ConfigurationError(f"profile has N={profile.N}, catalog has N={catalog.N}")
    scheme.check(profile, catalog)
    kind = WITH_REPLACEMENT if scheme.kind == WITH_REPLACEMENT else WITHOUT_REPLACEMENT
    if scheme.kind == IRRELEVANT_ONLY:
        N_u = scheme.per_user_catalog
    else:
        N_u = np.full(profile.M, catalog.N, dtype=np.int64)
    ranks = profile.ranks
    n_blocks = -(-profile.M // BLOCK_SIZE)

    def block(b):
        sl = slice(b * BLOCK_SIZE, (b + 1) * BLOCK_SIZE)
        return _draw(block_stream(seed, b, run), ranks[sl], N_u[sl], catalog.n, kind)

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    return SampledRankRecord(np.concatenate(parts), catalog.n)


def sampled_curve(sampled: SampledRankRecord) -> np.ndarray:
    """SHR@k for k = 1..n from one set of sampled ranks."""
    counts = np.bincount(sampled.sampled_ranks - 1, minlength=sampled.n)
    return np.cumsum(counts) / sampled.M


def shr_curve_monte_carlo(profile: RankProfile, scheme: SamplingScheme, catalog: CatalogSpec,
                          cfg: Optional[MonteCarloConfig] = None) -> HitRatioCurve:
    """Mean sampled hit-ratio over ``cfg.runs`` seeded runs.

    With more than one run the curve carries the standard error of the mean.
    """
    cfg = cfg or MonteCarloConfig()
    curves = np.empty((cfg.runs, catalog.n))
    for run in range(cfg.runs):
        sampled = sample_profile(profile, scheme, catalog, cfg.seed, run, cfg.workers)
        curves[run] = sampled_curve(sampled)
    mean = curves.mean(axis=0)
    mean[-1] = 1.0
    stderr = None
    if cfg.runs > 1:
        stderr = curves.std(axis=0, ddof=1) / np.sqrt(cfg.runs)
    return HitRatioCurve(np.clip(mean, 0.0, 1.0), stderr)


def ranks_from_uniform(u, a: float, N: int) -> np.ndarray:
    """Map uniforms in [0, 1) to ranks through the Beta(a, 1) inverse CDF."""
    x = np.power(np.asarray(u, dtype=np.float64), 1.0 / a)
    ranks = 1 + np.floor(x * (N - 1) + 0.5)
    return np.clip(ranks, 1, N).astype(np.int64)


def simulate_profile(a: float, M: int, N: int, seed: int) -> RankProfile:
    """Synthetic profile whose normalised ranks follow Beta(a, 1).

    Profiles drawn with the same seed are coupled: a smaller ``a`` gives
    every user a rank no worse than a larger one does.
    """
    if not a > 0:
        raise DomainError(f"Beta shape a must be positive, got {a}")
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    u = np.random.default_rng(seed).random(M)
    ranks = ranks_from_uniform(u, a, N)
    return RankProfile(ranks, N, user_ids=[f"u{i + 1}" for i in range(M)])
