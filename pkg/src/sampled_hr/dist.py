"""Special functions and per-user tail probabilities of the sampled rank.

For a user whose relevant item sits at global rank ``R`` the sampled rank is
``r = 1 + X`` where ``X`` counts sampled items ranked ahead of the target:

* with replacement, ``X ~ Binomial(n - 1, (R - 1)/(N - 1))``;
* without replacement, ``X ~ Hypergeometric(N - 1, R - 1, n - 1)``.

Both tail probabilities ``Pr(r <= k)`` are summed in log space.  Following
the reference CDF, the tail is defined as exactly 1 whenever ``R < k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .core import CatalogSpec
from .errors import DomainError

WITH_REPLACEMENT = "binom"
WITHOUT_REPLACEMENT = "hyper"


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError(f"beta function needs positive arguments, got ({a!r}, {b!r})")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def beta_fn(a: float, b: float) -> float:
    """Euler Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)."""
    return math.exp(log_beta(a, b))


def log_comb(n, k):
    """Log binomial coefficient via log-gamma; works on scalars and arrays."""
    return gammaln(np.add(n, 1)) - gammaln(np.add(k, 1)) - gammaln(np.subtract(n, k) + 1)


# Saddle-point PMF (Loader 2000).  Differencing log-gammas of size ~1e6
# loses ~1e-9 absolutely, so probabilities are assembled from the Stirling
# remainder and the deviance term instead.

_LN_2PI = math.log(2.0 * math.pi)
_STIRLERR_SMALL = np.array(
    [0.0] + [math.lgamma(m + 1.0) - (m + 0.5) * math.log(m) + m - 0.5 * _LN_2PI
             for m in range(1, 16)]
)


def stirlerr(m):
    """``ln(m!) - ln(sqrt(2 pi m) (m/e)^m)`` for non-negative integers ``m``."""
    m = np.asarray(m, dtype=np.float64)
    out = np.empty_like(m)
    small = m <= 15
    out[small] = _STIRLERR_SMALL[m[small].astype(np.int64)]
    big = m[~small]
    nn = big * big
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    out[~small] = np.select(
        [big > 500, big > 80, big > 35],
        [(s0 - s1 / nn) / big,
         (s0 - (s1 - s2 / nn) / nn) / big,
         (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / big],
        (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / big,
    )
    return out


def bd0(x, mean):
    """Deviance ``x ln(x/mean) + mean - x`` without cancellation near x = mean."""
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    x, mean = np.broadcast_arrays(x, mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = x * np.log(x / mean) + mean - x
        v = (x - mean) / (x + mean)
    near = np.abs(x - mean) < 0.1 * (x + mean)
    s = (x - mean) * v
    ej = 2.0 * x * v
    v2 = v * v
    for j in range(1, 40):
        ej = ej * v2
        s = s + ej / (2 * j + 1)
    return np.where(near, s, direct)


def log_binom_pmf_raw(x, m, p, q):
    """Log of ``C(m, x) p^x q^(m - x)``; ``q = 1 - p`` is passed in exactly.

    All arguments broadcast; ``x`` and ``m`` are integer-valued.
    """
    x, m, p, q = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (x, m, p, q)))
    out = np.full(x.shape, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        inside = (x >= 0) & (x <= m)
        out[inside & (m == 0)] = 0.0
        inside &= m > 0
        # degenerate success probabilities
        p0 = inside & (p == 0)
        out[p0 & (x == 0)] = 0.0
        q0 = inside & (q == 0) & ~p0
        out[q0 & (x == m)] = 0.0
        live = inside & (p > 0) & (q > 0)
        lo = live & (x == 0)
        out[lo] = np.where(p[lo] < 0.1, -bd0(m[lo], m[lo] * q[lo]) - m[lo] * p[lo],
                           m[lo] * np.log(q[lo]))
        hi = live & (x == m)
        out[hi] = np.where(q[hi] < 0.1, -bd0(m[hi], m[hi] * p[hi]) - m[hi] * q[hi],
                           m[hi] * np.log(p[hi]))
        mid = live & (x > 0) & (x < m)
        xm, mm, pm, qm = x[mid], m[mid], p[mid], q[mid]
        lc = (stirlerr(mm) - stirlerr(xm) - stirlerr(mm - xm)
              - bd0(xm, mm * pm) - bd0(mm - xm, mm * qm))
        lf = _LN_2PI + np.log(xm) + np.log1p(-xm / mm)
        out[mid] = lc - 0.5 * lf
    return out


def binom_log_pmf(ranks, N: int, n: int) -> np.ndarray:
    """``ln Pr(X = l)``, l = 0..n-1, for ``X ~ Binomial(n-1, (R-1)/(N-1))``."""
    ranks = np.asarray(ranks, dtype=np.float64)[:, None]
    l = np.arange(n, dtype=np.float64)[None, :]
    p = (ranks - 1) / (N - 1)
    q = (N - ranks) / (N - 1)
    return log_binom_pmf_raw(l, n - 1, p, q)


def hyper_log_pmf(ranks, N: int, n: int, pool=None) -> np.ndarray:
    """``ln Pr(X = l)``, l = 0..n-1, for ``n - 1`` draws without replacement.

    ``pool`` overrides the number of non-target items per rank (default
    ``N - 1``); ``R - 1`` of them are ranked ahead of the target.
    """
    ranks = np.asarray(ranks, dtype=np.float64)[:, None]
    pool = np.float64(N - 1) if pool is None else np.asarray(pool, dtype=np.float64)[:, None]
    good = ranks - 1
    bad = pool - good
    draws = np.float64(n - 1)
    l = np.arange(n, dtype=np.float64)[None, :]
    p = draws / pool
    q = (pool - draws) / pool
    return (log_binom_pmf_raw(l, good, p, q)
            + log_binom_pmf_raw(draws - l, bad, p, q)
            - log_binom_pmf_raw(draws, pool, p, q))


def _log_pmf(kind, ranks, N, n):
    if kind == WITH_REPLACEMENT:
        return binom_log_pmf(ranks, N, n)
    if kind == WITHOUT_REPLACEMENT:
        return hyper_log_pmf(ranks, N, n)
    raise DomainError(f"unknown sampling kind {kind!r}")


def _check_tail_args(k, R, catalog):
    if not 1 <= k <= catalog.n:
        raise DomainError(f"cutoff k={k} outside [1, {catalog.n}]")
    if not 1 <= R <= catalog.N:
        raise DomainError(f"rank R={R} outside [1, {catalog.N}]")


@lru_cache(maxsize=4096)
def _pmf_row(kind, R, N, n):
    # one row serves every cutoff k, so scalar sweeps over k stay cheap
    return tuple(np.exp(_log_pmf(kind, [R], N, n)[0]).tolist())


def _scalar_tail(kind, k, R, catalog):
    _check_tail_args(k, R, catalog)
    if R < k or k == catalog.n:
        return 1.0
    pmf = _pmf_row(kind, int(R), catalog.N, catalog.n)
    lower = math.fsum(pmf[:k])
    if lower <= 0.5:
        return lower
    # near 1 the complement carries more significant digits
    return max(0.0, 1.0 - math.fsum(pmf[k:]))


def binom_tail_prob(k: int, R: int, catalog: CatalogSpec) -> float:
    """``Pr(r <= k)`` when the ``n - 1`` items are drawn with replacement."""
    return _scalar_tail(WITH_REPLACEMENT, k, R, catalog)


def hyper_tail_prob(k: int, R: int, catalog: CatalogSpec) -> float:
    """``Pr(r <= k)`` when the ``n - 1`` items are drawn without replacement."""
    return _scalar_tail(WITHOUT_REPLACEMENT, k, R, catalog)


def tail_prob(kind: str, k: int, R: int, catalog: CatalogSpec) -> float:
    return _scalar_tail(kind, k, R, catalog)


def tails_from_log_pmf(logpmf: np.ndarray) -> np.ndarray:
    """Row-wise ``Pr(X <= k - 1)`` for k = 1..n from a log-PMF matrix."""
    pmf = np.exp(logpmf)
    lower = np.cumsum(pmf, axis=1)
    # upper[:, j] = sum of pmf[:, j+1:]
    upper = np.zeros_like(pmf)
    upper[:, :-1] = np.cumsum(pmf[:, :0:-1], axis=1)[:, ::-1]
    tails = np.where(lower <= 0.5, lower, 1.0 - upper)
    np.clip(tails, 0.0, 1.0, out=tails)
    tails[:, -1] = 1.0
    return tails


def tail_matrix(ranks, catalog: CatalogSpec, kind: str) -> np.ndarray:
    """Tail probabilities for many ranks at every cutoff at once.

    Returns an array of shape ``(len(ranks), n)`` whose ``[i, k - 1]`` entry
    is ``Pr(r <= k)`` for a user at global rank ``ranks[i]``.
    """
    ranks = np.asarray(ranks, dtype=np.int64).reshape(-1)
    N, n = catalog.N, catalog.n
    if ranks.size and (ranks.min() < 1 or ranks.max() > N):
        raise DomainError(f"ranks must lie in [1, {N}]")
    tails = tails_from_log_pmf(_log_pmf(kind, ranks, N, n))
    k = np.arange(1, n + 1)
    tails[ranks[:, None] < k[None, :]] = 1.0
    return tails


def pmf_vector(kind: str, R: int, catalog: CatalogSpec) -> np.ndarray:
    """Probability of each sampled rank 1..n for a user at rank ``R``.

    This is the plain distribution of ``1 + X`` without the ``R < k``
    override, i.e. what :func:`sampled_hr.metrics.sample_rank` draws from.
    """
    return np.exp(_log_pmf(kind, [R], catalog.N, catalog.n)[0])


@dataclass(frozen=True)
class ConcentrationBound:
    """Two-sided Hoeffding bound on ``Pr(|SHR@k - E[SHR@k]| >= t)``."""

    M: int
    t: float
    bound: float


def hoeffding_population_bound(M: int, t: float) -> ConcentrationBound:
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    if t < 0:
        raise DomainError(f"threshold t must be non-negative, got {t}")
    return ConcentrationBound(M=M, t=t, bound=2.0 * math.exp(-2.0 * M * t * t))
