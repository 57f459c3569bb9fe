"""Mapping functions ``k -> f(k)`` relating sampled and global cutoffs.

A mapping table lets a sampled hit-ratio ``SHR@k`` be read as an estimate
of the global ``HR@f(k)``.  Four families are provided:

``linear``   ``(k - 1)/(n - 1) * (N - 1) + 1``, the expected-rank baseline;
``bound``    the midpoint of the Hoeffding lower/upper locations, floored;
``uniform``  ``k (N - 1)/n + 1``, the Beta(1, 1) special case;
``beta``     the Beta(a, 1) recurrence, optionally with ``a`` fitted from
             sampled ranks by a fixed-point maximum-likelihood iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import CatalogSpec, HitRatioCurve, SampledRankRecord
from .dist import log_beta, log_comb
from .errors import ComputationError, ConfigurationError, DomainError, FitError

LINEAR = "linear"
BOUND = "bound"
UNIFORM = "uniform"
BETA_FIXED = "beta"
BETA_FITTED = "beta@P"

A_MIN = 1e-4
A_MAX = 100.0
LOG_EPS = 1e-12
# floor() slack so that f(n) = N - 1e-13 still indexes rank N
INDEX_SLACK = 1e-9


@dataclass(frozen=True)
class FitConfig:
    init_a: float = 0.5
    tol: float = 1e-6
    max_iter: int = 100

    def __post_init__(self):
        if not self.init_a > 0:
            raise DomainError(f"init_a must be positive, got {self.init_a}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class MappingSpec:
    """Choice of mapping family.

    ``a`` is required for ``beta``; ``fit`` configures ``beta@P``.
    """

    kind: str
    a: Optional[float] = None
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if self.kind not in (LINEAR, BOUND, UNIFORM, BETA_FIXED, BETA_FITTED):
            raise DomainError(f"unknown mapping family {self.kind!r}")
        if self.kind == BETA_FIXED and self.a is None:
            raise DomainError("beta mapping needs a shape parameter a")
        if self.a is not None and not self.a > 0:
            raise DomainError(f"shape parameter a must be positive, got {self.a}")

    @classmethod
    def parse(cls, label: str, fit: Optional[FitConfig] = None) -> "MappingSpec":
        """Parse ``linear``, ``bound``, ``uniform``, ``beta@<a>`` or ``beta@P``."""
        text = label.strip()
        low = text.lower()
        fit = fit or FitConfig()
        if low in (LINEAR, BOUND, UNIFORM):
            return cls(low, fit=fit)
        if low == "beta@p":
            return cls(BETA_FITTED, fit=fit)
        if low.startswith("beta@"):
            try:
                a = float(text[5:])
            except ValueError:
                raise DomainError(f"bad shape parameter in {label!r}") from None
            return cls(BETA_FIXED, a=a, fit=fit)
        raise DomainError(f"unknown mapping label {label!r}")

    @property
    def label(self) -> str:
        if self.kind == BETA_FIXED:
            return f"beta@{self.a:g}"
        return self.kind


@dataclass(frozen=True, eq=False)
class MappingTable:
    """Mapped global locations ``f[k - 1] = f(k)`` for k = 1..n."""

    f: np.ndarray
    catalog: CatalogSpec
    label: str = ""

    def __post_init__(self):
        f = np.array(self.f, dtype=np.float64)
        if f.shape != (self.catalog.n,):
            raise DomainError(f"mapping table needs {self.catalog.n} entries, got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ComputationError("mapping table contains non-finite values")
        if np.any(np.diff(f) < 0):
            raise DomainError("mapping table must be non-decreasing in k")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    def __call__(self, k: int) -> float:
        return float(self.f[k - 1])

    def indices(self) -> np.ndarray:
        """Global cutoffs ``clamp(floor(f(k)), 1, N)`` as 1-based ints."""
        idx = np.floor(self.f + INDEX_SLACK).astype(np.int64)
        return np.clip(idx, 1, self.catalog.N)


def linear_map(catalog: CatalogSpec) -> MappingTable:
    N, n = catalog.N, catalog.n
    k = np.arange(1, n + 1, dtype=np.float64)
    return MappingTable((k - 1) / (n - 1) * (N - 1) + 1, catalog, LINEAR)


def bound_map(catalog: CatalogSpec) -> MappingTable:
    N, n = catalog.N, catalog.n
    k = np.arange(1, n + 1, dtype=np.int64)
    # floor((k - 1/2)(N - 1)/(n - 1) + 1/2) in exact integer arithmetic
    f = ((2 * k - 1) * (N - 1) + (n - 1)) // (2 * (n - 1))
    return MappingTable(np.clip(f, 1, N).astype(np.float64), catalog, BOUND)


def uniform_map(catalog: CatalogSpec) -> MappingTable:
    N, n = catalog.N, catalog.n
    k = np.arange(1, n + 1, dtype=np.float64)
    return MappingTable(k * (N - 1) / n + 1, catalog, UNIFORM)


def _check_shape(a):
    if not (isinstance(a, (int, float, np.floating)) and a > 0 and math.isfinite(a)):
        raise DomainError(f"shape parameter a must be a positive real, got {a!r}")


def beta_first(a: float, catalog: CatalogSpec) -> float:
    """f(1; a) = (N - 1) [a B(a, n)]^(1/a) + 1."""
    _check_shape(a)
    N, n = catalog.N, catalog.n
    log_inner = math.log(a) + log_beta(a, n)
    return (N - 1) * math.exp(log_inner / a) + 1


def _kahan_cumsum(values):
    out = np.empty_like(values)
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values):
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


def beta_increments(a: float, catalog: CatalogSpec) -> np.ndarray:
    """Normalised increments ``a C(n-1, k) B(a + k, n - k)`` for k = 0..n-1.

    Multiplying by ``(N - 1)^a`` gives ``(f(k+1) - 1)^a - (f(k) - 1)^a``
    with ``f(0) = 1``; the increments sum to one.
    """
    _check_shape(a)
    n = catalog.n
    k = np.arange(n, dtype=np.float64)
    log_b = np.array([log_beta(a + kk, n - kk) for kk in range(n)])
    return np.exp(math.log(a) + log_comb(n - 1, k) + log_b)


def beta_map_table(a: float, catalog: CatalogSpec) -> MappingTable:
    """Beta(a, 1) mapping ``f(k; a)`` for k = 1..n.

    The recurrence is accumulated on ``S_k = ((f(k) - 1)/(N - 1))^a`` so no
    power of ``N - 1`` is ever formed; ``S_n`` equals one up to rounding.
    """
    _check_shape(a)
    N = catalog.N
    cum = _kahan_cumsum(beta_increments(a, catalog))
    with np.errstate(over="raise", divide="raise", invalid="raise"):
        try:
            f = (N - 1) * np.exp(np.log(cum) / a) + 1
        except FloatingPointError as exc:
            bad = int(np.flatnonzero(~np.isfinite(cum) | (cum <= 0))[:1].sum()) + 1
            raise ComputationError(f"beta mapping overflowed at k={bad} (a={a})") from exc
    if not np.all(np.isfinite(f)):
        bad = int(np.flatnonzero(~np.isfinite(f))[0]) + 1
        raise ComputationError(f"beta mapping is non-finite at k={bad} (a={a})")
    return MappingTable(f, catalog, f"beta@{a:g}")


def build_table(spec: MappingSpec, catalog: CatalogSpec,
                sampled: Optional[SampledRankRecord] = None) -> MappingTable:
    """Evaluate a :class:`MappingSpec`; ``beta@P`` needs sampled ranks."""
    if spec.kind == LINEAR:
        return linear_map(catalog)
    if spec.kind == BOUND:
        return bound_map(catalog)
    if spec.kind == UNIFORM:
        return uniform_map(catalog)
    if spec.kind == BETA_FIXED:
        return beta_map_table(spec.a, catalog)
    if sampled is None:
        raise ConfigurationError("beta@P needs sampled ranks to fit the shape parameter")
    trace = fit_beta_param(sampled, catalog, spec.fit)
    table = beta_map_table(trace.final_a, catalog)
    return MappingTable(table.f, catalog, BETA_FITTED)


@dataclass(frozen=True)
class FitTrace:
    iterates: tuple
    converged: bool
    final_a: float

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    def to_dict(self):
        return {
            "iterates": list(self.iterates),
            "converged": self.converged,
            "final_a": self.final_a,
            "iterations": self.iterations,
        }


def fit_step(a: float, sampled: SampledRankRecord, catalog: CatalogSpec) -> float:
    """One update ``a <- -M / sum_u ln((f(r_u; a) - 1)/(N - 1))``."""
    table = beta_map_table(a, catalog)
    x = (table.f - 1) / (catalog.N - 1)
    log_x = np.log(np.maximum(x, LOG_EPS))
    counts = np.bincount(sampled.sampled_ranks - 1, minlength=catalog.n)
    total = math.fsum(counts * log_x)
    if total >= 0:
        # every user mapped onto rank N: the likelihood has no interior optimum
        return math.inf
    return -sampled.M / total


def fit_beta_param(sampled: SampledRankRecord, catalog: CatalogSpec,
                   config: Optional[FitConfig] = None) -> FitTrace:
    """Fit the Beta(a, 1) shape from sampled ranks by fixed-point iteration.

    Stops once successive iterates differ by less than ``config.tol``.
    Raises :class:`FitError` if an iterate leaves ``(0, 100]``.
    """
    config = config or FitConfig()
    if sampled.n != catalog.n:
        raise ConfigurationError(f"sampled ranks use n={sampled.n}, catalog has n={catalog.n}")
    a = float(config.init_a)
    iterates = [a]
    for _ in range(config.max_iter):
        nxt = fit_step(a, sampled, catalog)
        if not math.isfinite(nxt) or nxt > A_MAX:
            trace = FitTrace(tuple(iterates + [nxt]), False, a)
            raise FitError(f"shape iteration diverged (a={nxt!r})", trace=trace)
        nxt = max(nxt, A_MIN)
        iterates.append(nxt)
        if abs(nxt - a) < config.tol:
            return FitTrace(tuple(iterates), True, nxt)
        a = nxt
    return FitTrace(tuple(iterates), False, a)


def mapped_hr_curve(global_curve: HitRatioCurve, table: MappingTable) -> np.ndarray:
    """``HR@f(k)`` for every k = 1..n."""
    if global_curve.K_max != table.catalog.N:
        raise ConfigurationError(
            f"global curve has K_max={global_curve.K_max}, mapping expects N={table.catalog.N}"
        )
    return global_curve.values[table.indices() - 1]


def evaluate_mapped_hr(global_curve: HitRatioCurve, table: MappingTable, k: int) -> float:
    if not 1 <= k <= table.catalog.n:
        raise DomainError(f"cutoff k={k} outside [1, {table.catalog.n}]")
    return float(mapped_hr_curve(global_curve, table)[k - 1])
