"""Domain types and rank-file ingestion.

Ranks are 1-based everywhere: a rank of 1 means the relevant item was placed
first in the user's list.  Nothing 0-based ever leaves this package's public
functions.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ParseError

RANK_HEADER = ("user_id", "rank")
EXTENDED_HEADER = ("user_id", "rank", "effective_N")
SAMPLED_HEADER = ("user_id", "sampled_rank")


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CatalogSpec:
    """Catalog of ``N`` items evaluated against samples of ``n`` items.

    ``n`` counts the target item, so ``n - 1`` items are drawn per user.
    """

    N: int
    n: int

    def __post_init__(self):
        if int(self.N) != self.N or int(self.n) != self.n:
            raise DomainError(f"N and n must be integers, got N={self.N!r}, n={self.n!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "n", int(self.n))
        if self.N < 2:
            raise DomainError(f"N must be >= 2, got {self.N}")
        if not 2 <= self.n <= self.N:
            raise DomainError(f"n must satisfy 2 <= n <= N={self.N}, got {self.n}")


@dataclass(frozen=True, eq=False)
class RankProfile:
    """Per-user global ranks of the single relevant item.

    ``N`` is the catalog size; ``effective_N`` optionally carries a per-user
    candidate-set size (only items the user never interacted with, plus the
    target).  User ids are opaque and kept only for round-tripping.
    """

    ranks: np.ndarray
    N: int
    user_ids: Optional[tuple] = None
    effective_N: Optional[np.ndarray] = None

    def __post_init__(self):
        ranks = np.asarray(self.ranks)
        if ranks.ndim != 1 or ranks.size == 0:
            raise DomainError("a rank profile needs at least one user")
        if not np.issubdtype(ranks.dtype, np.integer):
            if not np.all(np.equal(np.mod(ranks, 1), 0)):
                raise DomainError("ranks must be integers")
        ranks = _frozen(ranks, np.int64)
        N = int(self.N)
        if N < 2:
            raise DomainError(f"N must be >= 2, got {N}")
        lo, hi = int(ranks.min()), int(ranks.max())
        if lo < 1:
            raise DomainError(f"rank {lo} is below 1")
        if hi > N:
            raise DomainError(f"rank {hi} exceeds catalog size N={N}")
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "N", N)
        if self.user_ids is not None:
            ids = tuple(str(u) for u in self.user_ids)
            if len(ids) != ranks.size:
                raise ConfigurationError("user_ids and ranks differ in length")
            object.__setattr__(self, "user_ids", ids)
        if self.effective_N is not None:
            eff = _frozen(self.effective_N, np.int64)
            if eff.shape != ranks.shape:
                raise ConfigurationError("effective_N and ranks differ in length")
            if np.any(eff > N) or np.any(eff < ranks):
                raise DomainError("effective_N must satisfy rank <= effective_N <= N")
            object.__setattr__(self, "effective_N", eff)

    @property
    def M(self) -> int:
        return int(self.ranks.size)

    def __len__(self):
        return self.M


@dataclass(frozen=True, eq=False)
class RankHistogram:
    """Empirical rank mass: ``mass[R - 1]`` is the share of users at rank R."""

    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass, np.float64)
        if mass.ndim != 1 or mass.size < 2:
            raise DomainError("histogram must be a vector over ranks 1..N")
        if np.any(mass < 0) or np.any(mass > 1):
            raise DomainError("rank mass must lie in [0, 1]")
        if abs(mass.sum() - 1.0) > 1e-12:
            raise DomainError(f"rank mass sums to {mass.sum()!r}, not 1")
        object.__setattr__(self, "mass", mass)

    @property
    def N(self) -> int:
        return int(self.mass.size)

    def support(self):
        """Ranks (1-based) carrying positive mass, and that mass."""
        idx = np.flatnonzero(self.mass)
        return idx + 1, self.mass[idx]


@dataclass(frozen=True, eq=False)
class SampledRankRecord:
    """Per-user ranks of the target inside its sample of ``n`` items."""

    sampled_ranks: np.ndarray
    n: int

    def __post_init__(self):
        r = _frozen(self.sampled_ranks, np.int64)
        if r.ndim != 1 or r.size == 0:
            raise DomainError("need at least one sampled rank")
        if r.min() < 1 or r.max() > self.n:
            raise DomainError(f"sampled ranks must lie in [1, {self.n}]")
        object.__setattr__(self, "sampled_ranks", r)

    @property
    def M(self) -> int:
        return int(self.sampled_ranks.size)

    def hit(self, k: int) -> np.ndarray:
        """Indicator of ``r <= k`` for every user."""
        return self.sampled_ranks <= k


@dataclass(frozen=True, eq=False)
class HitRatioCurve:
    """Hit-ratio indexed by cutoff 1..K_max; ``values[K - 1]`` is HR@K.

    ``stderr`` is optional and carries a per-cutoff standard error.
    """

    values: np.ndarray
    stderr: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        v = _frozen(self.values, np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("a curve needs at least one cutoff")
        if np.any(v < 0) or np.any(v > 1):
            raise DomainError("curve values must lie in [0, 1]")
        if np.any(np.diff(v) < -1e-12):
            raise DomainError("curve must be non-decreasing in the cutoff")
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            se = _frozen(self.stderr, np.float64)
            if se.shape != v.shape:
                raise DomainError("stderr must match the curve length")
            object.__setattr__(self, "stderr", se)

    @property
    def K_max(self) -> int:
        return int(self.values.size)

    def at(self, K: int) -> float:
        """HR@K with 1-based K."""
        if not 1 <= K <= self.K_max:
            raise DomainError(f"cutoff {K} outside [1, {self.K_max}]")
        return float(self.values[K - 1])


def histogram(profile: RankProfile) -> RankHistogram:
    counts = np.bincount(profile.ranks - 1, minlength=profile.N).astype(np.float64)
    mass = counts / profile.M
    # renormalise so the sum is 1 to within a few ulps
    return RankHistogram(mass / mass.sum())


def read_sidecar_N(path) -> Optional[int]:
    """Catalog size from a ``{"N": <int>}`` JSON file next to ``path``."""
    sidecar = Path(path).with_suffix(".json")
    if not sidecar.exists():
        return None
    with open(sidecar, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return int(data["N"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"sidecar {sidecar} lacks an integer 'N'") from exc


def _data_lines(fh):
    """Yield ``(line_number, fields)`` skipping blank and ``#`` comment lines."""
    for number, line in enumerate(fh, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield number, [c.strip() for c in next(csv.reader([line]))]


def _read_rows(path, headers: Sequence[tuple]):
    with open(path, encoding="utf-8", newline="") as fh:
        lines = _data_lines(fh)
        try:
            header_line, header = next(lines)
        except StopIteration:
            raise DomainError(f"{path}: empty rank file") from None
        header = tuple(header)
        if header not in headers:
            expected = " or ".join(",".join(h) for h in headers)
            raise ParseError(f"expected header {expected}, got {','.join(header)}",
                             line=header_line)
        rows = []
        for number, row in lines:
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=number)
            rows.append((number, row))
    if not rows:
        raise DomainError(f"{path}: rank file has no users")
    return header, rows


def _parse_int(text, line, what):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not an integer", line=line) from None


def load_rank_profile(path, N: Optional[int] = None) -> RankProfile:
    """Read a ``user_id,rank[,effective_N]`` CSV into a :class:`RankProfile`.

    ``N`` falls back to the JSON sidecar when omitted.  User order is kept;
    duplicate user ids are rejected.
    """
    if N is None:
        N = read_sidecar_N(path)
        if N is None:
            raise ConfigurationError(f"catalog size N not given and no sidecar for {path}")
    header, rows = _read_rows(path, (RANK_HEADER, EXTENDED_HEADER))
    extended = header == EXTENDED_HEADER
    seen = set()
    ids, ranks, eff = [], [], []
    for line, row in rows:
        uid = row[0]
        if uid in seen:
            raise ParseError(f"duplicate user_id {uid!r}", line=line)
        seen.add(uid)
        rank = _parse_int(row[1], line, "rank")
        if rank < 1 or rank > N:
            raise DomainError(f"line {line}: rank {rank} outside [1, {N}]")
        ids.append(uid)
        ranks.append(rank)
        if extended:
            n_u = _parse_int(row[2], line, "effective_N")
            if n_u < rank or n_u > N:
                raise DomainError(f"line {line}: effective_N {n_u} outside [{rank}, {N}]")
            eff.append(n_u)
    return RankProfile(ranks, N, user_ids=ids, effective_N=eff if extended else None)


def load_sampled_ranks(path, n: int) -> SampledRankRecord:
    """Read a ``user_id,sampled_rank`` CSV."""
    _, rows = _read_rows(path, (SAMPLED_HEADER,))
    ranks = []
    for line, row in rows:
        r = _parse_int(row[1], line, "sampled_rank")
        if r < 1 or r > n:
            raise DomainError(f"line {line}: sampled rank {r} outside [1, {n}]")
        ranks.append(r)
    return SampledRankRecord(ranks, n)
