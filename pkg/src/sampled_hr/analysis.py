"""Comparisons between sampled and global evaluation.

Includes curve dominance, a checker for the order-preservation property of
expected sampled curves, mapping error reports and winner tables.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import CatalogSpec, HitRatioCurve, RankProfile, histogram
from .errors import ConfigurationError
from .mapping import MappingTable, mapped_hr_curve
from .metrics import SamplingScheme, expected_shr_curve, hr_curve

TIE_TOL = 1e-12
THEOREM_TOL = 1e-12


class Dominance(enum.Enum):
    A_DOMINATES = "A-dominates"
    B_DOMINATES = "B-dominates"
    TIE = "tie"
    INCOMPARABLE = "incomparable"


def dominance(curve_a: HitRatioCurve, curve_b: HitRatioCurve) -> Dominance:
    """Pointwise order of two curves of equal length; equal curves are a tie."""
    if curve_a.K_max != curve_b.K_max:
        raise ConfigurationError(
            f"curves differ in length ({curve_a.K_max} vs {curve_b.K_max})"
        )
    a_ge = bool(np.all(curve_a.values >= curve_b.values))
    b_ge = bool(np.all(curve_b.values >= curve_a.values))
    if a_ge and b_ge:
        return Dominance.TIE
    if a_ge:
        return Dominance.A_DOMINATES
    if b_ge:
        return Dominance.B_DOMINATES
    return Dominance.INCOMPARABLE


@dataclass
class TheoremReport:
    hypothesis_met: bool
    violations: list = field(default_factory=list)
    expected_a: Optional[np.ndarray] = None
    expected_b: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.hypothesis_met and not self.violations


def sampling_theorem_check(profile_a: RankProfile, profile_b: RankProfile,
                           scheme: SamplingScheme, catalog: CatalogSpec) -> TheoremReport:
    """Check that E[SHR_a@k] >= E[SHR_b@k] when HR_a dominates HR_b.

    Violations are ``(k, E_a, E_b)`` triples.  If the global curves are not
    ordered, nothing is asserted and ``hypothesis_met`` is False.
    """
    order = dominance(hr_curve(profile_a), hr_curve(profile_b))
    if order not in (Dominance.A_DOMINATES, Dominance.TIE):
        return TheoremReport(hypothesis_met=False)
    ea = expected_shr_curve(histogram(profile_a), scheme, catalog).values
    eb = expected_shr_curve(histogram(profile_b), scheme, catalog).values
    bad = np.flatnonzero(ea < eb - THEOREM_TOL)
    violations = [(int(i) + 1, float(ea[i]), float(eb[i])) for i in bad]
    return TheoremReport(True, violations, ea, eb)


@dataclass
class ErrorReport:
    """Gaps between ``SHR@k`` and ``HR@f(k)``.

    Relative errors skip cutoffs where SHR@k is zero; those cutoffs are
    listed in ``rel_undefined_k`` and a relative field is ``None`` when every
    one of its cutoffs was skipped.
    """

    abs: float
    rel: Optional[float]
    abs_at_1: float
    rel_at_1: Optional[float]
    abs_2_10: Optional[float]
    rel_2_10: Optional[float]
    rel_undefined_k: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _mean_or_none(values):
    return float(np.mean(values)) if len(values) else None


def error_report(global_curve: HitRatioCurve, sampled: HitRatioCurve,
                 table: MappingTable) -> ErrorReport:
    n = table.catalog.n
    if sampled.K_max != n:
        raise ConfigurationError(f"sampled curve has {sampled.K_max} cutoffs, expected n={n}")
    mapped = mapped_hr_curve(global_curve, table)
    shr = sampled.values
    gap = np.abs(mapped - shr)
    defined = shr > 0
    rel = np.full(n, np.nan)
    rel[defined] = gap[defined] / shr[defined]
    head = slice(1, min(10, n))
    return ErrorReport(
        abs=float(gap.mean()),
        rel=_mean_or_none(rel[defined]),
        abs_at_1=float(gap[0]),
        rel_at_1=float(rel[0]) if defined[0] else None,
        abs_2_10=_mean_or_none(gap[head]),
        rel_2_10=_mean_or_none(rel[head][defined[head]]),
        rel_undefined_k=[int(k) + 1 for k in np.flatnonzero(~defined)],
    )


def _winners(labels, values):
    best = max(values)
    winners = [lab for lab, v in zip(labels, values) if best - v < TIE_TOL]
    return winners


@dataclass
class WinnerRow:
    k: int
    shr: dict
    mapped_hr: dict
    winner_shr: list
    winner_mapped: list

    @property
    def tie(self) -> bool:
        return len(self.winner_shr) > 1 or len(self.winner_mapped) > 1

    @property
    def agree(self) -> bool:
        return self.winner_shr == self.winner_mapped

    def to_dict(self):
        d = asdict(self)
        d["tie"] = self.tie
        d["agree"] = self.agree
        return d


@dataclass
class WinnerTable:
    labels: list
    rows: list

    @property
    def consistent(self) -> bool:
        return all(row.agree for row in self.rows)

    def to_dict(self):
        return {
            "labels": list(self.labels),
            "consistent": self.consistent,
            "rows": [row.to_dict() for row in self.rows],
        }


def winner_table(curves: Sequence[tuple], tables: Sequence[tuple],
                 ks: Sequence[int]) -> WinnerTable:
    """Winners per cutoff under SHR@k and under HR@f(k).

    ``curves`` holds ``(label, global_curve, sampled_curve)`` triples and
    ``tables`` holds ``(label, MappingTable)`` pairs with the same labels, so
    each algorithm may carry its own mapping.  Ties (gaps below 1e-12) list
    every tied label instead of picking one.
    """
    labels = [c[0] for c in curves]
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"duplicate algorithm labels in {labels}")
    by_label = dict(tables)
    if len(by_label) != len(tables) or set(by_label) != set(labels):
        raise ConfigurationError("mapping tables and curves must carry the same labels")
    catalogs = {by_label[lab].catalog for lab in labels}
    if len(catalogs) != 1:
        raise ConfigurationError("all mapping tables must share one catalog")
    n = next(iter(catalogs)).n
    mapped = {}
    for lab, glob, samp in curves:
        if samp.K_max != n:
            raise ConfigurationError(f"{lab}: sampled curve length {samp.K_max} != n={n}")
        mapped[lab] = mapped_hr_curve(glob, by_label[lab])
    rows = []
    for k in ks:
        if not 1 <= k <= n:
            raise ConfigurationError(f"cutoff {k} outside [1, {n}]")
        shr = {lab: float(samp.values[k - 1]) for lab, _, samp in curves}
        mhr = {lab: float(mapped[lab][k - 1]) for lab in labels}
        rows.append(WinnerRow(
            k=int(k),
            shr=shr,
            mapped_hr=mhr,
            winner_shr=_winners(labels, [shr[lab] for lab in labels]),
            winner_mapped=_winners(labels, [mhr[lab] for lab in labels]),
        ))
    return WinnerTable(labels, rows)


def max_mapping_gap(global_curve: HitRatioCurve, sampled: HitRatioCurve,
                    table: MappingTable) -> float:
    """max_k |SHR@k - HR@f(k)|."""
    return float(np.abs(mapped_hr_curve(global_curve, table) - sampled.values).max())
