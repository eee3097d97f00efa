"""Verification of claimed disparate-impact results.

Recomputes the analysis from the submitted raw dataset and compares every
claimed figure against the recomputed value: counts exactly, rates and
ratios to an absolute tolerance, p-values to a looser one.  Any figure past
its tolerance makes the claim a material misstatement; a missing dataset
makes it unverifiable (a verdict, never an exception).  Disclosure gaps are
a separate concern handled by :func:`detect_disclosure_gaps`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from . import schemas
from .errors import StructuralMismatch
from .stats import (
    Axis,
    DemographicScheme,
    OutcomeDataset,
    run_disparate_impact_analysis,
)


class FigureVerdict(str, Enum):
    MATCH = "match"
    MISMATCH = "mismatch"


class OverallVerdict(str, Enum):
    CONSISTENT = "consistent"
    MATERIAL_MISSTATEMENT = "material_misstatement"
    UNVERIFIABLE = "unverifiable"


@dataclass(frozen=True)
class VerificationTolerances:
    """Materiality thresholds; configurable per engagement and disclosed."""

    rate_abs: float = 1e-6
    ratio_abs: float = 1e-6
    p_value_abs: float = 1e-4

    def to_dict(self) -> dict:
        return {
            "rate_abs": self.rate_abs,
            "ratio_abs": self.ratio_abs,
            "p_value_abs": self.p_value_abs,
        }


DEFAULT_TOLERANCES = VerificationTolerances()

# Figure classes: exact fields compare by equality, the rest by the named
# absolute tolerance.
_EXACT_FIELDS = {
    "n",
    "successes",
    "unknown_n",
    "unknown_demographics_n",
    "below_fourfifths",
    "excluded_small_group",
    "favored_group",
    "favored_tied",
    "method",
    "significant_at_05",
    "degenerate",
}
_RATE_FIELDS = {"rate", "std_error", "median_score"}
_RATIO_FIELDS = {"ratio", "ratio_std_error"}
_P_FIELDS = {"p_value", "statistic"}


@dataclass(frozen=True)
class ClaimedResults:
    """An auditee's claimed results, mirroring the analysis report fields."""

    document: Mapping

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ClaimedResults":
        schemas.validate_against("claimed-results", dict(raw))
        return cls(document=dict(raw))


@dataclass(frozen=True)
class FigureComparison:
    figure: str
    claimed: Any
    recomputed: Any
    delta: float | None
    tolerance: float | None
    verdict: FigureVerdict

    def to_dict(self) -> dict:
        return {
            "figure": self.figure,
            "claimed": self.claimed,
            "recomputed": self.recomputed,
            "delta": self.delta,
            "tolerance": self.tolerance,
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class VerificationReport:
    overall: OverallVerdict
    entries: tuple[FigureComparison, ...] = ()
    tolerances: VerificationTolerances = DEFAULT_TOLERANCES
    note: str = ""

    @property
    def mismatches(self) -> list[FigureComparison]:
        return [e for e in self.entries if e.verdict is FigureVerdict.MISMATCH]

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.value,
            "tolerances": self.tolerances.to_dict(),
            "note": self.note,
            "entries": [e.to_dict() for e in self.entries],
        }


def _tolerance_for(field: str, tolerances: VerificationTolerances) -> float | None:
    if field in _RATE_FIELDS:
        return tolerances.rate_abs
    if field in _RATIO_FIELDS:
        return tolerances.ratio_abs
    if field in _P_FIELDS:
        return tolerances.p_value_abs
    return None


def _group_key(raw) -> tuple | str:
    return tuple(raw) if isinstance(raw, list) else raw


def _compare_value(
    figure: str,
    field: str,
    claimed: Any,
    recomputed: Any,
    tolerances: VerificationTolerances,
    entries: list[FigureComparison],
) -> None:
    tolerance = _tolerance_for(field, tolerances)
    if field in _EXACT_FIELDS or tolerance is None:
        matches = _normalize(claimed) == _normalize(recomputed)
        entries.append(
            FigureComparison(
                figure=figure,
                claimed=claimed,
                recomputed=recomputed,
                delta=None,
                tolerance=None,
                verdict=FigureVerdict.MATCH if matches else FigureVerdict.MISMATCH,
            )
        )
        return
    if claimed is None or recomputed is None:
        matches = claimed is None and recomputed is None
        entries.append(
            FigureComparison(
                figure=figure,
                claimed=claimed,
                recomputed=recomputed,
                delta=None,
                tolerance=tolerance,
                verdict=FigureVerdict.MATCH if matches else FigureVerdict.MISMATCH,
            )
        )
        return
    delta = abs(float(claimed) - float(recomputed))
    within = math.isfinite(delta) and delta <= tolerance
    entries.append(
        FigureComparison(
            figure=figure,
            claimed=claimed,
            recomputed=recomputed,
            delta=delta,
            tolerance=tolerance,
            verdict=FigureVerdict.MATCH if within else FigureVerdict.MISMATCH,
        )
    )


def recompute_and_compare(
    dataset: OutcomeDataset | None,
    scheme: DemographicScheme,
    claimed: ClaimedResults | Mapping,
    tolerances: VerificationTolerances = DEFAULT_TOLERANCES,
) -> VerificationReport:
    """Recompute the analysis and compare the claim figure by figure.

    Raises :class:`StructuralMismatch` when the claim does not cover the
    axes and groups the scheme requires; returns an unverifiable report when
    no dataset was submitted.
    """
    document = claimed.document if isinstance(claimed, ClaimedResults) else dict(claimed)
    if dataset is None:
        return VerificationReport(
            overall=OverallVerdict.UNVERIFIABLE,
            tolerances=tolerances,
            note="no raw dataset was submitted; the claim cannot be recomputed",
        )
    recomputed = run_disparate_impact_analysis(dataset, scheme)
    entries: list[FigureComparison] = []

    claimed_axes = {a.get("axis"): a for a in document.get("axes", ())}
    for axis_report in recomputed.axes:
        if axis_report.axis.value not in claimed_axes:
            raise StructuralMismatch(f"claim is missing the {axis_report.axis.value} axis")

    _compare_value("method", "method", document.get("method"), recomputed.method.value,
                   tolerances, entries)
    _compare_value(
        "median_score",
        "median_score",
        document.get("median_score"),
        recomputed.median_score,
        tolerances,
        entries,
    )
    _compare_value(
        "unknown_demographics_n",
        "unknown_demographics_n",
        document.get("unknown_demographics_n"),
        recomputed.unknown_demographics_n,
        tolerances,
        entries,
    )

    for axis_report in recomputed.axes:
        axis_name = axis_report.axis.value
        claim_axis = claimed_axes[axis_name]
        prefix = f"axes.{axis_name}"

        _compare_value(
            f"{prefix}.favored_group",
            "favored_group",
            claim_axis.get("favored_group"),
            axis_report.to_dict()["favored_group"],
            tolerances,
            entries,
        )
        _compare_value(
            f"{prefix}.unknown_n",
            "unknown_n",
            claim_axis.get("unknown_n"),
            axis_report.unknown_n,
            tolerances,
            entries,
        )

        claimed_rates = {_group_key(r.get("group")): r for r in claim_axis.get("rates", ())}
        recomputed_rates = {
            _group_key(r["group"]): r for r in (x.to_dict() for x in axis_report.rates)
        }
        _check_same_groups(prefix + ".rates", claimed_rates, recomputed_rates)
        for key, expected in recomputed_rates.items():
            claim_rate = claimed_rates[key]
            for field in ("n", "successes", "rate", "std_error"):
                _compare_value(
                    f"{prefix}.rates[{_label(key)}].{field}",
                    field,
                    claim_rate.get(field),
                    expected[field],
                    tolerances,
                    entries,
                )

        claimed_entries = {
            _group_key(e.get("group")): e for e in claim_axis.get("impact_ratios", ())
        }
        recomputed_entries = {
            _group_key(e["group"]): e for e in (x.to_dict() for x in axis_report.impact_ratios)
        }
        _check_same_groups(prefix + ".impact_ratios", claimed_entries, recomputed_entries)
        for key, expected in recomputed_entries.items():
            claim_entry = claimed_entries[key]
            for field in ("ratio", "ratio_std_error", "below_fourfifths", "excluded_small_group"):
                _compare_value(
                    f"{prefix}.impact_ratios[{_label(key)}].{field}",
                    field,
                    claim_entry.get(field),
                    expected[field],
                    tolerances,
                    entries,
                )
            expected_test = expected.get("significance")
            claimed_test = claim_entry.get("significance")
            if expected_test is None and claimed_test is None:
                continue
            if expected_test is None or claimed_test is None:
                entries.append(
                    FigureComparison(
                        figure=f"{prefix}.impact_ratios[{_label(key)}].significance",
                        claimed=claimed_test,
                        recomputed=expected_test,
                        delta=None,
                        tolerance=None,
                        verdict=FigureVerdict.MISMATCH,
                    )
                )
                continue
            for field in ("method", "p_value"):
                _compare_value(
                    f"{prefix}.impact_ratios[{_label(key)}].significance.{field}",
                    field,
                    claimed_test.get(field),
                    expected_test[field],
                    tolerances,
                    entries,
                )

    mismatched = any(e.verdict is FigureVerdict.MISMATCH for e in entries)
    return VerificationReport(
        overall=(
            OverallVerdict.MATERIAL_MISSTATEMENT if mismatched else OverallVerdict.CONSISTENT
        ),
        entries=tuple(entries),
        tolerances=tolerances,
    )


def _label(key) -> str:
    return " & ".join(key) if isinstance(key, tuple) else str(key)


def _check_same_groups(figure: str, claimed: Mapping, recomputed: Mapping) -> None:
    missing = sorted(_label(k) for k in recomputed.keys() - claimed.keys())
    if missing:
        raise StructuralMismatch(f"{figure}: claim omits groups: " + ", ".join(missing))
    extra = sorted(_label(k) for k in claimed.keys() - recomputed.keys())
    if extra:
        raise StructuralMismatch(
            f"{figure}: claim lists groups outside the scheme: " + ", ".join(extra)
        )


def _normalize(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_normalize(v) for v in value)
    return value


def detect_disclosure_gaps(claimed: ClaimedResults | Mapping, scheme: DemographicScheme) -> list[str]:
    """Enumerate disclosure obligations absent from a claimed-results document.

    Gap codes name the unmet obligation: the unknown-demographics sample size
    (Q.F.6), a missing per-group impact ratio (Q.G), and the three per-item
    disclosures owed for every small-group exclusion (Q.G.4 a-c).
    """
    document = claimed.document if isinstance(claimed, ClaimedResults) else dict(claimed)
    gaps: list[str] = []
    if document.get("unknown_demographics_n") is None:
        gaps.append("Q.F.6: unknown-demographics sample size not disclosed")

    expected_axes = [Axis.RACE_ETHNICITY.value, Axis.GENDER.value]
    if scheme.intersectional:
        expected_axes.append(Axis.INTERSECTIONAL.value)
    axes = {a.get("axis"): a for a in document.get("axes", ())}
    for axis_name in expected_axes:
        if axis_name not in axes:
            gaps.append(f"Q.G: no disclosures for the {axis_name} axis")
            continue
        axis = axes[axis_name]
        rated = {_group_key(r.get("group")) for r in axis.get("rates", ())}
        ratioed = {_group_key(e.get("group")) for e in axis.get("impact_ratios", ())}
        empty = {_group_key(g) for g in axis.get("empty_groups", ())}
        for group in rated - ratioed:
            gaps.append(f"Q.G: no impact ratio disclosed for {_label(group)} ({axis_name})")
        scheme_groups = {
            g if isinstance(g, str) else tuple(g)
            for g in (
                scheme.groups_for(Axis(axis_name))
            )
        }
        for group in sorted(scheme_groups - rated - empty, key=_label):
            gaps.append(
                f"Q.G: scheme group {_label(group)} neither rated nor disclosed as empty "
                f"({axis_name})"
            )
        rates_by_group = {_group_key(r.get("group")): r for r in axis.get("rates", ())}
        for entry in axis.get("impact_ratios", ()):
            if not entry.get("excluded_small_group"):
                continue
            group = _group_key(entry.get("group"))
            name = _label(group)
            if not str(entry.get("exclusion_justification", "")).strip():
                gaps.append(f"Q.G.4(a): no exclusion justification for {name} ({axis_name})")
            rate_row = rates_by_group.get(group, {})
            if rate_row.get("n") is None:
                gaps.append(f"Q.G.4(b): no sample size disclosed for excluded {name} ({axis_name})")
            if rate_row.get("rate") is None:
                gaps.append(f"Q.G.4(c): no rate disclosed for excluded {name} ({axis_name})")
    return gaps
