"""Disparate-impact statistics engine.

Computes everything the quantitative section of the criteria set needs:
per-group selection/scoring rates with binomial standard errors, favored
group identification, impact ratios with first-order error propagation
(optionally folding in systematic demographic-inference error), two-sample
significance tests with the 30-per-group selection rule, the 2% small-group
partition, and intersectional groupings.

All functions are pure and all values immutable; nothing here touches the
filesystem or the clock.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    DegenerateFavoredRate,
    EmptyDataset,
    EmptyGroup,
    MalformedRecord,
    NoEligibleGroups,
    ValidationError,
)

GroupLabel = Union[str, tuple[str, str]]

# Race/ethnicity categories of § 60-3.4 B of the EEO guidelines, the default
# grouping expected for the race/ethnicity axis.  Substituting a different
# grouping is allowed but must be justified in the evidence record.
EEO_RACE_ETHNICITY_GROUPS: tuple[str, ...] = (
    "Hispanic or Latino",
    "White",
    "Black or African American",
    "Native Hawaiian or Other Pacific Islander",
    "Asian",
    "Native American or Alaska Native",
    "Two or More Races",
)

FOUR_FIFTHS_THRESHOLD = 0.8
SMALL_GROUP_FRACTION_PCT = 2  # exclusion threshold: n < 2% of total sample
Z_TEST_MIN_GROUP_SIZE = 30
DEFAULT_ALPHA = 0.05


class RateMethod(str, Enum):
    SELECTION = "selection"
    SCORING = "scoring"


class Axis(str, Enum):
    RACE_ETHNICITY = "race_ethnicity"
    GENDER = "gender"
    INTERSECTIONAL = "intersectional"


class SignificanceMethod(str, Enum):
    Z_TEST = "z_test"
    FISHER_EXACT = "fisher_exact"


def format_group(group: GroupLabel) -> str:
    """Human-readable label; intersectional tuples render as ``race & gender``."""
    if isinstance(group, tuple):
        return " & ".join(group)
    return group


def group_to_json(group: GroupLabel) -> str | list[str]:
    return list(group) if isinstance(group, tuple) else group


def group_from_json(value: str | Sequence[str]) -> GroupLabel:
    if isinstance(value, str):
        return value
    return (value[0], value[1])


@dataclass(frozen=True)
class CandidateRecord:
    """One assessed candidate.

    ``race_ethnicity``/``gender`` of ``None`` mean the demographic is unknown:
    the record is disclosed in the unknown-demographics count but never enters
    a group rate.
    """

    candidate_id: str
    outcome: bool | None = None
    score: float | None = None
    race_ethnicity: str | None = None
    gender: str | None = None


@dataclass(frozen=True)
class OutcomeDataset:
    """Per-candidate outcomes or scores plus collection metadata."""

    records: tuple[CandidateRecord, ...]
    method: RateMethod
    collection_window: tuple[date, date]
    analysis_date: date
    settings_used: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.records:
            raise EmptyDataset("dataset contains no records")
        start, end = self.collection_window
        if start > end:
            raise ValidationError(
                f"collection window start {start.isoformat()} is after end {end.isoformat()}"
            )
        for record in self.records:
            if self.method is RateMethod.SELECTION:
                if record.outcome is None:
                    raise MalformedRecord(
                        f"record {record.candidate_id!r} has no outcome under the selection method"
                    )
            else:
                if record.score is None:
                    raise MalformedRecord(
                        f"record {record.candidate_id!r} has no score under the scoring method"
                    )

    @property
    def total_n(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class InferenceErrorModel:
    """Systematic relative rate error per demographic label.

    Values are relative errors on the group rate attributable to demographic
    inference (e.g. 0.03 = 3% of the rate).  Unlisted labels carry zero error;
    intersectional groups combine their two axis errors in quadrature.
    """

    relative_errors: Mapping[str, float]

    def __post_init__(self) -> None:
        for label, err in self.relative_errors.items():
            if err < 0:
                raise ValidationError(f"inference error for {label!r} is negative: {err}")

    def relative_error_for(self, group: GroupLabel) -> float:
        if isinstance(group, tuple):
            race_err = self.relative_errors.get(group[0], 0.0)
            gender_err = self.relative_errors.get(group[1], 0.0)
            return math.sqrt(race_err**2 + gender_err**2)
        return self.relative_errors.get(group, 0.0)


@dataclass(frozen=True)
class DemographicScheme:
    """Category labels per demographic axis.

    Uniqueness of labels is enforced at construction.  Whether the gender
    axis covers at least Male and Female is a compliance question, checked as
    a criterion (so a non-covering scheme is observable as NotMet rather than
    being unconstructible).
    """

    race_ethnicity_groups: tuple[str, ...]
    gender_groups: tuple[str, ...]
    intersectional: bool = True
    inference: InferenceErrorModel | None = None

    def __post_init__(self) -> None:
        for axis_name, labels in (
            ("race_ethnicity", self.race_ethnicity_groups),
            ("gender", self.gender_groups),
        ):
            if not labels:
                raise ValidationError(f"{axis_name} axis has no groups")
            if len(set(labels)) != len(labels):
                raise ValidationError(f"{axis_name} axis has duplicate labels")

    def groups_for(self, axis: Axis) -> tuple[GroupLabel, ...]:
        if axis is Axis.RACE_ETHNICITY:
            return self.race_ethnicity_groups
        if axis is Axis.GENDER:
            return self.gender_groups
        return intersectional_groups(self)

    def covers_minimum_genders(self) -> bool:
        return {"Male", "Female"} <= set(self.gender_groups)

    def uses_eeo_race_categories(self) -> bool:
        return set(self.race_ethnicity_groups) == set(EEO_RACE_ETHNICITY_GROUPS)


def default_eeo_scheme(
    *,
    gender_groups: tuple[str, ...] = ("Male", "Female"),
    intersectional: bool = True,
    inference: InferenceErrorModel | None = None,
) -> DemographicScheme:
    return DemographicScheme(
        race_ethnicity_groups=EEO_RACE_ETHNICITY_GROUPS,
        gender_groups=gender_groups,
        intersectional=intersectional,
        inference=inference,
    )


@dataclass(frozen=True)
class GroupRate:
    """Observed rate of one demographic group.

    ``rate`` is exactly ``successes / n`` (IEEE double quotient); successes
    are positive outcomes under the selection method and strictly-above-median
    scores under the scoring method.
    """

    group: GroupLabel
    n: int
    successes: int
    rate: float
    std_error: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise EmptyGroup(f"group {format_group(self.group)} has n={self.n}")
        if not 0 <= self.successes <= self.n:
            raise ValidationError(
                f"group {format_group(self.group)} has successes={self.successes} outside [0, {self.n}]"
            )

    @classmethod
    def from_counts(cls, group: GroupLabel, successes: int, n: int) -> "GroupRate":
        return cls(
            group=group,
            n=n,
            successes=successes,
            rate=successes / n if n else 0.0,
            std_error=proportion_standard_error(successes, n),
        )

    def to_dict(self) -> dict:
        return {
            "group": group_to_json(self.group),
            "n": self.n,
            "successes": self.successes,
            "rate": self.rate,
            "std_error": self.std_error,
        }


@dataclass(frozen=True)
class TestResult:
    """Outcome of a two-sample significance test.

    ``degenerate`` marks a zero-variance contingency table (pooled proportion
    0 or 1), reported as non-significant with p = 1 rather than raised.
    """

    method: SignificanceMethod
    p_value: float
    statistic: float | None = None
    degenerate: bool = False

    @property
    def significant_at_05(self) -> bool:
        return self.p_value < 0.05

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "significant_at_05": self.significant_at_05,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class ImpactRatioEntry:
    """One group's impact ratio relative to the favored group."""

    group: GroupLabel
    ratio: float
    ratio_std_error: float
    excluded_small_group: bool = False
    significance: TestResult | None = None

    @property
    def below_fourfifths(self) -> bool:
        return self.ratio < FOUR_FIFTHS_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "group": group_to_json(self.group),
            "ratio": self.ratio,
            "ratio_std_error": self.ratio_std_error,
            "below_fourfifths": self.below_fourfifths,
            "excluded_small_group": self.excluded_small_group,
            "significance": self.significance.to_dict() if self.significance else None,
        }


@dataclass(frozen=True)
class AxisAnalysis:
    """Complete quantitative result for one demographic axis.

    Every scheme group appears exactly once: as a rate/ratio entry when it has
    members, or in ``empty_groups`` when it has none.
    """

    axis: Axis
    rates: tuple[GroupRate, ...]
    favored_group: GroupLabel
    favored_tied: bool
    impact_ratios: tuple[ImpactRatioEntry, ...]
    empty_groups: tuple[GroupLabel, ...]
    unknown_n: int

    def to_dict(self) -> dict:
        return {
            "axis": self.axis.value,
            "favored_group": group_to_json(self.favored_group),
            "favored_tied": self.favored_tied,
            "rates": [r.to_dict() for r in self.rates],
            "impact_ratios": [e.to_dict() for e in self.impact_ratios],
            "empty_groups": [group_to_json(g) for g in self.empty_groups],
            "unknown_n": self.unknown_n,
        }


@dataclass(frozen=True)
class AnalysisReport:
    """Full disparate-impact analysis across all configured axes."""

    method: RateMethod
    analysis_date: date
    collection_window: tuple[date, date]
    axes: tuple[AxisAnalysis, ...]
    unknown_demographics_n: int
    median_score: float | None = None
    settings_used: Mapping[str, str] = field(default_factory=dict)
    alpha: float = DEFAULT_ALPHA

    def axis(self, axis: Axis) -> AxisAnalysis:
        for entry in self.axes:
            if entry.axis is axis:
                return entry
        raise KeyError(axis)

    def has_axis(self, axis: Axis) -> bool:
        return any(entry.axis is axis for entry in self.axes)

    def any_below_fourfifths(self) -> bool:
        return any(e.below_fourfifths for a in self.axes for e in a.impact_ratios)

    def any_small_group_excluded(self) -> bool:
        return any(e.excluded_small_group for a in self.axes for e in a.impact_ratios)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "analysis_date": self.analysis_date.isoformat(),
            "collection_window": {
                "start": self.collection_window[0].isoformat(),
                "end": self.collection_window[1].isoformat(),
            },
            "axes": [a.to_dict() for a in self.axes],
            "unknown_demographics_n": self.unknown_demographics_n,
            "median_score": self.median_score,
            "settings_used": dict(self.settings_used),
            "alpha": self.alpha,
        }


def proportion_standard_error(successes: int, n: int) -> float:
    """Binomial standard error sqrt(p(1-p)/n) of an observed proportion."""
    if n < 1:
        raise EmptyGroup(f"cannot compute a proportion standard error with n={n}")
    if not 0 <= successes <= n:
        raise ValidationError(f"successes={successes} outside [0, {n}]")
    p = successes / n
    return math.sqrt(p * (1.0 - p) / n)


def sample_median(scores: Sequence[float]) -> float:
    """Median with the even-length midpoint convention."""
    if not scores:
        raise EmptyDataset("cannot take the median of an empty sample")
    return float(statistics.median(scores))


def _axis_label(record: CandidateRecord, axis: Axis) -> GroupLabel | None:
    if axis is Axis.RACE_ETHNICITY:
        return record.race_ethnicity
    if axis is Axis.GENDER:
        return record.gender
    if record.race_ethnicity is None or record.gender is None:
        return None
    return (record.race_ethnicity, record.gender)


def _is_success(record: CandidateRecord, method: RateMethod, median: float | None) -> bool:
    if method is RateMethod.SELECTION:
        if record.outcome is None:
            raise MalformedRecord(f"record {record.candidate_id!r} has no outcome")
        return record.outcome
    if record.score is None:
        raise MalformedRecord(f"record {record.candidate_id!r} has no score")
    assert median is not None
    return record.score > median  # strictly above; scores equal to the median do not count


def compute_group_rates(
    dataset: OutcomeDataset, scheme: DemographicScheme, axis: Axis
) -> list[GroupRate]:
    """Rates for every scheme group on ``axis`` that has at least one record.

    Under the scoring method a success is a score strictly greater than the
    whole-sample median.  Records whose label on this axis is unknown are
    skipped here; they are disclosed through the unknown-demographics counts.
    """
    if not dataset.records:
        raise EmptyDataset("dataset contains no records")
    median = None
    if dataset.method is RateMethod.SCORING:
        median = sample_median([_require_score(r) for r in dataset.records])

    counts: dict[GroupLabel, list[int]] = {g: [0, 0] for g in scheme.groups_for(axis)}
    for record in dataset.records:
        label = _axis_label(record, axis)
        if label is None:
            continue
        if label not in counts:
            raise MalformedRecord(
                f"record {record.candidate_id!r} carries {axis.value} label "
                f"{format_group(label)!r} which is not in the configured scheme"
            )
        bucket = counts[label]
        bucket[0] += 1
        if _is_success(record, dataset.method, median):
            bucket[1] += 1

    return [
        GroupRate.from_counts(group, successes, n)
        for group, (n, successes) in counts.items()
        if n > 0
    ]


def _require_score(record: CandidateRecord) -> float:
    if record.score is None:
        raise MalformedRecord(f"record {record.candidate_id!r} has no score")
    return record.score


def count_unknown(dataset: OutcomeDataset, axis: Axis) -> int:
    """Records not attributable to any group on ``axis`` (unknown or off-scheme)."""
    return sum(1 for r in dataset.records if _axis_label(r, axis) is None)


def identify_favored_group(rates: Sequence[GroupRate]) -> GroupLabel:
    """Group with the highest rate; exact ties resolve to the smallest label."""
    label, _ = favored_group_with_tie(rates)
    return label


def favored_group_with_tie(rates: Sequence[GroupRate]) -> tuple[GroupLabel, bool]:
    eligible = [r for r in rates if r.n > 0]
    if not eligible:
        raise NoEligibleGroups("no group has any records")
    best = max(r.rate for r in eligible)
    tied = sorted(r.group for r in eligible if r.rate == best)
    return tied[0], len(tied) > 1


def compute_impact_ratios(
    rates: Sequence[GroupRate],
    favored: GroupLabel,
    inference: InferenceErrorModel | None = None,
) -> list[ImpactRatioEntry]:
    """Impact ratios of every group relative to ``favored``.

    ratio = rate_g / rate_f, with first-order propagated uncertainty
    ratio * sqrt((sigma_g/rate_g)^2 + (sigma_f/rate_f)^2).  When an inference
    error model is present, each group's systematic error (relative error
    times its rate) is added in quadrature to its binomial standard error
    before propagation.  A disfavored rate of zero yields ratio 0 with
    uncertainty sigma_g / rate_f; the favored group's own entry is exactly
    1.0 with zero uncertainty.
    """
    by_group = {r.group: r for r in rates}
    if favored not in by_group:
        raise NoEligibleGroups(f"favored group {format_group(favored)} not among the rates")
    fav = by_group[favored]
    if fav.rate == 0:
        raise DegenerateFavoredRate(
            f"favored group {format_group(favored)} has rate 0; impact ratios are undefined"
        )

    sigma_f = _effective_sigma(fav, inference)
    entries: list[ImpactRatioEntry] = []
    for r in rates:
        if r.group == favored:
            entries.append(ImpactRatioEntry(group=r.group, ratio=1.0, ratio_std_error=0.0))
            continue
        sigma_g = _effective_sigma(r, inference)
        ratio = r.rate / fav.rate
        if r.rate == 0:
            se = sigma_g / fav.rate
        else:
            se = ratio * math.sqrt((sigma_g / r.rate) ** 2 + (sigma_f / fav.rate) ** 2)
        entries.append(ImpactRatioEntry(group=r.group, ratio=ratio, ratio_std_error=se))
    return entries


def _effective_sigma(rate: GroupRate, inference: InferenceErrorModel | None) -> float:
    if inference is None:
        return rate.std_error
    systematic = inference.relative_error_for(rate.group) * rate.rate
    return math.sqrt(rate.std_error**2 + systematic**2)


def select_significance_test(n1: int, n2: int) -> SignificanceMethod:
    """Z-test when both compared groups have 30 or more members, else Fisher."""
    if n1 < 1 or n2 < 1:
        raise EmptyGroup(f"group sizes must be positive, got ({n1}, {n2})")
    if n1 >= Z_TEST_MIN_GROUP_SIZE and n2 >= Z_TEST_MIN_GROUP_SIZE:
        return SignificanceMethod.Z_TEST
    return SignificanceMethod.FISHER_EXACT


def two_proportion_z_test(x1: int, n1: int, x2: int, n2: int) -> TestResult:
    """Pooled two-sample binomial Z-test with a two-sided normal p-value."""
    _check_table(x1, n1, x2, n2)
    pooled = (x1 + x2) / (n1 + n2)
    if pooled == 0.0 or pooled == 1.0:
        return TestResult(
            method=SignificanceMethod.Z_TEST, p_value=1.0, statistic=0.0, degenerate=True
        )
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    z = (x1 / n1 - x2 / n2) / se
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return TestResult(method=SignificanceMethod.Z_TEST, p_value=p, statistic=z)


# Tie tolerance for the two-sided Fisher sum: tables whose probability is
# within a relative 1e-7 of the observed table's count as "as extreme".
_FISHER_TIE_DENOM = 10_000_000
_FISHER_TIE_NUMER = _FISHER_TIE_DENOM + 1


def fishers_exact_test(x1: int, n1: int, x2: int, n2: int) -> TestResult:
    """Two-sided Fisher's exact test on a 2x2 table with fixed margins.

    The p-value sums the hypergeometric probabilities of every table sharing
    the observed margins whose probability does not exceed the observed
    table's (to within relative tolerance 1e-7).  Computed in exact integer
    arithmetic; only the final quotient is floating point.
    """
    _check_table(x1, n1, x2, n2)
    m = x1 + x2
    total = n1 + n2
    denom = math.comb(total, m)
    observed = math.comb(n1, x1) * math.comb(n2, x2)
    lo = max(0, m - n2)
    hi = min(n1, m)
    acc = 0
    for x in range(lo, hi + 1):
        weight = math.comb(n1, x) * math.comb(n2, m - x)
        if weight * _FISHER_TIE_DENOM <= observed * _FISHER_TIE_NUMER:
            acc += weight
    return TestResult(method=SignificanceMethod.FISHER_EXACT, p_value=acc / denom)


def _check_table(x1: int, n1: int, x2: int, n2: int) -> None:
    if n1 < 1 or n2 < 1:
        raise EmptyGroup(f"group sizes must be positive, got ({n1}, {n2})")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise ValidationError(f"success counts ({x1}, {x2}) outside group sizes ({n1}, {n2})")


def apply_small_group_rule(
    rates: Sequence[GroupRate], total_n: int
) -> tuple[list[GroupRate], list[GroupRate]]:
    """Partition rates into (included, excludable) by the 2% rule.

    A group is excludable when its size is strictly below 2% of the total
    sample (exact integer comparison: 50*n < total).  Excluded groups keep
    their full GroupRate so size and rate stay disclosed; nothing is deleted
    or mutated.
    """
    if total_n < 1:
        raise EmptyDataset(f"total sample size must be positive, got {total_n}")
    included: list[GroupRate] = []
    excluded: list[GroupRate] = []
    for r in rates:
        if r.n * 100 < total_n * SMALL_GROUP_FRACTION_PCT:
            excluded.append(r)
        else:
            included.append(r)
    return included, excluded


def intersectional_groups(scheme: DemographicScheme) -> list[tuple[str, str]]:
    """Cartesian product of the two axes, race-major then gender."""
    return [
        (race, gender)
        for race in scheme.race_ethnicity_groups
        for gender in scheme.gender_groups
    ]


def _analysis_axes(scheme: DemographicScheme) -> Iterable[Axis]:
    yield Axis.RACE_ETHNICITY
    yield Axis.GENDER
    if scheme.intersectional:
        yield Axis.INTERSECTIONAL


def run_disparate_impact_analysis(
    dataset: OutcomeDataset, scheme: DemographicScheme
) -> AnalysisReport:
    """Full per-axis analysis: rates, favored group, ratios, tests, exclusions.

    Significance tests compare each disfavored group against the favored
    group and are computed only under the selection method; the test for each
    pair is chosen by the 30-per-group rule.  Any sub-operation failure is
    re-raised with the failing axis named.
    """
    median = None
    if dataset.method is RateMethod.SCORING:
        median = sample_median([_require_score(r) for r in dataset.records])

    axes: list[AxisAnalysis] = []
    for axis in _analysis_axes(scheme):
        try:
            axes.append(_analyze_axis(dataset, scheme, axis))
        except (ValidationError, NoEligibleGroups, DegenerateFavoredRate) as exc:
            raise type(exc)(f"[axis {axis.value}] {exc}") from exc

    unknown_any = sum(
        1
        for r in dataset.records
        if any(_axis_label(r, a) is None for a in _analysis_axes(scheme))
    )
    return AnalysisReport(
        method=dataset.method,
        analysis_date=dataset.analysis_date,
        collection_window=dataset.collection_window,
        axes=tuple(axes),
        unknown_demographics_n=unknown_any,
        median_score=median,
        settings_used=dict(dataset.settings_used),
    )


def _analyze_axis(dataset: OutcomeDataset, scheme: DemographicScheme, axis: Axis) -> AxisAnalysis:
    rates = compute_group_rates(dataset, scheme, axis)
    favored, tied = favored_group_with_tie(rates)
    entries = compute_impact_ratios(rates, favored, scheme.inference)
    _, excluded = apply_small_group_rule(rates, dataset.total_n)
    excluded_groups = {r.group for r in excluded}

    by_group = {r.group: r for r in rates}
    fav = by_group[favored]
    finished: list[ImpactRatioEntry] = []
    for entry in entries:
        significance = None
        if dataset.method is RateMethod.SELECTION and entry.group != favored:
            g = by_group[entry.group]
            method = select_significance_test(g.n, fav.n)
            if method is SignificanceMethod.Z_TEST:
                significance = two_proportion_z_test(g.successes, g.n, fav.successes, fav.n)
            else:
                significance = fishers_exact_test(g.successes, g.n, fav.successes, fav.n)
        finished.append(
            ImpactRatioEntry(
                group=entry.group,
                ratio=entry.ratio,
                ratio_std_error=entry.ratio_std_error,
                excluded_small_group=entry.group in excluded_groups,
                significance=significance,
            )
        )

    present = {r.group for r in rates}
    empty = tuple(g for g in scheme.groups_for(axis) if g not in present)
    return AxisAnalysis(
        axis=axis,
        rates=tuple(rates),
        favored_group=favored,
        favored_tied=tied,
        impact_ratios=tuple(finished),
        empty_groups=empty,
        unknown_n=count_unknown(dataset, axis),
    )


def analysis_report_from_dict(raw: Mapping) -> AnalysisReport:
    """Rebuild an AnalysisReport from its ``to_dict`` form."""
    axes = []
    for a in raw["axes"]:
        rates = tuple(
            GroupRate(
                group=group_from_json(r["group"]),
                n=r["n"],
                successes=r["successes"],
                rate=r["rate"],
                std_error=r["std_error"],
            )
            for r in a["rates"]
        )
        ratios = tuple(
            ImpactRatioEntry(
                group=group_from_json(e["group"]),
                ratio=e["ratio"],
                ratio_std_error=e["ratio_std_error"],
                excluded_small_group=e["excluded_small_group"],
                significance=_test_result_from_dict(e.get("significance")),
            )
            for e in a["impact_ratios"]
        )
        axes.append(
            AxisAnalysis(
                axis=Axis(a["axis"]),
                rates=rates,
                favored_group=group_from_json(a["favored_group"]),
                favored_tied=a["favored_tied"],
                impact_ratios=ratios,
                empty_groups=tuple(group_from_json(g) for g in a["empty_groups"]),
                unknown_n=a["unknown_n"],
            )
        )
    window = raw["collection_window"]
    return AnalysisReport(
        method=RateMethod(raw["method"]),
        analysis_date=date.fromisoformat(raw["analysis_date"]),
        collection_window=(
            date.fromisoformat(window["start"]),
            date.fromisoformat(window["end"]),
        ),
        axes=tuple(axes),
        unknown_demographics_n=raw["unknown_demographics_n"],
        median_score=raw.get("median_score"),
        settings_used=dict(raw.get("settings_used", {})),
        alpha=raw.get("alpha", DEFAULT_ALPHA),
    )


def _test_result_from_dict(raw: Mapping | None) -> TestResult | None:
    if raw is None:
        return None
    return TestResult(
        method=SignificanceMethod(raw["method"]),
        p_value=raw["p_value"],
        statistic=raw.get("statistic"),
        degenerate=raw.get("degenerate", False),
    )
