"""Automated criterion checks over an analysis report and engagement facts.

Each check returns met/not-met plus a one-line finding.  ``run_auto_checks``
stamps inapplicable nodes not-applicable, resets stale stamps, and emits one
evaluation record per applicable machine-checkable node.

Date arithmetic convention: "one year" is 365 days on calendar dates;
"less than one year prior to D" means 0 <= (D - x).days < 365, and a dataset
window is recent when it lies entirely within the 365 days ending at the
analysis start date (inclusive bounds).
"""

from __future__ import annotations

from datetime import date, datetime, timezone
from typing import Callable, Sequence

from .criteria import (
    CriteriaManifest,
    EvaluationRecord,
    EvaluationSource,
    EvaluationStatus,
    FactMap,
    applicable_ids,
    latest_records,
)
from .errors import MissingArtifact, UnresolvedFact, ValidationError
from .stats import (
    AnalysisReport,
    Axis,
    AxisAnalysis,
    RateMethod,
    format_group,
    identify_favored_group,
    select_significance_test,
)

ONE_YEAR_DAYS = 365

CheckResult = tuple[bool, str]
CheckFn = Callable[[AnalysisReport | None, FactMap], CheckResult]

AUTO_EVALUATOR = "auto-checks"
ANALYSIS_REF = "analysis-report"
FACTS_REF = "engagement-facts"


DERIVED_FACT_KEYS = frozenset(
    {"any_impact_ratio_below_fourfifths", "any_small_group_excluded"}
)


def derived_facts(analysis: AnalysisReport) -> dict[str, bool]:
    """Facts that only exist once an analysis is attached."""
    return {
        "any_impact_ratio_below_fourfifths": analysis.any_below_fourfifths(),
        "any_small_group_excluded": analysis.any_small_group_excluded(),
    }


def fact_date(facts: FactMap, key: str) -> date | None:
    raw = facts.get(key)
    if raw is None or raw == "":
        return None
    try:
        return date.fromisoformat(str(raw))
    except ValueError:
        raise ValidationError(f"fact {key!r} is not an ISO date: {raw!r}") from None


def _within_one_year_before(earlier: date, later: date) -> bool:
    return 0 <= (later - earlier).days < ONE_YEAR_DAYS


def _require_analysis(analysis: AnalysisReport | None) -> AnalysisReport:
    if analysis is None:
        raise MissingArtifact("no analysis report is attached to the engagement")
    return analysis


def _axis_group_universe(axis: AxisAnalysis) -> set:
    return {r.group for r in axis.rates} | set(axis.empty_groups)


def _check_selection_rate_definition(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    if report.method is not RateMethod.SELECTION:
        return False, "analysis was not computed with the selection rate method"
    for axis in report.axes:
        for r in axis.rates:
            if r.rate != r.successes / r.n:
                return False, (
                    f"group {format_group(r.group)} rate {r.rate} is not "
                    f"{r.successes}/{r.n}"
                )
    return True, "all group rates equal positive outcomes over all outcomes"


def _check_scoring_rate_definition(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    if report.method is not RateMethod.SCORING:
        return False, "analysis was not computed with the scoring rate method"
    if report.median_score is None:
        return False, "the whole-sample median score is not disclosed"
    for axis in report.axes:
        for r in axis.rates:
            if r.rate != r.successes / r.n:
                return False, (
                    f"group {format_group(r.group)} rate {r.rate} is not "
                    f"{r.successes}/{r.n}"
                )
    return True, (
        f"scoring rates count scores strictly above the sample median "
        f"({report.median_score})"
    )


def _check_favored_identified_by_rates(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    for axis in report.axes:
        expected = identify_favored_group(axis.rates)
        if axis.favored_group != expected:
            return False, (
                f"axis {axis.axis.value}: favored group "
                f"{format_group(axis.favored_group)} does not have the highest rate"
            )
    return True, "favored group per axis is the group with the highest rate"


def _check_gender_minimum_coverage(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    if not report.has_axis(Axis.GENDER):
        return False, "no gender axis in the analysis"
    universe = _axis_group_universe(report.axis(Axis.GENDER))
    missing = {"Male", "Female"} - universe
    if missing:
        return False, "gender axis is missing: " + ", ".join(sorted(missing))
    return True, "gender axis covers at least Male and Female"


def _check_intersectional_coverage(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    if not report.has_axis(Axis.INTERSECTIONAL):
        return False, "no intersectional axis in the analysis"
    races = _axis_group_universe(report.axis(Axis.RACE_ETHNICITY))
    genders = _axis_group_universe(report.axis(Axis.GENDER))
    expected = {(r, g) for r in races for g in genders}
    actual = _axis_group_universe(report.axis(Axis.INTERSECTIONAL))
    if actual != expected:
        return False, "intersectional axis does not cover all race x gender permutations"
    return True, (
        f"intersectional axis covers all {len(races)} x {len(genders)} permutations"
    )


def _check_unknown_sample_disclosed(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    if report.unknown_demographics_n < 0:
        return False, "unknown-demographics sample size is negative"
    return True, (
        f"unknown-demographics sample size disclosed: {report.unknown_demographics_n}"
    )


def _check_impact_ratios_disclosed(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    for axis in report.axes:
        entries = {e.group for e in axis.impact_ratios}
        for r in axis.rates:
            if r.group not in entries:
                return False, (
                    f"axis {axis.axis.value}: no impact ratio disclosed for "
                    f"{format_group(r.group)}"
                )
    return True, "impact ratios disclosed for every disfavored group on every axis"


def _check_uncertainties_present(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    for axis in report.axes:
        for e in axis.impact_ratios:
            if e.ratio_std_error < 0 or e.ratio_std_error != e.ratio_std_error:
                return False, (
                    f"axis {axis.axis.value}: invalid ratio uncertainty for "
                    f"{format_group(e.group)}"
                )
    return True, "every impact ratio carries a propagated absolute error"


def _check_exclusion_disclosures_complete(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    for axis in report.axes:
        rated = {r.group for r in axis.rates}
        for e in axis.impact_ratios:
            if e.excluded_small_group and e.group not in rated:
                return False, (
                    f"axis {axis.axis.value}: excluded group "
                    f"{format_group(e.group)} lacks a disclosed size and rate"
                )
    return True, "every excluded small group keeps its size and rate disclosed"


def _check_significance_test_selection(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    if report.method is not RateMethod.SELECTION:
        return False, "significance testing applies to the selection rate method"
    for axis in report.axes:
        sizes = {r.group: r.n for r in axis.rates}
        favored_n = sizes[axis.favored_group]
        for e in axis.impact_ratios:
            if e.group == axis.favored_group:
                continue
            if e.significance is None:
                return False, (
                    f"axis {axis.axis.value}: no significance test for "
                    f"{format_group(e.group)}"
                )
            expected = select_significance_test(sizes[e.group], favored_n)
            if e.significance.method is not expected:
                return False, (
                    f"axis {axis.axis.value}: {format_group(e.group)} used "
                    f"{e.significance.method.value} where {expected.value} is required"
                )
    return True, "test choice follows the 30-per-group rule for every comparison"


def _check_analysis_recency(analysis: AnalysisReport | None, facts: FactMap) -> CheckResult:
    report = _require_analysis(analysis)
    audit_start = fact_date(facts, "audit_start_date")
    if audit_start is None:
        return False, "no audit_start_date fact recorded"
    if _within_one_year_before(report.analysis_date, audit_start):
        return True, (
            f"analysis dated {report.analysis_date.isoformat()} is within one year "
            f"of the audit start"
        )
    major_update = fact_date(facts, "major_update_date")
    if (
        major_update is not None
        and report.analysis_date >= major_update
        and _within_one_year_before(major_update, audit_start)
    ):
        return True, "analysis postdates a major tool update within one year of the audit start"
    return False, (
        f"analysis dated {report.analysis_date.isoformat()} is more than one year "
        f"old and not tied to a recent major update"
    )


def _check_dataset_window_recency(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    report = _require_analysis(analysis)
    start, end = report.collection_window
    if end > report.analysis_date:
        return False, "dataset window ends after the analysis start date"
    if (report.analysis_date - start).days > ONE_YEAR_DAYS:
        return False, (
            f"dataset window starting {start.isoformat()} reaches back more than "
            f"one year before the analysis start date"
        )
    return True, "dataset window lies within one year of the analysis start date"


def _check_risk_assessment_recency(
    analysis: AnalysisReport | None, facts: FactMap
) -> CheckResult:
    completed = fact_date(facts, "risk_assessment_date")
    if completed is None:
        return False, "no risk_assessment_date fact recorded"
    issuance = fact_date(facts, "report_date") or fact_date(facts, "audit_start_date")
    if issuance is None:
        return False, "neither report_date nor audit_start_date fact recorded"
    if _within_one_year_before(completed, issuance):
        return True, (
            f"risk assessment dated {completed.isoformat()} is within one year "
            f"of issuance"
        )
    return False, (
        f"risk assessment dated {completed.isoformat()} is more than one year "
        f"before issuance"
    )


CHECKS: dict[str, CheckFn] = {
    "selection_rate_definition": _check_selection_rate_definition,
    "scoring_rate_definition": _check_scoring_rate_definition,
    "favored_identified_by_rates": _check_favored_identified_by_rates,
    "gender_minimum_coverage": _check_gender_minimum_coverage,
    "intersectional_coverage": _check_intersectional_coverage,
    "unknown_sample_disclosed": _check_unknown_sample_disclosed,
    "impact_ratios_disclosed": _check_impact_ratios_disclosed,
    "uncertainties_present": _check_uncertainties_present,
    "exclusion_disclosures_complete": _check_exclusion_disclosures_complete,
    "significance_test_selection": _check_significance_test_selection,
    "analysis_recency": _check_analysis_recency,
    "dataset_window_recency": _check_dataset_window_recency,
    "risk_assessment_recency": _check_risk_assessment_recency,
}

# Checks that can run from facts alone, without an attached analysis.
_FACTS_ONLY_CHECKS = {"risk_assessment_recency"}


def run_auto_checks(
    manifest: CriteriaManifest,
    analysis: AnalysisReport | None,
    facts: FactMap,
    *,
    previous: Sequence[EvaluationRecord] = (),
    timestamp: str | None = None,
) -> list[EvaluationRecord]:
    """Evaluate applicability and every applicable automated check.

    Emits not-applicable stamps for inapplicable nodes, met/not-met records
    for applicable auto and hybrid nodes, and pending resets for applicable
    manual nodes whose latest record is a stale not-applicable stamp.
    Raises :class:`MissingArtifact` when an applicable check needs an
    analysis report and none is attached.
    """
    at = timestamp or datetime.now(timezone.utc).isoformat()
    effective: dict = dict(facts)
    if analysis is not None:
        effective.update(derived_facts(analysis))
    try:
        applicable = applicable_ids(manifest, effective)
    except UnresolvedFact as exc:
        # conditions on analysis-derived facts cannot resolve without one
        if analysis is None and any(key in str(exc) for key in DERIVED_FACT_KEYS):
            raise MissingArtifact(
                "applicability depends on analysis-derived facts and no analysis "
                "report is attached"
            ) from exc
        raise
    latest = latest_records(previous)
    records: list[EvaluationRecord] = []

    for node in manifest.walk():
        if node.id not in applicable:
            records.append(
                EvaluationRecord(
                    criterion_id=node.id,
                    status=EvaluationStatus.NOT_APPLICABLE,
                    source=EvaluationSource.AUTO_CHECK,
                    rationale="not applicable under the recorded engagement facts",
                    evaluator=AUTO_EVALUATOR,
                    timestamp=at,
                )
            )
            continue
        if node.check is not None:
            check = CHECKS.get(node.check)
            if check is None:
                raise ValidationError(f"criterion {node.id} names unknown check {node.check!r}")
            if analysis is None and node.check not in _FACTS_ONLY_CHECKS:
                raise MissingArtifact(
                    f"criterion {node.id} needs an analysis report and none is attached"
                )
            met, finding = check(analysis, effective)
            refs = (FACTS_REF,) if node.check in _FACTS_ONLY_CHECKS else (ANALYSIS_REF,)
            records.append(
                EvaluationRecord(
                    criterion_id=node.id,
                    status=EvaluationStatus.MET if met else EvaluationStatus.NOT_MET,
                    source=EvaluationSource.AUTO_CHECK,
                    evidence_refs=refs,
                    rationale=finding,
                    evaluator=AUTO_EVALUATOR,
                    timestamp=at,
                )
            )
            continue
        stale = latest.get(node.id)
        if stale is not None and stale.status is EvaluationStatus.NOT_APPLICABLE:
            records.append(
                EvaluationRecord(
                    criterion_id=node.id,
                    status=EvaluationStatus.PENDING,
                    source=EvaluationSource.AUTO_CHECK,
                    rationale="now applicable under the recorded engagement facts",
                    evaluator=AUTO_EVALUATOR,
                    timestamp=at,
                )
            )
    return records
