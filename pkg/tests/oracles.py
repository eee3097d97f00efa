"""Independent oracles the implementation is checked against.

These deliberately avoid the code paths of the package under test: Fisher
uses the factorial form of the hypergeometric pmf in exact rational
arithmetic, the z-test p-value comes from scipy's normal distribution, and
the rollup oracle is a separate formulation of the aggregation rules.
"""

from __future__ import annotations

import math
from fractions import Fraction

import scipy.stats

from critaudit.criteria import (
    CriteriaManifest,
    CriterionNode,
    EvaluationRecord,
    EvaluationStatus,
)

# Matches the tie tolerance of the two-sided definition: tables whose
# probability is within relative 1e-7 of the observed one count as extreme.
TIE_FACTOR = Fraction(10**7 + 1, 10**7)


def hypergeom_pmf(x: int, n1: int, n2: int, m: int) -> Fraction:
    """P(X = x) for a 2x2 table with row sums n1, n2 and first column sum m."""
    total = n1 + n2
    f = math.factorial
    return Fraction(
        f(n1) * f(n2) * f(m) * f(total - m),
        f(total) * f(x) * f(n1 - x) * f(m - x) * f(n2 - m + x),
    )


def fisher_two_sided_oracle(x1: int, n1: int, x2: int, n2: int) -> float:
    """Brute-force two-sided Fisher p over all tables with fixed margins."""
    m = x1 + x2
    observed = hypergeom_pmf(x1, n1, n2, m)
    threshold = observed * TIE_FACTOR
    total = Fraction(0)
    for x in range(max(0, m - n2), min(n1, m) + 1):
        p = hypergeom_pmf(x, n1, n2, m)
        if p <= threshold:
            total += p
    return float(total)


def z_test_oracle(x1: int, n1: int, x2: int, n2: int) -> tuple[float, float]:
    """Pooled-Z statistic (rational pooled proportion) and two-sided normal p."""
    pooled = Fraction(x1 + x2, n1 + n2)
    if pooled == 0 or pooled == 1:
        return 0.0, 1.0
    variance = float(pooled * (1 - pooled) * (Fraction(1, n1) + Fraction(1, n2)))
    z = (x1 / n1 - x2 / n2) / math.sqrt(variance)
    return z, 2.0 * float(scipy.stats.norm.sf(abs(z)))


_NA = EvaluationStatus.NOT_APPLICABLE


def rollup_oracle(
    manifest: CriteriaManifest, records: list[EvaluationRecord]
) -> dict[str, EvaluationStatus]:
    """Separate formulation of the rollup semantics.

    Phase 1 marks the not-applicable set (own stamp or inherited); phase 2
    aggregates bottom-up with explicit precedence checks instead of a
    severity ordering.
    """
    latest: dict[str, EvaluationRecord] = {}
    for record in records:
        latest[record.criterion_id] = record

    not_applicable: set[str] = set()

    def mark_na(node: CriterionNode, inherited: bool) -> None:
        own = latest.get(node.id)
        is_na = inherited or (own is not None and own.status is _NA)
        if is_na:
            not_applicable.add(node.id)
        for child in node.children:
            mark_na(child, is_na)

    for section in manifest.sections:
        mark_na(section, False)

    out: dict[str, EvaluationStatus] = {}

    def status_of(node: CriterionNode) -> EvaluationStatus:
        for child in node.children:
            status_of(child)
        if node.id in not_applicable:
            out[node.id] = _NA
            return _NA
        gathered: list[EvaluationStatus] = [
            out[child.id] for child in node.children if out[child.id] is not _NA
        ]
        own = latest.get(node.id)
        if own is not None:
            gathered.append(own.status)
        if not gathered:
            result = EvaluationStatus.PENDING
        elif EvaluationStatus.NOT_MET in gathered:
            result = EvaluationStatus.NOT_MET
        elif EvaluationStatus.NEEDS_MORE_EVIDENCE in gathered:
            result = EvaluationStatus.NEEDS_MORE_EVIDENCE
        elif EvaluationStatus.PENDING in gathered:
            result = EvaluationStatus.PENDING
        else:
            result = EvaluationStatus.MET
        out[node.id] = result
        return result

    for section in manifest.sections:
        status_of(section)
    return out
