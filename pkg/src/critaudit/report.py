"""Audit report rendering and certification.

The canonical report is a JSON document with a fixed required-content list;
rendering is a pure function of engagement state, so identical state yields
byte-identical canonical output.  The public profile is a strict projection
of the full document (redaction deletes keys, never rewrites values), and
the human-readable report is Markdown generated from the canonical document.
Certification binds the outcome to the SHA-256 of the canonical rendering.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Mapping

from .canonical import document_digest
from .criteria import CriteriaManifest, Verdict, rollup
from .engagement import Engagement, EngagementState, advance_state
from .errors import IllegalState, ReportIncomplete, TamperedReport, ValidationError
from .stats import format_group, group_from_json

REQUIRED_SECTIONS = (
    "report_date",
    "engagement",
    "scope",
    "system_description",
    "responsibilities",
    "independence_statement",
    "assurance_level",
    "criterion_statuses",
    "outcome",
    "formal_opinion",
    "summary_of_work",
    "analysis_disclosures",
)

_SECTION_LABELS = {
    "report_date": "report date",
    "engagement": "engagement identification",
    "scope": "scope",
    "system_description": "system description",
    "responsibilities": "responsibilities statements",
    "independence_statement": "independence statement",
    "assurance_level": "assurance level",
    "criterion_statuses": "per-criterion statuses",
    "outcome": "audit outcome",
    "formal_opinion": "formal opinion",
    "summary_of_work": "summary of work",
    "analysis_disclosures": "analysis disclosures",
}

PROFILES = ("full", "public")

AUDITOR_RESPONSIBILITY = (
    "The auditor is responsible for evaluating the evidence submitted by the "
    "auditee against every applicable criterion of the framework, verifying "
    "its truthfulness, and expressing an opinion on whether the audited "
    "system satisfies the criteria."
)
AUDITEE_RESPONSIBILITY = (
    "The auditee is responsible for performing the assessed procedures, for "
    "the completeness and accuracy of the submitted evidence, and for the "
    "design and operation of the audited system."
)


def independence_statement(engagement: Engagement) -> str:
    text = (
        "The auditor attests to having had no involvement in using, developing, "
        "or distributing the audited system, and to holding no contractual or "
        "financial interest in the organizations using, developing, or "
        "distributing it."
    )
    safeguards = engagement.independence.safeguards_description.strip()
    if safeguards:
        text += " Safeguards against conflicts of interest: " + safeguards
    return text


def validate_report_document(document: Mapping) -> None:
    """Enforce the required-content checklist on a report document."""
    for key in REQUIRED_SECTIONS:
        value = document.get(key)
        if value is None or value == "" or value == {} or value == []:
            raise ReportIncomplete(f"report is missing its {_SECTION_LABELS[key]} section")
    if "verdict" not in document["outcome"]:
        raise ReportIncomplete("report outcome carries no verdict")


def render_report(
    engagement: Engagement,
    manifest: CriteriaManifest,
    *,
    profile: str = "full",
    enforce_state: bool = True,
    report_date: date | None = None,
) -> dict:
    """Render the canonical report document for one engagement.

    ``enforce_state=False`` supports previews from earlier stages; the real
    report requires the reporting stage and a recorded outcome.
    """
    if profile not in PROFILES:
        raise ValidationError(f"unknown report profile {profile!r}")
    if enforce_state and engagement.state is not EngagementState.REPORTING:
        raise IllegalState(
            f"reports are rendered in the reporting stage, not {engagement.state.value}"
        )
    outcome = engagement.outcome
    if outcome is None:
        raise IllegalState("the audit outcome has not been determined")
    when = report_date or engagement.report_date
    if when is None:
        raise IllegalState("no report date recorded")

    statuses = rollup(manifest, engagement.evaluations)
    verified = sum(1 for i in engagement.evidence if i.status.value == "verified")
    rejected = sum(1 for i in engagement.evidence if i.status.value == "rejected")
    opinions = sum(1 for r in engagement.evaluations if r.source.value == "auditor_opinion")

    document: dict = {
        "report_kind": "criterion-audit-report",
        "schema_version": "1",
        "profile": profile,
        "report_date": when.isoformat(),
        "engagement": {
            "id": engagement.id,
            "framework_id": engagement.framework_id,
            "framework_version": manifest.version,
            "start_date": engagement.start_date.isoformat(),
            "auditee": engagement.auditee.to_dict(),
            "auditor": engagement.auditor.to_dict(),
            "audited_system_name": engagement.audited_system.name,
        },
        "scope": {
            "in_scope": list(engagement.in_scope),
            "out_of_scope": list(engagement.out_of_scope),
        },
        "system_description": engagement.audited_system.description,
        "system_components": list(engagement.audited_system.components),
        "responsibilities": {
            "auditor": AUDITOR_RESPONSIBILITY,
            "auditee": AUDITEE_RESPONSIBILITY,
        },
        "independence_statement": independence_statement(engagement),
        "assurance_level": engagement.assurance_level,
        "criterion_statuses": {node_id: status.value for node_id, status in statuses.items()},
        "outcome": outcome.to_dict(),
        "formal_opinion": outcome.formal_opinion,
        "summary_of_work": {
            "evidence_items": len(engagement.evidence),
            "evidence_verified": verified,
            "evidence_rejected": rejected,
            "opinions_recorded": opinions,
            "verification_loops": engagement.verification_loops,
            "state_transitions": len(engagement.transitions),
        },
        "analysis_disclosures": (
            engagement.analysis.to_dict() if engagement.analysis else None
        ),
        "evidence_ledger": [item.to_dict() for item in engagement.evidence],
        "evaluation_records": [record.to_dict() for record in engagement.evaluations],
    }
    validate_report_document(document)
    if profile == "public":
        document = redact_for_public(document)
    return document


def redact_for_public(document: dict) -> dict:
    """Public projection: drop evidence digests and auditee-internal detail.

    Deletion-only, so every field of the public document appears unchanged
    in the full document.  Criterion statuses and all quantitative
    disclosures stay.
    """
    public = dict(document)
    public["profile"] = "public"
    public.pop("evaluation_records", None)
    public["evidence_ledger"] = [
        {k: v for k, v in item.items() if k in ("id", "kind", "title", "status")}
        for item in document.get("evidence_ledger", ())
    ]
    engagement_section = dict(public["engagement"])
    auditee = {
        k: v for k, v in engagement_section.get("auditee", {}).items() if k != "contact"
    }
    engagement_section["auditee"] = auditee
    public["engagement"] = engagement_section
    return public


@dataclass(frozen=True)
class Certification:
    """Certification artifact binding the outcome to one exact report."""

    engagement_id: str
    framework_id: str
    verdict: Verdict
    issue_date: date
    report_digest: str
    explanation: str = ""

    def to_dict(self) -> dict:
        return {
            "certification_kind": "criterion-audit-certification",
            "engagement_id": self.engagement_id,
            "framework_id": self.framework_id,
            "verdict": self.verdict.value,
            "issue_date": self.issue_date.isoformat(),
            "report_digest": self.report_digest,
            "explanation": self.explanation,
        }


def issue_certification(
    engagement: Engagement,
    report_document: Mapping,
    *,
    issue_date: date | None = None,
) -> Certification:
    """Certify a rendered report and advance the engagement to certified.

    The document must hash to the digest recorded when the report was
    rendered; any edit since then is a tampered report.
    """
    if engagement.state is not EngagementState.REPORTING:
        raise IllegalState(
            f"certification issues from the reporting stage, not {engagement.state.value}"
        )
    if engagement.outcome is None:
        raise IllegalState("the audit outcome has not been determined")
    if engagement.report_digest is None:
        raise IllegalState("no report has been rendered for this engagement")
    digest = document_digest(dict(report_document))
    if digest != engagement.report_digest:
        raise TamperedReport(
            "the presented report does not match the digest of the rendered report"
        )
    explanation = ""
    if engagement.outcome.verdict is Verdict.DISCLAIMER_OF_OPINION:
        explanation = engagement.outcome.formal_opinion
    certification = Certification(
        engagement_id=engagement.id,
        framework_id=engagement.framework_id,
        verdict=engagement.outcome.verdict,
        issue_date=issue_date or engagement.report_date or engagement.start_date,
        report_digest=digest,
        explanation=explanation,
    )
    advance_state(engagement, EngagementState.CERTIFIED, actor=engagement.auditor.name)
    return certification


# ---------------------------------------------------------------------------
# Markdown rendering


_STATUS_LABELS = {
    "met": "Met",
    "not_met": "Not met",
    "not_applicable": "Not applicable",
    "pending": "Pending",
    "needs_more_evidence": "Needs more evidence",
}

_VERDICT_LABELS = {
    "pass": "Pass",
    "pass_with_comments": "Pass with comments",
    "fail": "Fail",
    "disclaimer_of_opinion": "Disclaimer of opinion",
}

_AXIS_TITLES = {
    "race_ethnicity": "Race/ethnicity",
    "gender": "Gender",
    "intersectional": "Intersectional",
}


def _md_escape(value: object) -> str:
    return str(value).replace("|", "\\|").replace("\n", " ")


def _fmt(value: float | None, places: int = 4) -> str:
    if value is None:
        return "-"
    return f"{value:.{places}f}"


def _group_cell(raw) -> str:
    return _md_escape(format_group(group_from_json(raw)))


def render_markdown(document: Mapping, manifest: CriteriaManifest) -> str:
    """Human-readable report generated from the canonical document."""
    engagement = document["engagement"]
    outcome = document["outcome"]
    lines: list[str] = []
    push = lines.append

    push(f"# Criterion Audit Report: {_md_escape(engagement['audited_system_name'])}")
    push("")
    push(f"- Framework: `{engagement['framework_id']}` (version {engagement['framework_version']})")
    push(f"- Engagement: `{engagement['id']}`")
    push(f"- Auditee: {_md_escape(engagement['auditee']['name'])}")
    push(
        f"- Auditor: {_md_escape(engagement['auditor']['name'])}"
        + (
            f" ({_md_escape(engagement['auditor']['organization'])})"
            if engagement["auditor"].get("organization")
            else ""
        )
    )
    push(f"- Report date: {document['report_date']}")
    push(f"- Assurance level: {document['assurance_level']}")
    push("")

    push("## Outcome")
    push("")
    push(f"**{_VERDICT_LABELS[outcome['verdict']]}**")
    push("")
    push(document["formal_opinion"])
    push("")
    if outcome.get("comments"):
        push("Comments:")
        push("")
        for comment in outcome["comments"]:
            push(f"- {_md_escape(comment)}")
        push("")

    push("## System Description")
    push("")
    push(document["system_description"])
    push("")
    if document.get("system_components"):
        push("Components:")
        push("")
        for component in document["system_components"]:
            push(f"- {_md_escape(component)}")
        push("")

    push("## Scope")
    push("")
    push("In scope:")
    push("")
    for item in document["scope"]["in_scope"]:
        push(f"- {_md_escape(item)}")
    push("")
    push("Out of scope:")
    push("")
    for item in document["scope"]["out_of_scope"]:
        push(f"- {_md_escape(item)}")
    push("")

    push("## Criterion Statuses")
    push("")
    statuses = document["criterion_statuses"]
    for section in manifest.sections:
        push(f"### Section {section.id}: {_md_escape(section.text)}")
        push("")
        push("| Criterion | Status | Text |")
        push("|-----------|--------|------|")
        for node in section.walk():
            if node.id == section.id:
                continue
            status = _STATUS_LABELS.get(statuses.get(node.id, "pending"), "Pending")
            push(f"| {node.id} | {status} | {_md_escape(node.text)} |")
        section_status = _STATUS_LABELS.get(statuses.get(section.id, "pending"), "Pending")
        push("")
        push(f"Section result: **{section_status}**")
        push("")

    analysis = document.get("analysis_disclosures")
    if analysis:
        push("## Disparate Impact Analysis")
        push("")
        push(f"- Rate method: {analysis['method']}")
        window = analysis["collection_window"]
        push(f"- Dataset collection window: {window['start']} to {window['end']}")
        push(f"- Analysis start date: {analysis['analysis_date']}")
        if analysis.get("median_score") is not None:
            push(f"- Whole-sample median score: {analysis['median_score']}")
        push(
            f"- Candidates with unknown demographics: "
            f"{analysis['unknown_demographics_n']}"
        )
        if analysis.get("settings_used"):
            settings = ", ".join(
                f"{name}={value}" for name, value in sorted(analysis["settings_used"].items())
            )
            push(f"- Tool settings used: {settings}")
        push("")
        for axis in analysis["axes"]:
            push(f"### {_AXIS_TITLES[axis['axis']]} axis")
            push("")
            favored = _group_cell(axis["favored_group"])
            tie_note = " (tied; smallest label reported)" if axis.get("favored_tied") else ""
            push(f"Favored group: **{favored}**{tie_note}")
            push("")
            push("| Group | n | Rate | Std. error | Impact ratio | Ratio error | Below 0.8 | Excluded (<2%) | p-value |")
            push("|-------|---|------|-----------|--------------|-------------|-----------|----------------|---------|")
            ratios = {tuple_or_str(e["group"]): e for e in axis["impact_ratios"]}
            for rate in axis["rates"]:
                entry = ratios.get(tuple_or_str(rate["group"]))
                ratio = _fmt(entry["ratio"]) if entry else "-"
                ratio_err = _fmt(entry["ratio_std_error"]) if entry else "-"
                below = "yes" if entry and entry["below_fourfifths"] else "no"
                excluded = "yes" if entry and entry["excluded_small_group"] else "no"
                significance = entry.get("significance") if entry else None
                p_value = _fmt(significance["p_value"]) if significance else "-"
                push(
                    f"| {_group_cell(rate['group'])} | {rate['n']} | {_fmt(rate['rate'])} "
                    f"| {_fmt(rate['std_error'])} | {ratio} | {ratio_err} | {below} "
                    f"| {excluded} | {p_value} |"
                )
            push("")
            if axis.get("unknown_n"):
                push(f"Records with unknown {_AXIS_TITLES[axis['axis']].lower()}: {axis['unknown_n']}")
                push("")
            if axis.get("empty_groups"):
                empty = ", ".join(_group_cell(g) for g in axis["empty_groups"])
                push(f"Groups with no records (disclosed, no rate computable): {empty}")
                push("")

    push("## Summary of Work")
    push("")
    work = document["summary_of_work"]
    push(f"- Evidence items submitted: {work['evidence_items']}")
    push(f"- Evidence items verified: {work['evidence_verified']}")
    push(f"- Evidence items rejected: {work['evidence_rejected']}")
    push(f"- Auditor opinions recorded: {work['opinions_recorded']}")
    push(f"- Additional-documentation loops: {work['verification_loops']}")
    push(f"- Lifecycle transitions: {work['state_transitions']}")
    push("")

    if document.get("evidence_ledger"):
        push("## Evidence Ledger")
        push("")
        push("| Id | Kind | Title | Status |")
        push("|----|------|-------|--------|")
        for item in document["evidence_ledger"]:
            push(
                f"| {item['id']} | {item['kind']} | {_md_escape(item['title'])} "
                f"| {item['status']} |"
            )
        push("")

    push("## Responsibilities")
    push("")
    push(f"Auditor: {document['responsibilities']['auditor']}")
    push("")
    push(f"Auditee: {document['responsibilities']['auditee']}")
    push("")
    push("## Independence")
    push("")
    push(document["independence_statement"])
    push("")
    return "\n".join(lines)


def tuple_or_str(raw):
    return tuple(raw) if isinstance(raw, list) else raw
