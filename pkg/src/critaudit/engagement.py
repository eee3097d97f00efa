"""Audit engagement lifecycle, evidence ledger, and on-disk store.

An engagement walks a fixed five-stage state machine (scoping, documentation
submission, evidence verification, reporting, certification, plus a terminal
withdrawal).  Evidence enters an append-only ledger as metadata plus a
SHA-256 digest; document bytes never persist here.  Independence is attested
at creation and a violated attestation blocks the engagement outright.

Persistence is one directory per engagement: ``engagement.json`` (state,
facts, parties) plus three append-only JSON-lines files for the ledger,
the evaluation log, and the transition log.  ``engagement.json`` records the
committed line count of each log and is replaced atomically last, so an
interrupted write leaves the previous logical state intact; stray lines past
the committed counts are repaired on the next save.
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .canonical import canonical_json, document_digest, sha256_hex
from .checks import derived_facts
from .criteria import (
    AuditOutcome,
    CriteriaManifest,
    EvaluationRecord,
    EvaluationSource,
    EvaluationStatus,
    applicable_ids,
    build_opinion,
    latest_records,
    rollup,
)
from .errors import (
    IllegalState,
    IllegalTransition,
    IncompleteEvaluation,
    IndependenceViolation,
    NotFound,
    ValidationError,
)
from .stats import AnalysisReport, analysis_report_from_dict


class EngagementState(str, Enum):
    SCOPING = "scoping"
    DOCUMENTATION_SUBMISSION = "documentation_submission"
    EVIDENCE_VERIFICATION = "evidence_verification"
    REPORTING = "reporting"
    CERTIFIED = "certified"
    WITHDRAWN = "withdrawn"


# The legal transition relation.  The evidence-verification loop back to
# documentation submission is unbounded; every pass through it is counted
# and disclosed in the report's summary of work.
TRANSITIONS: dict[EngagementState, frozenset[EngagementState]] = {
    EngagementState.SCOPING: frozenset(
        {EngagementState.DOCUMENTATION_SUBMISSION, EngagementState.WITHDRAWN}
    ),
    EngagementState.DOCUMENTATION_SUBMISSION: frozenset(
        {EngagementState.EVIDENCE_VERIFICATION, EngagementState.WITHDRAWN}
    ),
    EngagementState.EVIDENCE_VERIFICATION: frozenset(
        {
            EngagementState.DOCUMENTATION_SUBMISSION,
            EngagementState.REPORTING,
            EngagementState.WITHDRAWN,
        }
    ),
    EngagementState.REPORTING: frozenset(
        {EngagementState.CERTIFIED, EngagementState.WITHDRAWN}
    ),
    EngagementState.CERTIFIED: frozenset({EngagementState.WITHDRAWN}),
    EngagementState.WITHDRAWN: frozenset(),
}

_EVIDENCE_STATES = (
    EngagementState.DOCUMENTATION_SUBMISSION,
    EngagementState.EVIDENCE_VERIFICATION,
)

RATE_METHODS = ("selection", "scoring")


class EvidenceKind(str, Enum):
    DOCUMENT = "document"
    DATASET = "dataset"
    TESTIMONY = "testimony"
    RECOMPUTATION = "recomputation"
    LOG = "log"


class VerificationStatus(str, Enum):
    UNVERIFIED = "unverified"
    VERIFIED = "verified"
    REJECTED = "rejected"


class VerificationMethod(str, Enum):
    LOG_INSPECTION = "log_inspection"
    REPERFORMANCE_OBSERVATION = "reperformance_observation"
    RECOMPUTATION = "recomputation"
    INTERVIEW = "interview"


@dataclass(frozen=True)
class VerificationRecord:
    method: VerificationMethod
    verifier: str
    finding: str
    timestamp: str

    def __post_init__(self) -> None:
        if not self.finding.strip():
            raise ValidationError("a verification record requires a nonempty finding")

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "verifier": self.verifier,
            "finding": self.finding,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "VerificationRecord":
        return cls(
            method=VerificationMethod(raw["method"]),
            verifier=raw.get("verifier", ""),
            finding=raw["finding"],
            timestamp=raw.get("timestamp", ""),
        )


@dataclass(frozen=True)
class EvidenceItem:
    """Ledger entry for one piece of submitted evidence.

    Only the digest of the content bytes is retained; the bytes themselves
    stay outside the engine so confidential documents never enter the report
    pipeline.
    """

    id: str
    kind: EvidenceKind
    title: str
    digest: str
    submitted_at: str
    status: VerificationStatus = VerificationStatus.UNVERIFIED
    verification: VerificationRecord | None = None
    duplicate_of: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "title": self.title,
            "digest": self.digest,
            "submitted_at": self.submitted_at,
            "status": self.status.value,
            "verification": self.verification.to_dict() if self.verification else None,
            "duplicate_of": self.duplicate_of,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "EvidenceItem":
        verification = raw.get("verification")
        return cls(
            id=raw["id"],
            kind=EvidenceKind(raw["kind"]),
            title=raw["title"],
            digest=raw["digest"],
            submitted_at=raw.get("submitted_at", ""),
            status=VerificationStatus(raw.get("status", "unverified")),
            verification=VerificationRecord.from_dict(verification) if verification else None,
            duplicate_of=raw.get("duplicate_of"),
        )


@dataclass(frozen=True)
class IndependenceAttestation:
    involved_in_use_dev_distribution: bool = False
    contractual_interest: bool = False
    financial_interest: bool = False
    safeguards_description: str = ""

    def violations(self) -> list[str]:
        found = []
        if self.involved_in_use_dev_distribution:
            found.append("involvement in using, developing, or distributing the audited system")
        if self.contractual_interest:
            found.append("contractual interest")
        if self.financial_interest:
            found.append("financial interest")
        return found

    def to_dict(self) -> dict:
        return {
            "involved_in_use_dev_distribution": self.involved_in_use_dev_distribution,
            "contractual_interest": self.contractual_interest,
            "financial_interest": self.financial_interest,
            "safeguards_description": self.safeguards_description,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "IndependenceAttestation":
        return cls(
            involved_in_use_dev_distribution=raw.get("involved_in_use_dev_distribution", False),
            contractual_interest=raw.get("contractual_interest", False),
            financial_interest=raw.get("financial_interest", False),
            safeguards_description=raw.get("safeguards_description", ""),
        )


@dataclass(frozen=True)
class Organization:
    name: str
    contact: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "contact": self.contact}

    @classmethod
    def from_dict(cls, raw: Mapping) -> "Organization":
        return cls(name=raw["name"], contact=raw.get("contact", ""))


@dataclass(frozen=True)
class AuditorIdentity:
    name: str
    organization: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "organization": self.organization}

    @classmethod
    def from_dict(cls, raw: Mapping) -> "AuditorIdentity":
        return cls(name=raw["name"], organization=raw.get("organization", ""))


@dataclass(frozen=True)
class AuditedSystem:
    name: str
    description: str
    components: tuple[str, ...] = ()
    settings_catalog: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ValidationError("the audited system requires a nonempty description")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "components": list(self.components),
            "settings_catalog": dict(self.settings_catalog),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "AuditedSystem":
        return cls(
            name=raw["name"],
            description=raw["description"],
            components=tuple(raw.get("components", ())),
            settings_catalog=dict(raw.get("settings_catalog", {})),
        )


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    actor: str
    timestamp: str
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "actor": self.actor,
            "timestamp": self.timestamp,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "Transition":
        return cls(
            source=raw["source"],
            target=raw["target"],
            actor=raw.get("actor", ""),
            timestamp=raw.get("timestamp", ""),
            note=raw.get("note", ""),
        )


DEFAULT_IN_SCOPE = (
    "Disparate impact analysis of the audited tool",
    "Governance of disparate-impact risk",
    "Risk assessment of the audited tool with a focus on bias",
)
DEFAULT_OUT_OF_SCOPE = (
    "Construction or validation of demographic inference models",
    "Model-internal fairness metrics beyond the disclosed impact ratios",
    "Anonymization of the analyzed dataset",
)


@dataclass
class Engagement:
    """One complete audit of one system, from scoping to certification."""

    id: str
    auditee: Organization
    audited_system: AuditedSystem
    auditor: AuditorIdentity
    framework_id: str
    independence: IndependenceAttestation
    start_date: date
    state: EngagementState = EngagementState.SCOPING
    assurance_level: str = "limited"
    in_scope: tuple[str, ...] = DEFAULT_IN_SCOPE
    out_of_scope: tuple[str, ...] = DEFAULT_OUT_OF_SCOPE
    facts: dict = field(default_factory=dict)
    evidence: list[EvidenceItem] = field(default_factory=list)
    evaluations: list[EvaluationRecord] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)
    analysis: AnalysisReport | None = None
    outcome: AuditOutcome | None = None
    report_date: date | None = None
    report_digest: str | None = None

    @property
    def verification_loops(self) -> int:
        return sum(
            1
            for t in self.transitions
            if t.source == EngagementState.EVIDENCE_VERIFICATION.value
            and t.target == EngagementState.DOCUMENTATION_SUBMISSION.value
        )

    def evidence_item(self, item_id: str) -> EvidenceItem:
        for item in self.evidence:
            if item.id == item_id:
                return item
        raise NotFound(f"no evidence item with id {item_id!r}")


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _timestamp(engagement: Engagement, at: str | None) -> str:
    if at is None:
        return _now_iso()
    try:
        stamp = datetime.fromisoformat(at)
    except ValueError:
        raise ValidationError(f"timestamp {at!r} is not ISO 8601") from None
    if stamp.date() < engagement.start_date:
        raise ValidationError(
            f"timestamp {at} predates the engagement start {engagement.start_date.isoformat()}"
        )
    return at


def create_engagement(
    auditee: Organization,
    system: AuditedSystem,
    auditor: AuditorIdentity,
    framework_id: str,
    attestation: IndependenceAttestation,
    *,
    engagement_id: str | None = None,
    start_date: date | None = None,
    assurance_level: str = "limited",
    in_scope: Sequence[str] = DEFAULT_IN_SCOPE,
    out_of_scope: Sequence[str] = DEFAULT_OUT_OF_SCOPE,
) -> Engagement:
    """Open a new engagement in the scoping stage.

    Any true independence flag aborts creation; an engagement with a
    conflicted auditor must never exist.
    """
    violations = attestation.violations()
    if violations:
        raise IndependenceViolation(
            "auditor independence violated: " + "; ".join(violations)
        )
    return Engagement(
        id=engagement_id or f"eng-{uuid.uuid4().hex[:12]}",
        auditee=auditee,
        audited_system=system,
        auditor=auditor,
        framework_id=framework_id,
        independence=attestation,
        start_date=start_date or datetime.now(timezone.utc).date(),
        assurance_level=assurance_level,
        in_scope=tuple(in_scope),
        out_of_scope=tuple(out_of_scope),
    )


def record_scoping(engagement: Engagement, answers: Mapping) -> dict:
    """Merge scoping questionnaire answers into the engagement facts."""
    if engagement.state is not EngagementState.SCOPING:
        raise IllegalState(
            f"scoping facts can only be recorded in the scoping stage, "
            f"not {engagement.state.value}"
        )
    if "method" in answers and answers["method"] not in RATE_METHODS:
        raise ValidationError(
            f"fact method must be one of {RATE_METHODS}, got {answers['method']!r}"
        )
    engagement.facts.update(dict(answers))
    return dict(engagement.facts)


def submit_evidence(
    engagement: Engagement,
    kind: EvidenceKind,
    title: str,
    content: bytes | None = None,
    *,
    digest: str | None = None,
    at: str | None = None,
) -> EvidenceItem:
    """Append an evidence item to the ledger.

    Exactly one of ``content`` (hashed here) or a precomputed ``digest`` must
    be given.  A digest already present in the ledger is flagged as a
    duplicate but still appended.
    """
    if engagement.state not in _EVIDENCE_STATES:
        raise IllegalState(
            f"evidence cannot be submitted in the {engagement.state.value} stage"
        )
    if (content is None) == (digest is None):
        raise ValidationError("provide either content bytes or a precomputed digest")
    if content is not None:
        digest = sha256_hex(content)
    assert digest is not None
    duplicate_of = next((i.id for i in engagement.evidence if i.digest == digest), None)
    item = EvidenceItem(
        id=f"ev-{len(engagement.evidence) + 1:04d}",
        kind=kind,
        title=title,
        digest=digest,
        submitted_at=_timestamp(engagement, at),
        duplicate_of=duplicate_of,
    )
    engagement.evidence.append(item)
    return item


def verify_evidence(
    engagement: Engagement,
    item_id: str,
    record: VerificationRecord,
    verdict: VerificationStatus,
) -> EvidenceItem:
    """Mark an evidence item verified or rejected.

    Rejection downgrades every criterion whose latest evaluation cites the
    item to needs-more-evidence, so a discredited document cannot keep a
    criterion met.
    """
    if engagement.state is not EngagementState.EVIDENCE_VERIFICATION:
        raise IllegalState(
            f"evidence can only be verified in the evidence-verification stage, "
            f"not {engagement.state.value}"
        )
    if verdict not in (VerificationStatus.VERIFIED, VerificationStatus.REJECTED):
        raise ValidationError(f"verification verdict cannot be {verdict.value!r}")
    item = engagement.evidence_item(item_id)
    if item.status is not VerificationStatus.UNVERIFIED:
        raise IllegalState(f"evidence item {item_id} was already {item.status.value}")
    updated = replace(item, status=verdict, verification=record)
    engagement.evidence[engagement.evidence.index(item)] = updated

    if verdict is VerificationStatus.REJECTED:
        for criterion_id, latest in latest_records(engagement.evaluations).items():
            if item_id in latest.evidence_refs and latest.status in (
                EvaluationStatus.MET,
                EvaluationStatus.NOT_MET,
            ):
                engagement.evaluations.append(
                    EvaluationRecord(
                        criterion_id=criterion_id,
                        status=EvaluationStatus.NEEDS_MORE_EVIDENCE,
                        source=EvaluationSource.AUTO_CHECK,
                        evidence_refs=(item_id,),
                        rationale=f"supporting evidence {item_id} was rejected: {record.finding}",
                        evaluator=record.verifier,
                        timestamp=record.timestamp,
                    )
                )
    return updated


def record_opinion(
    engagement: Engagement,
    manifest: CriteriaManifest,
    criterion_id: str,
    status: EvaluationStatus,
    *,
    evidence_refs: Sequence[str] = (),
    rationale: str = "",
    evaluator: str = "",
    at: str | None = None,
) -> EvaluationRecord:
    """Record an auditor opinion in the engagement's evaluation log."""
    if engagement.state not in _EVIDENCE_STATES:
        raise IllegalState(
            f"opinions cannot be recorded in the {engagement.state.value} stage"
        )
    for ref in evidence_refs:
        engagement.evidence_item(ref)  # must exist
    record = build_opinion(
        manifest,
        engagement.facts,
        criterion_id,
        status,
        evidence_refs=evidence_refs,
        rationale=rationale,
        evaluator=evaluator,
        timestamp=_timestamp(engagement, at),
    )
    engagement.evaluations.append(record)
    return record


def attach_analysis(engagement: Engagement, analysis: AnalysisReport) -> None:
    """Attach the recomputed analysis and inject its derived facts."""
    if engagement.state not in _EVIDENCE_STATES:
        raise IllegalState(
            f"an analysis cannot be attached in the {engagement.state.value} stage"
        )
    engagement.analysis = analysis
    engagement.facts.update(derived_facts(analysis))


def add_comment(engagement: Engagement, text: str) -> None:
    """Attach a report comment (for example from the auditee's factual review)."""
    if engagement.state is not EngagementState.REPORTING:
        raise IllegalState("report comments attach during the reporting stage")
    if not text.strip():
        raise ValidationError("a comment requires text")
    engagement.comments.append(text.strip())


def record_outcome(
    engagement: Engagement, outcome: AuditOutcome, report_date: date
) -> None:
    if engagement.state is not EngagementState.REPORTING:
        raise IllegalState("the outcome is determined in the reporting stage")
    engagement.outcome = outcome
    engagement.report_date = report_date
    engagement.facts["report_date"] = report_date.isoformat()


def unresolved_nodes(
    engagement: Engagement, manifest: CriteriaManifest
) -> list[str]:
    """Applicable criteria still pending or awaiting more evidence."""
    statuses = rollup(manifest, engagement.evaluations)
    applicable = applicable_ids(manifest, engagement.facts)
    return sorted(
        node_id
        for node_id, status in statuses.items()
        if node_id in applicable
        and status in (EvaluationStatus.PENDING, EvaluationStatus.NEEDS_MORE_EVIDENCE)
    )


def advance_state(
    engagement: Engagement,
    target: EngagementState,
    *,
    manifest: CriteriaManifest | None = None,
    actor: str = "",
    note: str = "",
    at: str | None = None,
) -> EngagementState:
    """Move the engagement to ``target`` if the transition is legal.

    Entering reporting requires every applicable criterion resolved (needs a
    manifest to evaluate); entering certification requires a recorded
    outcome.
    """
    source = engagement.state
    if target not in TRANSITIONS[source]:
        raise IllegalTransition(
            f"no legal transition from {source.value} to {target.value}"
        )
    if target is EngagementState.REPORTING:
        if manifest is None:
            raise ValidationError(
                "advancing to reporting requires the criteria manifest"
            )
        open_nodes = unresolved_nodes(engagement, manifest)
        if open_nodes:
            raise IncompleteEvaluation(
                "cannot enter reporting; unresolved criteria: " + ", ".join(open_nodes)
            )
    if target is EngagementState.CERTIFIED and engagement.outcome is None:
        raise IllegalTransition(
            "cannot certify an engagement without a recorded audit outcome"
        )
    engagement.transitions.append(
        Transition(
            source=source.value,
            target=target.value,
            actor=actor,
            timestamp=_timestamp(engagement, at),
            note=note,
        )
    )
    engagement.state = target
    return target


# ---------------------------------------------------------------------------
# Persistence


def _engagement_header(engagement: Engagement) -> dict:
    return {
        "id": engagement.id,
        "framework_id": engagement.framework_id,
        "state": engagement.state.value,
        "start_date": engagement.start_date.isoformat(),
        "assurance_level": engagement.assurance_level,
        "auditee": engagement.auditee.to_dict(),
        "audited_system": engagement.audited_system.to_dict(),
        "auditor": engagement.auditor.to_dict(),
        "independence": engagement.independence.to_dict(),
        "in_scope": list(engagement.in_scope),
        "out_of_scope": list(engagement.out_of_scope),
        "facts": dict(engagement.facts),
        "comments": list(engagement.comments),
        "outcome": engagement.outcome.to_dict() if engagement.outcome else None,
        "report_date": engagement.report_date.isoformat() if engagement.report_date else None,
        "report_digest": engagement.report_digest,
        "analysis_attached": engagement.analysis is not None,
        "counts": {
            "ledger": len(engagement.evidence),
            "evaluations": len(engagement.evaluations),
            "transitions": len(engagement.transitions),
        },
    }


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _read_prefix_lines(path: Path, count: int) -> list[dict]:
    if not path.exists():
        if count:
            raise ValidationError(f"store file {path} is missing {count} committed lines")
        return []
    lines = path.read_text(encoding="utf-8").splitlines()
    if len(lines) < count:
        raise ValidationError(
            f"store file {path} has {len(lines)} lines but {count} were committed"
        )
    return [json.loads(line) for line in lines[:count]]


class EngagementStore:
    """Directory-per-engagement store under a single root."""

    ENGAGEMENT_FILE = "engagement.json"
    LEDGER_FILE = "ledger.jsonl"
    EVALUATIONS_FILE = "evaluations.jsonl"
    TRANSITIONS_FILE = "transitions.jsonl"
    ANALYSIS_FILE = "analysis.json"

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, engagement_id: str) -> Path:
        if "/" in engagement_id or "\\" in engagement_id or engagement_id in (".", ".."):
            raise ValidationError(f"invalid engagement id {engagement_id!r}")
        return self.root / engagement_id

    def exists(self, engagement_id: str) -> bool:
        return (self.path(engagement_id) / self.ENGAGEMENT_FILE).exists()

    def list_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / self.ENGAGEMENT_FILE).exists()
        )

    def create(self, engagement: Engagement) -> None:
        directory = self.path(engagement.id)
        if (directory / self.ENGAGEMENT_FILE).exists():
            raise ValidationError(f"engagement {engagement.id} already exists in the store")
        directory.mkdir(parents=True, exist_ok=True)
        for filename in (self.LEDGER_FILE, self.EVALUATIONS_FILE, self.TRANSITIONS_FILE):
            (directory / filename).touch()
        self.save(engagement)

    def save(self, engagement: Engagement) -> None:
        """Append new log lines, then commit the header atomically.

        The committed line counts in ``engagement.json`` define the logical
        content of the logs; anything past them (from an interrupted write)
        is truncated before appending, so a crash at any point leaves the
        store at the previous committed state.
        """
        directory = self.path(engagement.id)
        header_path = directory / self.ENGAGEMENT_FILE
        committed = {"ledger": 0, "evaluations": 0, "transitions": 0}
        if header_path.exists():
            committed = json.loads(header_path.read_text(encoding="utf-8"))["counts"]

        logs = (
            (self.LEDGER_FILE, "ledger", [i.to_dict() for i in engagement.evidence]),
            (
                self.EVALUATIONS_FILE,
                "evaluations",
                [r.to_dict() for r in engagement.evaluations],
            ),
            (
                self.TRANSITIONS_FILE,
                "transitions",
                [t.to_dict() for t in engagement.transitions],
            ),
        )
        for filename, key, rows in logs:
            if len(rows) < committed[key]:
                raise IllegalState(
                    f"stale engagement snapshot: {key} has {len(rows)} entries but "
                    f"{committed[key]} are committed"
                )
            self._repair_and_append(directory / filename, committed[key], rows)

        # Ledger entries can be verified in place; rewrite-by-append is not an
        # option for them, so verification state rides in the header snapshot.
        if engagement.analysis is not None:
            _atomic_write(
                directory / self.ANALYSIS_FILE,
                canonical_json(engagement.analysis.to_dict()) + "\n",
            )
        header = _engagement_header(engagement)
        header["ledger_state"] = [
            {
                "id": i.id,
                "status": i.status.value,
                "verification": i.verification.to_dict() if i.verification else None,
            }
            for i in engagement.evidence
        ]
        _atomic_write(header_path, canonical_json(header) + "\n")

    @staticmethod
    def _repair_and_append(path: Path, committed: int, rows: list[dict]) -> None:
        existing: list[str] = []
        if path.exists():
            existing = path.read_text(encoding="utf-8").splitlines()
        if len(existing) < committed:
            raise ValidationError(
                f"store file {path} has {len(existing)} lines but {committed} were committed"
            )
        if len(existing) > committed:
            _atomic_write(path, "".join(line + "\n" for line in existing[:committed]))
        new_lines = [canonical_json(row) + "\n" for row in rows[committed:]]
        if new_lines:
            with path.open("a", encoding="utf-8") as handle:
                handle.writelines(new_lines)
                handle.flush()
                os.fsync(handle.fileno())

    def load(self, engagement_id: str) -> Engagement:
        directory = self.path(engagement_id)
        header_path = directory / self.ENGAGEMENT_FILE
        if not header_path.exists():
            raise NotFound(f"no engagement {engagement_id!r} in store {self.root}")
        header = json.loads(header_path.read_text(encoding="utf-8"))
        counts = header["counts"]

        evidence_rows = _read_prefix_lines(directory / self.LEDGER_FILE, counts["ledger"])
        evidence = [EvidenceItem.from_dict(r) for r in evidence_rows]
        for patch in header.get("ledger_state", ()):
            for index, item in enumerate(evidence):
                if item.id == patch["id"]:
                    verification = patch.get("verification")
                    evidence[index] = replace(
                        item,
                        status=VerificationStatus(patch["status"]),
                        verification=(
                            VerificationRecord.from_dict(verification)
                            if verification
                            else None
                        ),
                    )

        evaluations = [
            EvaluationRecord.from_dict(r)
            for r in _read_prefix_lines(directory / self.EVALUATIONS_FILE, counts["evaluations"])
        ]
        transitions = [
            Transition.from_dict(r)
            for r in _read_prefix_lines(directory / self.TRANSITIONS_FILE, counts["transitions"])
        ]
        analysis = None
        if header.get("analysis_attached") and (directory / self.ANALYSIS_FILE).exists():
            analysis = analysis_report_from_dict(
                json.loads((directory / self.ANALYSIS_FILE).read_text(encoding="utf-8"))
            )

        outcome = header.get("outcome")
        report_date = header.get("report_date")
        return Engagement(
            id=header["id"],
            auditee=Organization.from_dict(header["auditee"]),
            audited_system=AuditedSystem.from_dict(header["audited_system"]),
            auditor=AuditorIdentity.from_dict(header["auditor"]),
            framework_id=header["framework_id"],
            independence=IndependenceAttestation.from_dict(header["independence"]),
            start_date=date.fromisoformat(header["start_date"]),
            state=EngagementState(header["state"]),
            assurance_level=header.get("assurance_level", "limited"),
            in_scope=tuple(header.get("in_scope", DEFAULT_IN_SCOPE)),
            out_of_scope=tuple(header.get("out_of_scope", DEFAULT_OUT_OF_SCOPE)),
            facts=dict(header.get("facts", {})),
            evidence=evidence,
            evaluations=evaluations,
            transitions=transitions,
            comments=list(header.get("comments", ())),
            analysis=analysis,
            outcome=AuditOutcome.from_dict(outcome) if outcome else None,
            report_date=date.fromisoformat(report_date) if report_date else None,
            report_digest=header.get("report_digest"),
        )

    def logical_state(self, engagement_id: str, *, drop_timestamps: bool = False) -> dict:
        """Committed logical content of one engagement (for digests and tests)."""
        engagement = self.load(engagement_id)
        state = _engagement_header(engagement)
        state["evidence"] = [i.to_dict() for i in engagement.evidence]
        state["evaluations"] = [r.to_dict() for r in engagement.evaluations]
        state["transitions"] = [t.to_dict() for t in engagement.transitions]
        state["analysis"] = engagement.analysis.to_dict() if engagement.analysis else None
        if drop_timestamps:
            state = _strip_keys(state, {"timestamp", "submitted_at"})
        return state

    def digest(self, engagement_id: str, *, drop_timestamps: bool = False) -> str:
        return document_digest(self.logical_state(engagement_id, drop_timestamps=drop_timestamps))


def _strip_keys(value, keys: set[str]):
    if isinstance(value, dict):
        return {k: _strip_keys(v, keys) for k, v in value.items() if k not in keys}
    if isinstance(value, list):
        return [_strip_keys(v, keys) for v in value]
    return value
