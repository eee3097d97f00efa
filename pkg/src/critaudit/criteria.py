"""Machine-readable criteria trees and their evaluation.

A :class:`CriteriaManifest` encodes a normative framework as a tree of
criteria and sub-criteria.  Evaluation records (automated checks and auditor
opinions) accumulate in an append-only log with latest-wins semantics;
:func:`rollup` folds the latest record of every node through the tree, and
:func:`determine_outcome` maps the rollup to the closed outcome taxonomy
Pass / PassWithComments / Fail / DisclaimerOfOpinion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from . import schemas
from .errors import (
    DuplicateCriterion,
    InapplicableCriterion,
    IncompleteEvaluation,
    KindMismatch,
    ManifestInvalid,
    MissingRationale,
    UnknownCriterion,
    UnresolvedFact,
    ValidationError,
)

DEFAULT_FRAMEWORK_ID = "nyc-ll144-2021"
_SHIPPED_MANIFEST = "nyc-ll144.criteria.json"

FactValue = bool | str | int | float
FactMap = Mapping[str, FactValue]


class CriterionKind(str, Enum):
    AUTO = "auto"
    MANUAL = "manual"
    HYBRID = "hybrid"


class EvaluationStatus(str, Enum):
    MET = "met"
    NOT_MET = "not_met"
    NOT_APPLICABLE = "not_applicable"
    PENDING = "pending"
    NEEDS_MORE_EVIDENCE = "needs_more_evidence"


# Aggregation priority: a worse child status dominates the parent.
_SEVERITY = {
    EvaluationStatus.MET: 0,
    EvaluationStatus.PENDING: 1,
    EvaluationStatus.NEEDS_MORE_EVIDENCE: 2,
    EvaluationStatus.NOT_MET: 3,
}


class EvaluationSource(str, Enum):
    AUTO_CHECK = "auto_check"
    AUDITOR_OPINION = "auditor_opinion"


class Verdict(str, Enum):
    PASS = "pass"
    PASS_WITH_COMMENTS = "pass_with_comments"
    FAIL = "fail"
    DISCLAIMER_OF_OPINION = "disclaimer_of_opinion"


@dataclass(frozen=True)
class DisclosureItem:
    key: str
    text: str


@dataclass(frozen=True)
class CriterionNode:
    """One criterion or sub-criterion.

    ``applicability`` is a conjunction of fact equalities: the node applies
    when every listed fact holds the listed value.  ``check`` names the
    automated check for auto/hybrid nodes.
    """

    id: str
    text: str
    kind: CriterionKind
    check: str | None = None
    applicability: Mapping[str, FactValue] | None = None
    disclosure_items: tuple[DisclosureItem, ...] = ()
    children: tuple["CriterionNode", ...] = ()

    def __post_init__(self) -> None:
        if self.kind is CriterionKind.AUTO and not self.check:
            raise ManifestInvalid(f"auto criterion {self.id} names no automated check")
        if self.kind is CriterionKind.MANUAL and self.check:
            raise ManifestInvalid(f"manual criterion {self.id} must not name a check")

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["CriterionNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class CriteriaManifest:
    framework_id: str
    version: str
    schema_version: str
    sections: tuple[CriterionNode, ...]

    def __post_init__(self) -> None:
        if not self.sections:
            raise ManifestInvalid("manifest has no sections")
        seen: set[str] = set()
        for node in self.walk():
            if node.id in seen:
                raise DuplicateCriterion(f"criterion id {node.id} appears more than once")
            seen.add(node.id)
        for node in self.walk():
            for child in node.children:
                if not child.id.startswith(node.id + "."):
                    raise DuplicateCriterion(
                        f"child id {child.id} does not extend its parent id {node.id}"
                    )

    def walk(self) -> Iterator[CriterionNode]:
        for section in self.sections:
            yield from section.walk()

    def node(self, criterion_id: str) -> CriterionNode:
        for node in self.walk():
            if node.id == criterion_id:
                return node
        raise UnknownCriterion(f"no criterion with id {criterion_id!r}")

    def leaves(self) -> list[CriterionNode]:
        return [n for n in self.walk() if n.is_leaf]


@dataclass(frozen=True)
class EvaluationRecord:
    """One evaluation event for one criterion (append-only; latest wins)."""

    criterion_id: str
    status: EvaluationStatus
    source: EvaluationSource
    evidence_refs: tuple[str, ...] = ()
    rationale: str = ""
    evaluator: str = ""
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "status": self.status.value,
            "source": self.source.value,
            "evidence_refs": list(self.evidence_refs),
            "rationale": self.rationale,
            "evaluator": self.evaluator,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "EvaluationRecord":
        return cls(
            criterion_id=raw["criterion_id"],
            status=EvaluationStatus(raw["status"]),
            source=EvaluationSource(raw["source"]),
            evidence_refs=tuple(raw.get("evidence_refs", ())),
            rationale=raw.get("rationale", ""),
            evaluator=raw.get("evaluator", ""),
            timestamp=raw.get("timestamp", ""),
        )


@dataclass(frozen=True)
class AuditOutcome:
    verdict: Verdict
    comments: tuple[str, ...] = ()
    formal_opinion: str = ""

    def __post_init__(self) -> None:
        if self.verdict is Verdict.DISCLAIMER_OF_OPINION and not self.formal_opinion.strip():
            raise ValidationError("a disclaimer of opinion requires an explanation text")

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "comments": list(self.comments),
            "formal_opinion": self.formal_opinion,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "AuditOutcome":
        return cls(
            verdict=Verdict(raw["verdict"]),
            comments=tuple(raw.get("comments", ())),
            formal_opinion=raw.get("formal_opinion", ""),
        )


def _node_from_dict(raw: Mapping) -> CriterionNode:
    applicability = raw.get("applicability")
    return CriterionNode(
        id=raw["id"],
        text=raw["text"],
        kind=CriterionKind(raw["kind"]),
        check=raw.get("check"),
        applicability=dict(applicability) if applicability else None,
        disclosure_items=tuple(
            DisclosureItem(key=i["key"], text=i["text"]) for i in raw.get("disclosure_items", ())
        ),
        children=tuple(_node_from_dict(c) for c in raw.get("children", ())),
    )


def _node_to_dict(node: CriterionNode) -> dict:
    out: dict = {"id": node.id, "text": node.text, "kind": node.kind.value}
    if node.check is not None:
        out["check"] = node.check
    if node.applicability is not None:
        out["applicability"] = dict(node.applicability)
    if node.disclosure_items:
        out["disclosure_items"] = [{"key": i.key, "text": i.text} for i in node.disclosure_items]
    if node.children:
        out["children"] = [_node_to_dict(c) for c in node.children]
    return out


def manifest_from_dict(raw: Mapping, *, validate_schema: bool = True) -> CriteriaManifest:
    if validate_schema:
        try:
            schemas.validate_against("criteria-manifest", dict(raw))
        except ValidationError as exc:
            raise ManifestInvalid(str(exc)) from exc
    if not raw.get("sections"):
        raise ManifestInvalid("manifest has no sections")
    return CriteriaManifest(
        framework_id=raw["framework_id"],
        version=raw["version"],
        schema_version=raw["schema_version"],
        sections=tuple(_node_from_dict(s) for s in raw["sections"]),
    )


def manifest_to_dict(manifest: CriteriaManifest) -> dict:
    return {
        "framework_id": manifest.framework_id,
        "version": manifest.version,
        "schema_version": manifest.schema_version,
        "sections": [_node_to_dict(s) for s in manifest.sections],
    }


def load_manifest(source: str | Path | Mapping) -> CriteriaManifest:
    """Load a manifest from a path, JSON text, or already-parsed mapping."""
    if isinstance(source, Mapping):
        return manifest_from_dict(source)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestInvalid(f"cannot read manifest {source}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestInvalid(f"manifest {source}: invalid JSON at line {exc.lineno}") from exc
    return manifest_from_dict(raw)


def load_shipped_manifest() -> CriteriaManifest:
    """The criteria set shipped with the package (NYC Local Law 144 of 2021).

    Packaged data is trusted: the structural invariants still run, but the
    JSON-schema pass (and its import cost) is skipped on this hot path.
    """
    ref = resources.files("critaudit").joinpath("data", _SHIPPED_MANIFEST)
    return manifest_from_dict(json.loads(ref.read_text(encoding="utf-8")), validate_schema=False)


def shipped_manifest_path() -> Path:
    return Path(str(resources.files("critaudit").joinpath("data", _SHIPPED_MANIFEST)))


def evaluate_applicability(node: CriterionNode, facts: FactMap) -> bool:
    """Does ``node``'s own condition hold under ``facts``?

    Ancestor conditions are handled by the tree walkers; a node with no
    condition is unconditionally applicable.
    """
    if not node.applicability:
        return True
    for fact, expected in node.applicability.items():
        if fact not in facts:
            raise UnresolvedFact(
                f"criterion {node.id} references unknown fact {fact!r}"
            )
        if facts[fact] != expected:
            return False
    return True


def applicable_ids(manifest: CriteriaManifest, facts: FactMap) -> set[str]:
    """Ids of all nodes whose own and ancestors' conditions hold."""
    result: set[str] = set()

    def visit(node: CriterionNode) -> None:
        if not evaluate_applicability(node, facts):
            return
        result.add(node.id)
        for child in node.children:
            visit(child)

    for section in manifest.sections:
        visit(section)
    return result


def node_path(manifest: CriteriaManifest, criterion_id: str) -> list[CriterionNode]:
    """Section-to-node path; raises UnknownCriterion when the id is absent."""

    def find(node: CriterionNode) -> list[CriterionNode] | None:
        if node.id == criterion_id:
            return [node]
        for child in node.children:
            tail = find(child)
            if tail is not None:
                return [node, *tail]
        return None

    for section in manifest.sections:
        path = find(section)
        if path is not None:
            return path
    raise UnknownCriterion(f"no criterion with id {criterion_id!r}")


def is_applicable(manifest: CriteriaManifest, facts: FactMap, criterion_id: str) -> bool:
    """Applicability of one node: its own condition and every ancestor's.

    Only facts referenced along this path matter, so an opinion on an
    unconditional criterion never trips over unrelated unresolved facts.
    """
    return all(evaluate_applicability(node, facts) for node in node_path(manifest, criterion_id))


def latest_records(records: Sequence[EvaluationRecord]) -> dict[str, EvaluationRecord]:
    """Latest record per criterion (log order is authoritative)."""
    latest: dict[str, EvaluationRecord] = {}
    for record in records:
        latest[record.criterion_id] = record
    return latest


def build_opinion(
    manifest: CriteriaManifest,
    facts: FactMap,
    criterion_id: str,
    status: EvaluationStatus,
    evidence_refs: Sequence[str] = (),
    rationale: str = "",
    evaluator: str = "",
    timestamp: str | None = None,
) -> EvaluationRecord:
    """Validate and build an auditor opinion record.

    Opinions attach to manual or hybrid criteria that are applicable under
    the current facts; met / not-met opinions must carry a rationale.
    """
    node = manifest.node(criterion_id)
    if node.kind is CriterionKind.AUTO:
        raise KindMismatch(
            f"criterion {criterion_id} is automated; opinions attach to manual or hybrid criteria"
        )
    if not is_applicable(manifest, facts, criterion_id):
        raise InapplicableCriterion(
            f"criterion {criterion_id} is not applicable under the recorded facts"
        )
    if status not in (
        EvaluationStatus.MET,
        EvaluationStatus.NOT_MET,
        EvaluationStatus.NEEDS_MORE_EVIDENCE,
    ):
        raise ValidationError(f"an opinion cannot carry status {status.value!r}")
    if status in (EvaluationStatus.MET, EvaluationStatus.NOT_MET) and not rationale.strip():
        raise MissingRationale(
            f"a {status.value} opinion on {criterion_id} requires a rationale"
        )
    return EvaluationRecord(
        criterion_id=criterion_id,
        status=status,
        source=EvaluationSource.AUDITOR_OPINION,
        evidence_refs=tuple(evidence_refs),
        rationale=rationale,
        evaluator=evaluator,
        timestamp=timestamp or datetime.now(timezone.utc).isoformat(),
    )


def rollup(
    manifest: CriteriaManifest, records: Sequence[EvaluationRecord]
) -> dict[str, EvaluationStatus]:
    """Fold the latest record of every node through the criteria tree.

    A node stamped not-applicable is not-applicable, subtree included.
    Otherwise a node's status combines its own latest record (if any) with
    its applicable children by worst-status-wins, where
    not-met > needs-more-evidence > pending > met.  A node with neither a
    record nor an applicable child is pending: nothing supports it, and a
    criterion must never pass vacuously.
    """
    latest = latest_records(records)
    statuses: dict[str, EvaluationStatus] = {}

    def visit(node: CriterionNode, ancestor_na: bool) -> EvaluationStatus:
        own = latest.get(node.id)
        own_na = own is not None and own.status is EvaluationStatus.NOT_APPLICABLE
        not_applicable = ancestor_na or own_na
        child_statuses = [visit(child, not_applicable) for child in node.children]
        if not_applicable:
            statuses[node.id] = EvaluationStatus.NOT_APPLICABLE
            return EvaluationStatus.NOT_APPLICABLE

        inputs = [s for s in child_statuses if s is not EvaluationStatus.NOT_APPLICABLE]
        if own is not None:
            inputs.append(own.status)
        if not inputs:
            status = EvaluationStatus.PENDING
        else:
            status = max(inputs, key=_SEVERITY.__getitem__)
        statuses[node.id] = status
        return status

    for section in manifest.sections:
        visit(section, False)
    return statuses


def determine_outcome(
    statuses: Mapping[str, EvaluationStatus],
    comments: Sequence[str] = (),
    *,
    sections: Sequence[str] = ("Q", "G", "R"),
    disclaimer: str | None = None,
) -> AuditOutcome:
    """Map a rollup to the final audit outcome.

    Pass when every section is met and no comments were recorded; pass with
    comments otherwise when all sections are met; fail when any section is
    not met.  A requested disclaimer of opinion takes precedence and must be
    explained.  Unevaluated nodes block the outcome unless an opinion is
    being withheld.
    """
    if disclaimer is not None:
        if not disclaimer.strip():
            raise ValidationError("a disclaimer of opinion requires an explanation text")
        return AuditOutcome(
            verdict=Verdict.DISCLAIMER_OF_OPINION,
            comments=tuple(comments),
            formal_opinion=(
                "The auditor expresses no opinion on the satisfaction of the criteria. "
                + disclaimer.strip()
            ),
        )

    unresolved = sorted(
        node_id
        for node_id, status in statuses.items()
        if status in (EvaluationStatus.PENDING, EvaluationStatus.NEEDS_MORE_EVIDENCE)
    )
    if unresolved:
        raise IncompleteEvaluation(
            "evaluation incomplete for: " + ", ".join(unresolved)
        )

    section_statuses = {s: statuses.get(s, EvaluationStatus.PENDING) for s in sections}
    failed = sorted(k for k, v in section_statuses.items() if v is EvaluationStatus.NOT_MET)
    if failed:
        return AuditOutcome(
            verdict=Verdict.FAIL,
            comments=tuple(comments),
            formal_opinion=(
                "In the auditor's opinion the system does not satisfy the criteria; "
                "sections not met: " + ", ".join(failed) + "."
            ),
        )
    opinion = (
        "In the auditor's opinion the system satisfies, in all material respects, "
        "every applicable criterion of the framework."
    )
    if comments:
        return AuditOutcome(
            verdict=Verdict.PASS_WITH_COMMENTS, comments=tuple(comments), formal_opinion=opinion
        )
    return AuditOutcome(verdict=Verdict.PASS, comments=(), formal_opinion=opinion)
