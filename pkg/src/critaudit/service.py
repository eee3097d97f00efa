"""Workbench HTTP/JSON API over the engagement store.

A thin façade: every mutation delegates to the same module operations the
CLI uses, so API state changes are byte-equivalent to their CLI twins.
Mutations per engagement serialize behind a lock; reads never mutate the
store.  Authentication is one static bearer token (empty token disables
auth for local use); polling is cheap via ETags derived from the
evaluation-log length.
"""

from __future__ import annotations

import base64
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Response
from fastapi.staticfiles import StaticFiles

from . import checks as checks_mod
from . import engagement as eng
from . import report as report_mod
from .criteria import (
    CriteriaManifest,
    CriterionNode,
    EvaluationStatus,
    determine_outcome,
    evaluate_applicability,
    latest_records,
    load_manifest,
    load_shipped_manifest,
    rollup,
)
from .errors import (
    AuditError,
    NotFound,
    UnresolvedFact,
    ValidationError,
)

API_PREFIX = "/api/v1"


def _http_error(exc: AuditError) -> HTTPException:
    if isinstance(exc, NotFound):
        status = 404
    elif isinstance(exc, (ValidationError, UnresolvedFact)):
        status = 422
    else:
        status = 409
    return HTTPException(
        status_code=status, detail={"error": type(exc).__name__, "message": str(exc)}
    )


def default_ui_dir() -> Path | None:
    candidate = Path(__file__).parent / "ui"
    return candidate if candidate.is_dir() else None


def create_app(
    store_path: str | Path,
    *,
    manifest: CriteriaManifest | None = None,
    token: str = "",
    ui_dir: str | Path | None = None,
) -> FastAPI:
    store = eng.EngagementStore(store_path)
    criteria = manifest or load_shipped_manifest()
    app = FastAPI(title="critaudit workbench", version="1")
    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def lock_for(engagement_id: str) -> threading.Lock:
        with locks_guard:
            if engagement_id not in locks:
                locks[engagement_id] = threading.Lock()
            return locks[engagement_id]

    def require_token(authorization: str | None = Header(default=None)) -> None:
        if not token:
            return
        if authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail={"error": "Unauthorized"})

    def load(engagement_id: str) -> eng.Engagement:
        try:
            return store.load(engagement_id)
        except NotFound as exc:
            raise _http_error(exc) from exc

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get(f"{API_PREFIX}/meta/transitions")
    def transition_relation() -> dict:
        return {
            "transitions": {
                state.value: sorted(t.value for t in targets)
                for state, targets in eng.TRANSITIONS.items()
            }
        }

    @app.get(f"{API_PREFIX}/engagements")
    def list_engagements() -> dict:
        summaries = []
        for engagement_id in store.list_ids():
            engagement = store.load(engagement_id)
            summaries.append(
                {
                    "id": engagement.id,
                    "state": engagement.state.value,
                    "framework_id": engagement.framework_id,
                    "auditee": engagement.auditee.name,
                    "system": engagement.audited_system.name,
                }
            )
        return {"engagements": summaries}

    @app.get(f"{API_PREFIX}/engagements/{{engagement_id}}")
    def engagement_detail(engagement_id: str) -> dict:
        engagement = load(engagement_id)
        return {
            "id": engagement.id,
            "state": engagement.state.value,
            "framework_id": engagement.framework_id,
            "auditee": engagement.auditee.to_dict(),
            "auditor": engagement.auditor.to_dict(),
            "system": engagement.audited_system.to_dict(),
            "facts": dict(engagement.facts),
            "start_date": engagement.start_date.isoformat(),
            "analysis_attached": engagement.analysis is not None,
            "outcome": engagement.outcome.to_dict() if engagement.outcome else None,
            "verification_loops": engagement.verification_loops,
            "legal_targets": sorted(t.value for t in eng.TRANSITIONS[engagement.state]),
        }

    def _tree_node(
        node: CriterionNode,
        engagement: eng.Engagement,
        statuses: dict,
        latest: dict,
        parent_applicable: bool,
    ) -> dict:
        applicable = parent_applicable
        unresolved = False
        if applicable:
            try:
                applicable = evaluate_applicability(node, engagement.facts)
            except UnresolvedFact:
                applicable = True
                unresolved = True
        record = latest.get(node.id)
        return {
            "id": node.id,
            "text": node.text,
            "kind": node.kind.value,
            "status": statuses.get(node.id, EvaluationStatus.PENDING).value,
            "applicable": applicable,
            "unresolved_facts": unresolved,
            "evidence_refs": list(record.evidence_refs) if record else [],
            "rationale": record.rationale if record else "",
            "children": [
                _tree_node(child, engagement, statuses, latest, applicable)
                for child in node.children
            ],
        }

    @app.get(f"{API_PREFIX}/engagements/{{engagement_id}}/criteria")
    def criteria_tree(
        engagement_id: str,
        response: Response,
        if_none_match: str | None = Header(default=None),
    ):
        engagement = load(engagement_id)
        etag = f'W/"evaluations-{len(engagement.evaluations)}"'
        response.headers["ETag"] = etag
        if if_none_match == etag:
            return Response(status_code=304, headers={"ETag": etag})
        statuses = rollup(criteria, engagement.evaluations)
        latest = latest_records(engagement.evaluations)
        return {
            "engagement_id": engagement.id,
            "state": engagement.state.value,
            "etag": etag,
            "sections": [
                _tree_node(section, engagement, statuses, latest, True)
                for section in criteria.sections
            ],
        }

    def _section_rollup(engagement: eng.Engagement, criterion_id: str) -> dict:
        statuses = rollup(criteria, engagement.evaluations)
        section = criterion_id.split(".")[0]
        return {
            "section": section,
            "status": statuses.get(section, EvaluationStatus.PENDING).value,
            "statuses": {
                node_id: status.value
                for node_id, status in statuses.items()
                if node_id == section or node_id.startswith(section + ".")
            },
        }

    @app.get(f"{API_PREFIX}/engagements/{{engagement_id}}/opinions")
    def list_opinions(engagement_id: str) -> dict:
        engagement = load(engagement_id)
        return {"records": [r.to_dict() for r in engagement.evaluations]}

    @app.post(
        f"{API_PREFIX}/engagements/{{engagement_id}}/opinions",
        status_code=201,
        dependencies=[Depends(require_token)],
    )
    def post_opinion(engagement_id: str, payload: dict = Body(...)) -> dict:
        with lock_for(engagement_id):
            engagement = load(engagement_id)
            try:
                record = eng.record_opinion(
                    engagement,
                    criteria,
                    payload.get("criterion_id", ""),
                    EvaluationStatus(payload.get("status", "")),
                    evidence_refs=tuple(payload.get("evidence_refs", ())),
                    rationale=payload.get("rationale", ""),
                    evaluator=payload.get("evaluator", ""),
                    at=payload.get("at"),
                )
                store.save(engagement)
            except ValueError as exc:
                raise HTTPException(
                    status_code=422, detail={"error": "ValidationError", "message": str(exc)}
                ) from exc
            except AuditError as exc:
                raise _http_error(exc) from exc
            return {
                "record": record.to_dict(),
                "rollup": _section_rollup(engagement, record.criterion_id),
            }

    @app.get(f"{API_PREFIX}/engagements/{{engagement_id}}/evidence")
    def list_evidence(engagement_id: str) -> dict:
        engagement = load(engagement_id)
        return {"items": [i.to_dict() for i in engagement.evidence]}

    @app.post(
        f"{API_PREFIX}/engagements/{{engagement_id}}/evidence",
        status_code=201,
        dependencies=[Depends(require_token)],
    )
    def post_evidence(engagement_id: str, payload: dict = Body(...)) -> dict:
        with lock_for(engagement_id):
            engagement = load(engagement_id)
            content = None
            if payload.get("content_base64") is not None:
                try:
                    content = base64.b64decode(payload["content_base64"])
                except Exception as exc:
                    raise HTTPException(
                        status_code=422,
                        detail={"error": "ValidationError", "message": "invalid base64 content"},
                    ) from exc
            try:
                item = eng.submit_evidence(
                    engagement,
                    kind=eng.EvidenceKind(payload.get("kind", "")),
                    title=payload.get("title", ""),
                    content=content,
                    digest=payload.get("digest"),
                    at=payload.get("at"),
                )
                store.save(engagement)
            except ValueError as exc:
                raise HTTPException(
                    status_code=422, detail={"error": "ValidationError", "message": str(exc)}
                ) from exc
            except AuditError as exc:
                raise _http_error(exc) from exc
            return {"item": item.to_dict()}

    @app.post(
        f"{API_PREFIX}/engagements/{{engagement_id}}/verifications",
        dependencies=[Depends(require_token)],
    )
    def post_verification(engagement_id: str, payload: dict = Body(...)) -> dict:
        with lock_for(engagement_id):
            engagement = load(engagement_id)
            try:
                record = eng.VerificationRecord(
                    method=eng.VerificationMethod(payload.get("method", "")),
                    verifier=payload.get("verifier", ""),
                    finding=payload.get("finding", ""),
                    timestamp=payload.get("at")
                    or datetime.now(timezone.utc).isoformat(),
                )
                item = eng.verify_evidence(
                    engagement,
                    payload.get("item_id", ""),
                    record,
                    eng.VerificationStatus(payload.get("verdict", "")),
                )
                store.save(engagement)
            except ValueError as exc:
                raise HTTPException(
                    status_code=422, detail={"error": "ValidationError", "message": str(exc)}
                ) from exc
            except AuditError as exc:
                raise _http_error(exc) from exc
            return {"item": item.to_dict()}

    @app.get(f"{API_PREFIX}/engagements/{{engagement_id}}/transitions")
    def list_transitions(engagement_id: str) -> dict:
        engagement = load(engagement_id)
        return {
            "state": engagement.state.value,
            "verification_loops": engagement.verification_loops,
            "legal_targets": sorted(t.value for t in eng.TRANSITIONS[engagement.state]),
            "transitions": [t.to_dict() for t in engagement.transitions],
        }

    @app.post(
        f"{API_PREFIX}/engagements/{{engagement_id}}/transitions",
        dependencies=[Depends(require_token)],
    )
    def post_transition(engagement_id: str, payload: dict = Body(...)) -> dict:
        with lock_for(engagement_id):
            engagement = load(engagement_id)
            try:
                state = eng.advance_state(
                    engagement,
                    eng.EngagementState(payload.get("target", "")),
                    manifest=criteria,
                    actor=payload.get("actor", ""),
                    note=payload.get("note", ""),
                    at=payload.get("at"),
                )
                store.save(engagement)
            except ValueError as exc:
                raise HTTPException(
                    status_code=422, detail={"error": "ValidationError", "message": str(exc)}
                ) from exc
            except AuditError as exc:
                raise _http_error(exc) from exc
            return {
                "state": state.value,
                "verification_loops": engagement.verification_loops,
            }

    @app.post(
        f"{API_PREFIX}/engagements/{{engagement_id}}/analysis",
        dependencies=[Depends(require_token)],
    )
    def post_analysis(engagement_id: str, payload: dict = Body(...)) -> dict:
        from .stats import analysis_report_from_dict

        with lock_for(engagement_id):
            engagement = load(engagement_id)
            try:
                analysis = analysis_report_from_dict(payload)
            except (KeyError, ValueError) as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"error": "ValidationError", "message": f"bad analysis document: {exc}"},
                ) from exc
            try:
                eng.attach_analysis(engagement, analysis)
                store.save(engagement)
            except AuditError as exc:
                raise _http_error(exc) from exc
            return {"analysis_attached": True, "facts": dict(engagement.facts)}

    @app.get(f"{API_PREFIX}/engagements/{{engagement_id}}/checks")
    def list_checks(engagement_id: str) -> dict:
        engagement = load(engagement_id)
        return {
            "records": [
                r.to_dict()
                for r in engagement.evaluations
                if r.source.value == "auto_check"
            ]
        }

    @app.post(
        f"{API_PREFIX}/engagements/{{engagement_id}}/checks",
        dependencies=[Depends(require_token)],
    )
    def post_run_checks(engagement_id: str, payload: dict | None = Body(default=None)) -> dict:
        payload = payload or {}
        with lock_for(engagement_id):
            engagement = load(engagement_id)
            try:
                records = checks_mod.run_auto_checks(
                    criteria,
                    engagement.analysis,
                    engagement.facts,
                    previous=engagement.evaluations,
                    timestamp=payload.get("at"),
                )
                engagement.evaluations.extend(records)
                store.save(engagement)
            except AuditError as exc:
                raise _http_error(exc) from exc
            statuses = rollup(criteria, engagement.evaluations)
            return {
                "recorded": len(records),
                "records": [r.to_dict() for r in records],
                "statuses": {k: v.value for k, v in statuses.items()},
            }

    @app.get(f"{API_PREFIX}/engagements/{{engagement_id}}/report-preview")
    def report_preview(engagement_id: str) -> dict:
        engagement = load(engagement_id)
        try:
            if engagement.outcome is None:
                statuses = rollup(criteria, engagement.evaluations)
                engagement.outcome = determine_outcome(
                    statuses, comments=tuple(engagement.comments)
                )
            document = report_mod.render_report(
                engagement,
                criteria,
                profile="public",
                enforce_state=False,
                report_date=engagement.report_date
                or datetime.now(timezone.utc).date(),
            )
        except AuditError as exc:
            raise _http_error(exc) from exc
        return {"report": document, "markdown": report_mod.render_markdown(document, criteria)}

    resolved_ui = Path(ui_dir) if ui_dir else default_ui_dir()
    if resolved_ui and resolved_ui.is_dir():
        app.mount("/ui", StaticFiles(directory=resolved_ui, html=True), name="ui")

    return app


def serve(
    store_path: str | Path,
    *,
    manifest_path: str | Path | None = None,
    address: str = "127.0.0.1:8686",
    token: str = "",
    ui_dir: str | Path | None = None,
) -> None:
    import uvicorn

    manifest = load_manifest(manifest_path) if manifest_path else None
    app = create_app(store_path, manifest=manifest, token=token, ui_dir=ui_dir)
    host, _, port = address.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8686), log_level="info")
