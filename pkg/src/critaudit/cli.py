"""Command-line interface.

Exit codes are a stable contract: 0 success, 1 domain failure,
2 malformed input, 3 unverifiable claim.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from . import checks as checks_mod
from . import dataset as dataset_mod
from . import engagement as eng
from . import report as report_mod
from . import verifier as verifier_mod
from .canonical import canonical_json, document_digest
from .criteria import (
    EvaluationStatus,
    determine_outcome,
    load_manifest,
    load_shipped_manifest,
    rollup,
)
from .errors import AuditError, ValidationError
from .stats import RateMethod, format_group, run_disparate_impact_analysis

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2
EXIT_UNVERIFIABLE = 3

STORE_ENV = "CRITAUDIT_STORE"
DEFAULT_STORE = "audit-store"


def _parse_date(value: str) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise ValidationError(f"{value!r} is not an ISO date (YYYY-MM-DD)") from None


def _today() -> date:
    return datetime.now(timezone.utc).date()


def _load_dataset(args) -> "dataset_mod.OutcomeDataset":
    analysis_date = _parse_date(args.analysis_date) if args.analysis_date else _today()
    start = _parse_date(args.collection_start) if args.collection_start else analysis_date
    end = _parse_date(args.collection_end) if args.collection_end else analysis_date
    method = RateMethod(args.method) if args.method else None
    return dataset_mod.load_outcome_csv(
        args.dataset,
        method=method,
        analysis_date=analysis_date,
        collection_window=(start, end),
    )


def _manifest(args):
    if getattr(args, "manifest", None):
        return load_manifest(args.manifest)
    return load_shipped_manifest()


def _store(args) -> eng.EngagementStore:
    return eng.EngagementStore(args.store)


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(payload) + "\n", encoding="utf-8")


def _print_analysis_summary(analysis) -> None:
    print(f"method: {analysis.method.value}")
    print(f"unknown demographics: {analysis.unknown_demographics_n}")
    if analysis.median_score is not None:
        print(f"sample median score: {analysis.median_score}")
    for axis in analysis.axes:
        print(f"\n[{axis.axis.value}] favored: {format_group(axis.favored_group)}"
              + (" (tied)" if axis.favored_tied else ""))
        header = f"{'group':<42} {'n':>6} {'rate':>8} {'ratio':>8} {'±':>8} {'<0.8':>5} {'excl':>5} {'p':>9}"
        print(header)
        ratios = {e.group: e for e in axis.impact_ratios}
        for rate in axis.rates:
            entry = ratios.get(rate.group)
            p = (
                f"{entry.significance.p_value:.5f}"
                if entry and entry.significance
                else "-"
            )
            print(
                f"{format_group(rate.group):<42} {rate.n:>6} {rate.rate:>8.4f} "
                f"{entry.ratio if entry else 0:>8.4f} "
                f"{entry.ratio_std_error if entry else 0:>8.4f} "
                f"{'yes' if entry and entry.below_fourfifths else 'no':>5} "
                f"{'yes' if entry and entry.excluded_small_group else 'no':>5} {p:>9}"
            )
        for group in axis.empty_groups:
            print(f"{format_group(group):<42} {'0':>6} {'-':>8} (no records; disclosed)")


def cmd_analyze(args) -> int:
    dataset = _load_dataset(args)
    scheme = dataset_mod.load_scheme(args.scheme)
    analysis = run_disparate_impact_analysis(dataset, scheme)
    out_dir = Path(args.out)
    _write_json(out_dir / "analysis.json", analysis.to_dict())
    _print_analysis_summary(analysis)
    print(f"\nwrote {out_dir / 'analysis.json'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    scheme = dataset_mod.load_scheme(args.scheme)
    tolerances = verifier_mod.VerificationTolerances(
        rate_abs=args.tolerance_rate,
        ratio_abs=args.tolerance_ratio,
        p_value_abs=args.tolerance_p,
    )
    dataset = None
    if args.dataset and Path(args.dataset).exists():
        dataset = _load_dataset(args)
    claimed = verifier_mod.ClaimedResults.from_dict(
        json.loads(Path(args.claimed).read_text(encoding="utf-8"))
    )
    result = verifier_mod.recompute_and_compare(dataset, scheme, claimed, tolerances)
    if args.out:
        _write_json(Path(args.out) / "verification.json", result.to_dict())
    print(f"verdict: {result.overall.value}")
    for entry in result.mismatches:
        print(
            f"  mismatch {entry.figure}: claimed {entry.claimed} vs "
            f"recomputed {entry.recomputed}"
        )
    gaps = verifier_mod.detect_disclosure_gaps(claimed, scheme)
    for gap in gaps:
        print(f"  disclosure gap: {gap}")
    if result.overall is verifier_mod.OverallVerdict.CONSISTENT:
        return EXIT_OK
    if result.overall is verifier_mod.OverallVerdict.UNVERIFIABLE:
        return EXIT_UNVERIFIABLE
    return EXIT_DOMAIN


def _coerce_fact(value: str):
    lowered = value.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    return value


def cmd_engagement_new(args) -> int:
    store = _store(args)
    attestation = eng.IndependenceAttestation(
        involved_in_use_dev_distribution=args.attest_involved,
        contractual_interest=args.attest_contractual,
        financial_interest=args.attest_financial,
        safeguards_description=args.safeguards or "",
    )
    engagement = eng.create_engagement(
        auditee=eng.Organization(name=args.auditee, contact=args.auditee_contact or ""),
        system=eng.AuditedSystem(
            name=args.system,
            description=args.description,
            components=tuple(args.component or ()),
        ),
        auditor=eng.AuditorIdentity(name=args.auditor, organization=args.auditor_org or ""),
        framework_id=args.framework_id,
        attestation=attestation,
        engagement_id=args.id,
        start_date=_parse_date(args.start_date) if args.start_date else None,
        assurance_level=args.assurance,
    )
    store.create(engagement)
    print(engagement.id)
    return EXIT_OK


def cmd_engagement_facts(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    answers: dict = {}
    if args.json:
        answers.update(json.loads(Path(args.json).read_text(encoding="utf-8")))
    for pair in args.fact or ():
        if "=" not in pair:
            raise ValidationError(f"facts are key=value pairs, got {pair!r}")
        key, _, value = pair.partition("=")
        answers[key.strip()] = _coerce_fact(value.strip())
    facts = eng.record_scoping(engagement, answers)
    store.save(engagement)
    print(canonical_json(facts))
    return EXIT_OK


def cmd_engagement_submit(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    content = Path(args.file).read_bytes() if args.file else None
    item = eng.submit_evidence(
        engagement,
        kind=eng.EvidenceKind(args.kind),
        title=args.title,
        content=content,
        digest=args.digest,
        at=args.at,
    )
    store.save(engagement)
    flag = f" (duplicate of {item.duplicate_of})" if item.duplicate_of else ""
    print(f"{item.id} {item.digest}{flag}")
    return EXIT_OK


def cmd_engagement_verify(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    record = eng.VerificationRecord(
        method=eng.VerificationMethod(args.method),
        verifier=args.verifier or "",
        finding=args.finding,
        timestamp=args.at or datetime.now(timezone.utc).isoformat(),
    )
    item = eng.verify_evidence(
        engagement, args.item_id, record, eng.VerificationStatus(args.verdict)
    )
    store.save(engagement)
    print(f"{item.id} {item.status.value}")
    return EXIT_OK


def cmd_engagement_advance(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    manifest = _manifest(args)
    state = eng.advance_state(
        engagement,
        eng.EngagementState(args.target),
        manifest=manifest,
        actor=args.actor or "",
        note=args.note or "",
        at=args.at,
    )
    store.save(engagement)
    print(state.value)
    return EXIT_OK


def cmd_engagement_evaluate(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    manifest = _manifest(args)
    record = eng.record_opinion(
        engagement,
        manifest,
        args.criterion_id,
        EvaluationStatus(args.status),
        evidence_refs=tuple(args.evidence or ()),
        rationale=args.rationale or "",
        evaluator=args.evaluator or "",
        at=args.at,
    )
    store.save(engagement)
    statuses = rollup(manifest, engagement.evaluations)
    section = record.criterion_id.split(".")[0]
    print(f"{record.criterion_id} {record.status.value}; section {section}: "
          f"{statuses.get(section, EvaluationStatus.PENDING).value}")
    return EXIT_OK


def cmd_engagement_attach_analysis(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    dataset = _load_dataset(args)
    scheme = dataset_mod.load_scheme(args.scheme)
    analysis = run_disparate_impact_analysis(dataset, scheme)
    eng.attach_analysis(engagement, analysis)
    store.save(engagement)
    print("analysis attached")
    return EXIT_OK


def cmd_engagement_checks(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    manifest = _manifest(args)
    records = checks_mod.run_auto_checks(
        manifest,
        engagement.analysis,
        engagement.facts,
        previous=engagement.evaluations,
        timestamp=args.at,
    )
    engagement.evaluations.extend(records)
    store.save(engagement)
    met = sum(1 for r in records if r.status is EvaluationStatus.MET)
    not_met = sum(1 for r in records if r.status is EvaluationStatus.NOT_MET)
    not_applicable = sum(
        1 for r in records if r.status is EvaluationStatus.NOT_APPLICABLE
    )
    print(f"checks recorded: {met} met, {not_met} not met, {not_applicable} not applicable")
    for record in records:
        if record.status is EvaluationStatus.NOT_MET:
            print(f"  {record.criterion_id} not met: {record.rationale}")
    return EXIT_OK


def cmd_engagement_outcome(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    manifest = _manifest(args)
    for comment in args.comment or ():
        eng.add_comment(engagement, comment)
    statuses = rollup(manifest, engagement.evaluations)
    outcome = determine_outcome(
        statuses, comments=tuple(engagement.comments), disclaimer=args.disclaimer
    )
    when = _parse_date(args.report_date) if args.report_date else _today()
    eng.record_outcome(engagement, outcome, when)
    store.save(engagement)
    print(outcome.verdict.value)
    return EXIT_OK


def cmd_engagement_status(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    manifest = _manifest(args)
    statuses = rollup(manifest, engagement.evaluations)
    print(f"engagement {engagement.id} [{engagement.state.value}]")
    print(f"framework {engagement.framework_id}; evidence items: {len(engagement.evidence)}; "
          f"verification loops: {engagement.verification_loops}")
    for section in manifest.sections:
        for node in section.walk():
            depth = node.id.count(".")
            status = statuses.get(node.id, EvaluationStatus.PENDING)
            print(f"{'  ' * depth}{node.id} [{status.value}]")
    if engagement.outcome:
        print(f"outcome: {engagement.outcome.verdict.value}")
    return EXIT_OK


def cmd_report(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    manifest = _manifest(args)
    directory = store.path(engagement.id)

    full_doc = report_mod.render_report(engagement, manifest, profile="full")
    public_doc = report_mod.redact_for_public(full_doc)
    markdown = report_mod.render_markdown(public_doc, manifest)

    written: list[Path] = []
    if args.profile in ("full", "both"):
        path = directory / "report.full.json"
        _write_json(path, full_doc)
        written.append(path)
        engagement.report_digest = document_digest(full_doc)
    else:
        engagement.report_digest = document_digest(public_doc)
    public_path = directory / "report.public.json"
    _write_json(public_path, public_doc)
    written.append(public_path)
    md_path = directory / "report.public.md"
    md_path.write_text(markdown + "\n", encoding="utf-8")
    written.append(md_path)
    store.save(engagement)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for path in written:
            (out_dir / path.name).write_bytes(path.read_bytes())
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_certify(args) -> int:
    store = _store(args)
    engagement = store.load(args.engagement_id)
    directory = store.path(engagement.id)
    candidates = [
        directory / name
        for name in ("report.full.json", "report.public.json")
        if (directory / name).exists()
    ]
    if not candidates:
        raise ValidationError("no rendered report found; run the report command first")
    # certify whichever rendered artifact the recorded digest binds; a stale
    # file from an earlier profile must not shadow the current report
    documents = [json.loads(p.read_text(encoding="utf-8")) for p in candidates]
    document = next(
        (d for d in documents if document_digest(d) == engagement.report_digest),
        documents[0],
    )
    certification = report_mod.issue_certification(engagement, document)
    cert_path = directory / "certification.json"
    _write_json(cert_path, certification.to_dict())
    store.save(engagement)
    print(f"wrote {cert_path}")
    print(f"verdict: {certification.verdict.value}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import service  # heavy imports stay off the fast CLI paths

    try:
        service.serve(
            store_path=args.store,
            manifest_path=getattr(args, "manifest", None),
            address=args.address,
            token=args.token,
            ui_dir=args.ui_dir,
        )
    except OSError as exc:
        print(f"error: cannot bind {args.address}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SystemExit as exc:  # uvicorn signals startup failure this way
        if exc.code not in (0, None):
            print(f"error: server failed to start on {args.address}", file=sys.stderr)
            return EXIT_DOMAIN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critaudit",
        description="Criterion-audit engine: disparate-impact analysis, claim "
        "verification, engagement workflow, reporting, and certification.",
    )
    parser.add_argument(
        "--store",
        default=os.environ.get(STORE_ENV, DEFAULT_STORE),
        help=f"engagement store directory (env {STORE_ENV})",
    )
    parser.add_argument("--manifest", help="criteria manifest JSON (default: shipped LL144 set)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dataset_args(p, dataset_required=True):
        p.add_argument("--dataset", required=dataset_required, help="outcomes CSV")
        p.add_argument("--scheme", required=True, help="demographic scheme JSON")
        p.add_argument("--method", choices=[m.value for m in RateMethod])
        p.add_argument("--analysis-date", help="ISO date of the analysis (default today)")
        p.add_argument("--collection-start", help="dataset window start (ISO date)")
        p.add_argument("--collection-end", help="dataset window end (ISO date)")

    analyze = sub.add_parser("analyze", help="run the disparate-impact analysis on a CSV")
    add_dataset_args(analyze)
    analyze.add_argument("--out", default=".", help="output directory for analysis.json")
    analyze.set_defaults(fn=cmd_analyze)

    verify = sub.add_parser("verify", help="verify claimed results against raw data")
    add_dataset_args(verify)
    verify.add_argument("--claimed", required=True, help="claimed-results JSON")
    verify.add_argument("--tolerance-rate", type=float, default=1e-6)
    verify.add_argument("--tolerance-ratio", type=float, default=1e-6)
    verify.add_argument("--tolerance-p", type=float, default=1e-4)
    verify.add_argument("--out", help="output directory for verification.json")
    verify.set_defaults(fn=cmd_verify)

    engagement = sub.add_parser("engagement", help="drive the engagement lifecycle")
    esub = engagement.add_subparsers(dest="subcommand", required=True)

    new = esub.add_parser("new", help="open an engagement")
    new.add_argument("--id", help="explicit engagement id (default generated)")
    new.add_argument("--auditee", required=True)
    new.add_argument("--auditee-contact")
    new.add_argument("--system", required=True)
    new.add_argument("--description", required=True)
    new.add_argument("--component", action="append")
    new.add_argument("--auditor", required=True)
    new.add_argument("--auditor-org")
    new.add_argument("--framework-id", default="nyc-ll144-2021")
    new.add_argument("--start-date")
    new.add_argument("--assurance", default="limited", choices=("limited", "reasonable"))
    new.add_argument("--attest-involved", action="store_true",
                     help="auditor was involved in using/developing/distributing the system")
    new.add_argument("--attest-contractual", action="store_true")
    new.add_argument("--attest-financial", action="store_true")
    new.add_argument("--safeguards")
    new.set_defaults(fn=cmd_engagement_new)

    facts = esub.add_parser("facts", help="record scoping questionnaire facts")
    facts.add_argument("engagement_id")
    facts.add_argument("--fact", action="append", metavar="KEY=VALUE")
    facts.add_argument("--json", help="JSON file of facts to merge")
    facts.set_defaults(fn=cmd_engagement_facts)

    submit = esub.add_parser("submit", help="submit an evidence item")
    submit.add_argument("engagement_id")
    submit.add_argument("--kind", required=True, choices=[k.value for k in eng.EvidenceKind])
    submit.add_argument("--title", required=True)
    submit.add_argument("--file", help="evidence bytes to hash")
    submit.add_argument("--digest", help="precomputed SHA-256 (lowercase hex)")
    submit.add_argument("--at", help="submission timestamp (ISO 8601)")
    submit.set_defaults(fn=cmd_engagement_submit)

    everify = esub.add_parser("verify", help="verify or reject an evidence item")
    everify.add_argument("engagement_id")
    everify.add_argument("item_id")
    everify.add_argument("--verdict", required=True, choices=("verified", "rejected"))
    everify.add_argument(
        "--method", required=True, choices=[m.value for m in eng.VerificationMethod]
    )
    everify.add_argument("--finding", required=True)
    everify.add_argument("--verifier")
    everify.add_argument("--at")
    everify.set_defaults(fn=cmd_engagement_verify)

    advance = esub.add_parser("advance", help="advance the engagement state")
    advance.add_argument("engagement_id")
    advance.add_argument("target", choices=[s.value for s in eng.EngagementState])
    advance.add_argument("--actor")
    advance.add_argument("--note")
    advance.add_argument("--at")
    advance.set_defaults(fn=cmd_engagement_advance)

    evaluate = esub.add_parser("evaluate", help="record an auditor opinion")
    evaluate.add_argument("engagement_id")
    evaluate.add_argument("criterion_id")
    evaluate.add_argument(
        "status", choices=("met", "not_met", "needs_more_evidence")
    )
    evaluate.add_argument("--rationale", default="")
    evaluate.add_argument("--evidence", action="append", metavar="ITEM_ID")
    evaluate.add_argument("--evaluator")
    evaluate.add_argument("--at")
    evaluate.set_defaults(fn=cmd_engagement_evaluate)

    attach = esub.add_parser(
        "attach-analysis", help="recompute the analysis from a CSV and attach it"
    )
    attach.add_argument("engagement_id")
    add_dataset_args(attach)
    attach.set_defaults(fn=cmd_engagement_attach_analysis)

    checks = esub.add_parser("checks", help="run the automated criterion checks")
    checks.add_argument("engagement_id")
    checks.add_argument("--at")
    checks.set_defaults(fn=cmd_engagement_checks)

    outcome = esub.add_parser("outcome", help="determine and record the audit outcome")
    outcome.add_argument("engagement_id")
    outcome.add_argument("--comment", action="append")
    outcome.add_argument("--disclaimer", help="withhold the opinion, with explanation")
    outcome.add_argument("--report-date")
    outcome.set_defaults(fn=cmd_engagement_outcome)

    status = esub.add_parser("status", help="print the criteria rollup tree")
    status.add_argument("engagement_id")
    status.set_defaults(fn=cmd_engagement_status)

    report = sub.add_parser("report", help="render the audit report")
    report.add_argument("engagement_id")
    report.add_argument("--profile", default="full", choices=("full", "public", "both"))
    report.add_argument("--out", help="also copy the report files here")
    report.set_defaults(fn=cmd_report)

    certify = sub.add_parser("certify", help="issue the certification")
    certify.add_argument("engagement_id")
    certify.set_defaults(fn=cmd_certify)

    serve = sub.add_parser("serve", help="serve the workbench API and UI")
    serve.add_argument("--address", default="127.0.0.1:8686")
    serve.add_argument("--token", default=os.environ.get("CRITAUDIT_TOKEN", ""))
    serve.add_argument("--ui-dir", help="directory of built workbench assets")
    serve.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AuditError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON at line {exc.lineno}, column {exc.colno}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
