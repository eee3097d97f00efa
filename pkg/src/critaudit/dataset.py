"""Dataset and scheme ingestion.

CSV contract: UTF-8, comma-delimited, RFC-4180 quoting, header row with
``candidate_id``, an ``outcome`` (1/0/true/false) or ``score`` (decimal)
column, ``race_ethnicity`` and ``gender`` (empty cell = unknown), and any
number of ``setting:<name>`` columns.  Demographic schemes and inference
models arrive as JSON validated against the published schema.
"""

from __future__ import annotations

import csv
import io
import json
from datetime import date
from pathlib import Path
from typing import Mapping

from . import schemas
from .errors import EmptyDataset, MalformedRecord, ValidationError
from .stats import (
    CandidateRecord,
    DemographicScheme,
    InferenceErrorModel,
    OutcomeDataset,
    RateMethod,
)

_TRUE_VALUES = {"1", "true", "t", "yes", "y"}
_FALSE_VALUES = {"0", "false", "f", "no", "n"}
SETTING_PREFIX = "setting:"


def _parse_outcome(raw: str, row: int) -> bool:
    value = raw.strip().lower()
    if value in _TRUE_VALUES:
        return True
    if value in _FALSE_VALUES:
        return False
    raise MalformedRecord(f"row {row}: outcome {raw!r} is not a recognizable boolean")


def _parse_score(raw: str, row: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise MalformedRecord(f"row {row}: score {raw!r} is not a decimal number") from None


def infer_method(header: list[str]) -> RateMethod:
    has_outcome = "outcome" in header
    has_score = "score" in header
    if has_outcome and has_score:
        raise ValidationError(
            "CSV has both outcome and score columns; pass the rate method explicitly"
        )
    if has_outcome:
        return RateMethod.SELECTION
    if has_score:
        return RateMethod.SCORING
    raise ValidationError("CSV header has neither an outcome nor a score column")


def read_outcome_csv(
    text: str,
    *,
    method: RateMethod | None = None,
    analysis_date: date,
    collection_window: tuple[date, date],
) -> OutcomeDataset:
    """Parse CSV text into an :class:`OutcomeDataset`.

    Parse failures carry the 1-based data row number.  Per-row setting tags
    are aggregated into the dataset-level settings map; a setting used with
    several values lists them all, comma-joined, so every combination used in
    the analysis stays disclosed.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise EmptyDataset("CSV has no header row")
    header = [name.strip() for name in reader.fieldnames]
    if "candidate_id" not in header:
        raise ValidationError("CSV header is missing the candidate_id column")
    for column in ("race_ethnicity", "gender"):
        if column not in header:
            raise ValidationError(f"CSV header is missing the {column} column")
    if method is None:
        method = infer_method(header)

    value_column = "outcome" if method is RateMethod.SELECTION else "score"
    if value_column not in header:
        raise MalformedRecord(
            f"CSV has no {value_column} column required by the {method.value} method"
        )
    setting_columns = [c for c in header if c.startswith(SETTING_PREFIX)]

    records: list[CandidateRecord] = []
    settings: dict[str, list[str]] = {c[len(SETTING_PREFIX):]: [] for c in setting_columns}
    for row_no, row in enumerate(reader, start=1):
        raw_value = (row.get(value_column) or "").strip()
        if not raw_value:
            raise MalformedRecord(f"row {row_no}: empty {value_column} cell")
        outcome = score = None
        if method is RateMethod.SELECTION:
            outcome = _parse_outcome(raw_value, row_no)
        else:
            score = _parse_score(raw_value, row_no)
        candidate_id = (row.get("candidate_id") or "").strip()
        if not candidate_id:
            raise MalformedRecord(f"row {row_no}: empty candidate_id cell")
        records.append(
            CandidateRecord(
                candidate_id=candidate_id,
                outcome=outcome,
                score=score,
                race_ethnicity=_optional_cell(row.get("race_ethnicity")),
                gender=_optional_cell(row.get("gender")),
            )
        )
        for column in setting_columns:
            value = (row.get(column) or "").strip()
            if value:
                settings[column[len(SETTING_PREFIX):]].append(value)

    settings_used = {
        name: ",".join(sorted(set(values))) for name, values in settings.items() if values
    }
    return OutcomeDataset(
        records=tuple(records),
        method=method,
        collection_window=collection_window,
        analysis_date=analysis_date,
        settings_used=settings_used,
    )


def _optional_cell(raw: str | None) -> str | None:
    if raw is None:
        return None
    value = raw.strip()
    return value or None


def load_outcome_csv(
    path: str | Path,
    *,
    method: RateMethod | None = None,
    analysis_date: date,
    collection_window: tuple[date, date],
) -> OutcomeDataset:
    text = Path(path).read_text(encoding="utf-8")
    return read_outcome_csv(
        text, method=method, analysis_date=analysis_date, collection_window=collection_window
    )


def scheme_from_dict(raw: Mapping) -> DemographicScheme:
    schemas.validate_against("demographic-scheme", dict(raw))
    inference = None
    raw_inference = raw.get("inference")
    if raw_inference:
        inference = InferenceErrorModel(relative_errors=dict(raw_inference["relative_errors"]))
    return DemographicScheme(
        race_ethnicity_groups=tuple(raw["race_ethnicity_groups"]),
        gender_groups=tuple(raw["gender_groups"]),
        intersectional=raw.get("intersectional", True),
        inference=inference,
    )


def scheme_to_dict(scheme: DemographicScheme) -> dict:
    return {
        "race_ethnicity_groups": list(scheme.race_ethnicity_groups),
        "gender_groups": list(scheme.gender_groups),
        "intersectional": scheme.intersectional,
        "inference": (
            {"relative_errors": dict(scheme.inference.relative_errors)}
            if scheme.inference
            else None
        ),
    }


def load_scheme(path: str | Path) -> DemographicScheme:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scheme file {path}: invalid JSON at line {exc.lineno}") from exc
    return scheme_from_dict(raw)
