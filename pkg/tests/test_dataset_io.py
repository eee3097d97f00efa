import json
from datetime import date

import pytest

from critaudit.dataset import (
    load_scheme,
    read_outcome_csv,
    scheme_from_dict,
    scheme_to_dict,
)
from critaudit.errors import EmptyDataset, MalformedRecord, ValidationError
from critaudit.stats import RateMethod

CSV_HEADER = "candidate_id,outcome,race_ethnicity,gender,setting:threshold\n"
DATES = dict(
    analysis_date=date(2025, 7, 1),
    collection_window=(date(2025, 1, 2), date(2025, 6, 30)),
)


def test_selection_csv_parses():
    text = CSV_HEADER + "c1,1,Asian,Female,0.5\nc2,0,White,Male,0.5\nc3,true,Asian,,0.7\n"
    dataset = read_outcome_csv(text, **DATES)
    assert dataset.method is RateMethod.SELECTION
    assert dataset.records[0].outcome is True
    assert dataset.records[1].outcome is False
    assert dataset.records[2].gender is None  # empty cell = unknown
    assert dataset.settings_used == {"threshold": "0.5,0.7"}


def test_scoring_csv_parses():
    text = "candidate_id,score,race_ethnicity,gender\nc1,2.5,Asian,Female\nc2,3,White,Male\n"
    dataset = read_outcome_csv(text, **DATES)
    assert dataset.method is RateMethod.SCORING
    assert dataset.records[0].score == 2.5


def test_rfc4180_quoting():
    text = (
        'candidate_id,outcome,race_ethnicity,gender\n'
        '"c,1",1,"Black or African American",Female\n'
    )
    dataset = read_outcome_csv(text, **DATES)
    assert dataset.records[0].candidate_id == "c,1"
    assert dataset.records[0].race_ethnicity == "Black or African American"


def test_bad_outcome_names_row():
    text = CSV_HEADER + "c1,1,Asian,Female,\nc2,maybe,White,Male,\n"
    with pytest.raises(MalformedRecord, match="row 2"):
        read_outcome_csv(text, **DATES)


def test_bad_score_names_row():
    text = "candidate_id,score,race_ethnicity,gender\nc1,not-a-number,Asian,Female\n"
    with pytest.raises(MalformedRecord, match="row 1"):
        read_outcome_csv(text, **DATES)


def test_scoring_method_on_outcome_only_csv():
    text = CSV_HEADER + "c1,1,Asian,Female,\n"
    with pytest.raises(MalformedRecord, match="score"):
        read_outcome_csv(text, method=RateMethod.SCORING, **DATES)


def test_missing_required_column():
    with pytest.raises(ValidationError, match="gender"):
        read_outcome_csv("candidate_id,outcome,race_ethnicity\nc1,1,Asian\n", **DATES)


def test_both_value_columns_need_explicit_method():
    text = "candidate_id,outcome,score,race_ethnicity,gender\nc1,1,2.0,Asian,Female\n"
    with pytest.raises(ValidationError, match="explicit"):
        read_outcome_csv(text, **DATES)
    dataset = read_outcome_csv(text, method=RateMethod.SELECTION, **DATES)
    assert dataset.method is RateMethod.SELECTION


def test_empty_csv():
    with pytest.raises((EmptyDataset, ValidationError)):
        read_outcome_csv("", **DATES)
    with pytest.raises(EmptyDataset):
        read_outcome_csv(CSV_HEADER, **DATES)


def test_empty_candidate_id_rejected():
    text = CSV_HEADER + ",1,Asian,Female,\n"
    with pytest.raises(MalformedRecord, match="candidate_id"):
        read_outcome_csv(text, **DATES)


def test_scheme_round_trip(tmp_path):
    raw = {
        "race_ethnicity_groups": ["Asian", "White"],
        "gender_groups": ["Male", "Female"],
        "intersectional": True,
        "inference": {"relative_errors": {"Asian": 0.05}},
    }
    scheme = scheme_from_dict(raw)
    assert scheme.inference.relative_errors == {"Asian": 0.05}
    assert scheme_to_dict(scheme) == raw

    path = tmp_path / "scheme.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    assert load_scheme(path).race_ethnicity_groups == ("Asian", "White")


def test_scheme_schema_violation_has_path():
    with pytest.raises(ValidationError, match="gender_groups"):
        scheme_from_dict({"race_ethnicity_groups": ["Asian"], "gender_groups": []})


def test_scheme_negative_inference_error_rejected():
    with pytest.raises(ValidationError):
        scheme_from_dict(
            {
                "race_ethnicity_groups": ["Asian"],
                "gender_groups": ["Male", "Female"],
                "inference": {"relative_errors": {"Asian": -0.1}},
            }
        )


def test_scheme_bad_json_names_line(tmp_path):
    path = tmp_path / "scheme.json"
    path.write_text('{\n  "race_ethnicity_groups": [}\n', encoding="utf-8")
    with pytest.raises(ValidationError, match="line"):
        load_scheme(path)
