from __future__ import annotations

import random
from datetime import date
from typing import Mapping, Sequence

import pytest

from critaudit.stats import (
    CandidateRecord,
    DemographicScheme,
    OutcomeDataset,
    RateMethod,
)

ANALYSIS_DATE = date(2025, 7, 1)
WINDOW = (date(2025, 1, 2), date(2025, 6, 30))


def selection_dataset(
    cells: Mapping[tuple[str, str], tuple[int, int]],
    *,
    unknown: int = 0,
    analysis_date: date = ANALYSIS_DATE,
    window: tuple[date, date] = WINDOW,
    settings: Mapping[str, str] | None = None,
) -> OutcomeDataset:
    """Dataset with `successes of n` positive outcomes per (race, gender) cell."""
    records: list[CandidateRecord] = []
    for (race, gender), (successes, n) in cells.items():
        for k in range(n):
            records.append(
                CandidateRecord(
                    candidate_id=f"c{len(records):05d}",
                    outcome=k < successes,
                    race_ethnicity=race,
                    gender=gender,
                )
            )
    for _ in range(unknown):
        records.append(
            CandidateRecord(candidate_id=f"c{len(records):05d}", outcome=False)
        )
    return OutcomeDataset(
        records=tuple(records),
        method=RateMethod.SELECTION,
        collection_window=window,
        analysis_date=analysis_date,
        settings_used=dict(settings or {}),
    )


def scoring_dataset(
    cells: Mapping[tuple[str, str], Sequence[float]],
    *,
    unknown_scores: Sequence[float] = (),
    analysis_date: date = ANALYSIS_DATE,
    window: tuple[date, date] = WINDOW,
) -> OutcomeDataset:
    records: list[CandidateRecord] = []
    for (race, gender), scores in cells.items():
        for score in scores:
            records.append(
                CandidateRecord(
                    candidate_id=f"c{len(records):05d}",
                    score=float(score),
                    race_ethnicity=race,
                    gender=gender,
                )
            )
    for score in unknown_scores:
        records.append(
            CandidateRecord(candidate_id=f"c{len(records):05d}", score=float(score))
        )
    return OutcomeDataset(
        records=tuple(records),
        method=RateMethod.SCORING,
        collection_window=window,
        analysis_date=analysis_date,
    )


def scheme_for(
    cells: Mapping[tuple[str, str], object],
    *,
    intersectional: bool = True,
    inference=None,
) -> DemographicScheme:
    races: list[str] = []
    genders: list[str] = []
    for race, gender in cells:
        if race not in races:
            races.append(race)
        if gender not in genders:
            genders.append(gender)
    return DemographicScheme(
        race_ethnicity_groups=tuple(races),
        gender_groups=tuple(genders),
        intersectional=intersectional,
        inference=inference,
    )


def random_selection_cells(
    rng: random.Random,
    *,
    n_races: int = 3,
    n_genders: int = 2,
    min_n: int = 2,
    max_n: int = 60,
    strict_interior: bool = True,
) -> dict[tuple[str, str], tuple[int, int]]:
    """Random per-cell counts; strict_interior keeps every rate inside (0, 1)."""
    cells: dict[tuple[str, str], tuple[int, int]] = {}
    for r in range(n_races):
        for g in range(n_genders):
            n = rng.randint(max(min_n, 2 if strict_interior else min_n), max_n)
            if strict_interior:
                successes = rng.randint(1, n - 1)
            else:
                successes = rng.randint(0, n)
            cells[(f"Race{r}", f"Gender{g}")] = (successes, n)
    return cells


@pytest.fixture
def store_root(tmp_path):
    return tmp_path / "store"


# --- desk-scale fixture: 500 synthetic candidates over the 7x2 EEO scheme ---

EEO_RACES = (
    "Hispanic or Latino",
    "White",
    "Black or African American",
    "Native Hawaiian or Other Pacific Islander",
    "Asian",
    "Native American or Alaska Native",
    "Two or More Races",
)
FIXTURE_GENDERS = ("Male", "Female")


def fixture_cells() -> dict[tuple[str, str], tuple[int, int]]:
    """14 groups of 35 candidates; one unique favored cell, no ratio below 0.8."""
    cells: dict[tuple[str, str], tuple[int, int]] = {}
    index = 0
    for race in EEO_RACES:
        for gender in FIXTURE_GENDERS:
            if index == 0:
                successes = 19
            elif index % 2 == 0:
                successes = 18
            else:
                successes = 17
            cells[(race, gender)] = (successes, 35)
            index += 1
    return cells


def write_fixture_csv(path) -> int:
    """500-row selection CSV: 490 labeled candidates plus 10 unknowns."""
    rows = ["candidate_id,outcome,race_ethnicity,gender,setting:threshold"]
    counter = 0
    for (race, gender), (successes, n) in fixture_cells().items():
        for k in range(n):
            rows.append(f"cand-{counter:05d},{1 if k < successes else 0},{race},{gender},0.5")
            counter += 1
    for _ in range(10):
        rows.append(f"cand-{counter:05d},0,,,0.5")
        counter += 1
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return counter


def write_eeo_scheme(path) -> None:
    import json

    path.write_text(
        json.dumps(
            {
                "race_ethnicity_groups": list(EEO_RACES),
                "gender_groups": list(FIXTURE_GENDERS),
                "intersectional": True,
            }
        ),
        encoding="utf-8",
    )
