import pytest

from conftest import scheme_for, scoring_dataset, selection_dataset
from critaudit.errors import DegenerateFavoredRate
from critaudit.stats import (
    Axis,
    SignificanceMethod,
    analysis_report_from_dict,
    run_disparate_impact_analysis,
)
from oracles import z_test_oracle


class TestRunDisparateImpactAnalysis:
    def test_two_group_selection_composition(self):
        cells = {("F", "X"): (50, 100), ("D", "X"): (30, 100)}
        scheme = scheme_for(cells, intersectional=False)
        report = run_disparate_impact_analysis(selection_dataset(cells), scheme)

        race = report.axis(Axis.RACE_ETHNICITY)
        assert race.favored_group == "F"
        entries = {e.group: e for e in race.impact_ratios}
        assert entries["D"].ratio == pytest.approx(0.6, abs=1e-15)
        assert not entries["D"].excluded_small_group
        # both n = 100 >= 30, so the z-test applies; p matches the oracle
        test = entries["D"].significance
        assert test is not None and test.method is SignificanceMethod.Z_TEST
        _, p = z_test_oracle(30, 100, 50, 100)
        assert test.p_value == pytest.approx(p, abs=1e-9)
        assert entries["F"].significance is None

    def test_single_group_axis(self):
        cells = {("Only", "X"): (5, 10)}
        report = run_disparate_impact_analysis(
            selection_dataset(cells), scheme_for(cells, intersectional=False)
        )
        race = report.axis(Axis.RACE_ETHNICITY)
        assert race.favored_group == "Only"
        assert [e.group for e in race.impact_ratios] == ["Only"]
        assert all(e.significance is None for e in race.impact_ratios)

    def test_scoring_has_no_significance_tests(self):
        cells = {("A", "X"): [1, 2, 5, 6], ("B", "X"): [3, 4, 7, 8]}
        report = run_disparate_impact_analysis(
            scoring_dataset(cells), scheme_for(cells, intersectional=False)
        )
        assert report.median_score == 4.5
        for axis in report.axes:
            assert all(e.significance is None for e in axis.impact_ratios)

    def test_small_group_chooses_fisher(self):
        cells = {("F", "X"): (50, 100), ("D", "X"): (2, 5)}
        report = run_disparate_impact_analysis(
            selection_dataset(cells), scheme_for(cells, intersectional=False)
        )
        entries = {e.group: e for e in report.axis(Axis.RACE_ETHNICITY).impact_ratios}
        assert entries["D"].significance.method is SignificanceMethod.FISHER_EXACT

    def test_small_group_excluded_but_disclosed_and_tested(self):
        cells = {("F", "X"): (61, 120), ("D", "X"): (1, 2)}  # 2 of 122 < 2%
        report = run_disparate_impact_analysis(
            selection_dataset(cells), scheme_for(cells, intersectional=False)
        )
        race = report.axis(Axis.RACE_ETHNICITY)
        entries = {e.group: e for e in race.impact_ratios}
        assert entries["D"].excluded_small_group
        assert {r.group for r in race.rates} >= {"D"}  # size and rate stay disclosed
        assert entries["D"].significance is not None

    def test_unknown_demographics_counted_once(self):
        cells = {("A", "M"): (5, 10), ("A", "F"): (5, 10)}
        report = run_disparate_impact_analysis(
            selection_dataset(cells, unknown=7), scheme_for(cells)
        )
        assert report.unknown_demographics_n == 7
        assert report.axis(Axis.GENDER).unknown_n == 7

    def test_empty_scheme_group_disclosed(self):
        cells = {("A", "M"): (5, 10)}
        scheme = scheme_for({("A", "M"): None, ("B", "M"): None})
        report = run_disparate_impact_analysis(selection_dataset(cells), scheme)
        race = report.axis(Axis.RACE_ETHNICITY)
        assert race.empty_groups == ("B",)
        universe = {r.group for r in race.rates} | set(race.empty_groups)
        assert universe == {"A", "B"}

    def test_error_names_the_axis(self):
        cells = {("A", "M"): (0, 10), ("B", "M"): (0, 10)}
        with pytest.raises(DegenerateFavoredRate, match="race_ethnicity"):
            run_disparate_impact_analysis(
                selection_dataset(cells), scheme_for(cells, intersectional=False)
            )

    def test_intersectional_axis_present_by_default(self):
        cells = {("A", "M"): (5, 10), ("A", "F"): (4, 10)}
        report = run_disparate_impact_analysis(selection_dataset(cells), scheme_for(cells))
        assert report.has_axis(Axis.INTERSECTIONAL)
        axis = report.axis(Axis.INTERSECTIONAL)
        assert {r.group for r in axis.rates} == {("A", "M"), ("A", "F")}

    def test_favored_tie_flagged_in_report(self):
        cells = {("A", "M"): (5, 10), ("B", "M"): (5, 10)}
        report = run_disparate_impact_analysis(
            selection_dataset(cells), scheme_for(cells, intersectional=False)
        )
        race = report.axis(Axis.RACE_ETHNICITY)
        assert race.favored_group == "A"
        assert race.favored_tied

    def test_round_trip_through_dict(self):
        cells = {("A", "M"): (5, 10), ("B", "F"): (3, 9)}
        report = run_disparate_impact_analysis(
            selection_dataset(cells, unknown=2, settings={"threshold": "0.5"}),
            scheme_for(cells),
        )
        rebuilt = analysis_report_from_dict(report.to_dict())
        assert rebuilt.to_dict() == report.to_dict()

    def test_every_scheme_group_appears_exactly_once_per_axis(self):
        import random

        from critaudit.stats import DemographicScheme

        rng = random.Random(11)
        scheme = DemographicScheme(
            race_ethnicity_groups=("R0", "R1", "R2"),
            gender_groups=("Male", "Female"),
        )
        for _ in range(50):
            cells = {}
            for race in scheme.race_ethnicity_groups:
                for gender in scheme.gender_groups:
                    if rng.random() < 0.7:  # leave some cells empty
                        n = rng.randint(1, 30)
                        cells[(race, gender)] = (rng.randint(1, n), n)
            if not cells:
                continue
            report = run_disparate_impact_analysis(selection_dataset(cells), scheme)
            for axis_report in report.axes:
                rated = [r.group for r in axis_report.rates]
                universe = rated + list(axis_report.empty_groups)
                expected = list(scheme.groups_for(axis_report.axis))
                assert sorted(map(str, universe)) == sorted(map(str, expected))
                assert len(universe) == len(set(universe))
