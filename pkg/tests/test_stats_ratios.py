import math

import pytest

from critaudit.errors import DegenerateFavoredRate, EmptyDataset, NoEligibleGroups
from critaudit.stats import (
    DemographicScheme,
    GroupRate,
    InferenceErrorModel,
    apply_small_group_rule,
    compute_impact_ratios,
    intersectional_groups,
)


def rates_from(counts: dict[str, tuple[int, int]]) -> list[GroupRate]:
    return [GroupRate.from_counts(g, s, n) for g, (s, n) in counts.items()]


class TestComputeImpactRatios:
    def test_boundary_ratio_not_flagged(self):
        rates = rates_from({"F": (5, 10), "D": (4, 10)})
        entries = {e.group: e for e in compute_impact_ratios(rates, "F")}
        assert entries["D"].ratio == 0.8
        assert not entries["D"].below_fourfifths

    def test_just_below_boundary_flagged(self):
        rates = rates_from({"F": (50, 100), "D": (39, 100)})
        entries = {e.group: e for e in compute_impact_ratios(rates, "F")}
        assert entries["D"].ratio < 0.8
        assert entries["D"].below_fourfifths

    def test_equal_rates_symmetric_error(self):
        rates = rates_from({"F": (50, 100), "D": (50, 100)})
        entries = {e.group: e for e in compute_impact_ratios(rates, "F")}
        sigma = rates[0].std_error
        assert entries["D"].ratio == 1.0
        assert entries["D"].ratio_std_error == pytest.approx(
            math.sqrt(2) * sigma / 0.5, abs=1e-12
        )

    def test_propagation_formula(self):
        # F: 50/100, D: 30/100 -> ratio 0.6 with first-order propagated error,
        # evaluated independently from the binomial standard errors
        rates = rates_from({"F": (50, 100), "D": (30, 100)})
        entries = {e.group: e for e in compute_impact_ratios(rates, "F")}
        assert entries["D"].ratio == pytest.approx(0.6, abs=1e-15)
        assert entries["D"].ratio_std_error == pytest.approx(
            0.10954451150103321, abs=1e-12
        )

    def test_favored_entry_exact(self):
        rates = rates_from({"F": (50, 100), "D": (30, 100)})
        entries = {e.group: e for e in compute_impact_ratios(rates, "F")}
        assert entries["F"].ratio == 1.0
        assert entries["F"].ratio_std_error == 0.0
        assert not entries["F"].below_fourfifths

    def test_zero_disfavored_rate(self):
        rates = rates_from({"F": (50, 100), "D": (0, 20)})
        entries = {e.group: e for e in compute_impact_ratios(rates, "F")}
        assert entries["D"].ratio == 0.0
        assert entries["D"].ratio_std_error == 0.0  # binomial sigma at p=0 is 0

    def test_zero_favored_rate_is_an_error(self):
        rates = rates_from({"F": (0, 10), "D": (0, 10)})
        with pytest.raises(DegenerateFavoredRate):
            compute_impact_ratios(rates, "F")

    def test_unknown_favored_group(self):
        rates = rates_from({"A": (5, 10)})
        with pytest.raises(NoEligibleGroups):
            compute_impact_ratios(rates, "Z")

    def test_inference_error_added_in_quadrature(self):
        rates = rates_from({"F": (50, 100), "D": (30, 100)})
        model = InferenceErrorModel(relative_errors={"D": 0.1, "F": 0.05})
        entries = {e.group: e for e in compute_impact_ratios(rates, "F", model)}
        sigma_d = math.sqrt(rates[1].std_error**2 + (0.1 * 0.3) ** 2)
        sigma_f = math.sqrt(rates[0].std_error**2 + (0.05 * 0.5) ** 2)
        expected = 0.6 * math.sqrt((sigma_d / 0.3) ** 2 + (sigma_f / 0.5) ** 2)
        assert entries["D"].ratio_std_error == pytest.approx(expected, abs=1e-12)
        # systematic errors only widen the uncertainty
        plain = {e.group: e for e in compute_impact_ratios(rates, "F")}
        assert entries["D"].ratio_std_error > plain["D"].ratio_std_error

    def test_inference_error_on_intersectional_label(self):
        model = InferenceErrorModel(relative_errors={"Asian": 0.3, "Female": 0.4})
        assert model.relative_error_for(("Asian", "Female")) == pytest.approx(0.5)
        assert model.relative_error_for("Asian") == 0.3
        assert model.relative_error_for("Unlisted") == 0.0

    def test_ratio_nondecreasing_in_success_count(self):
        # favored rate fixed; the disfavored ratio grows with its successes
        favored = GroupRate.from_counts("F", 60, 100)
        previous = -1.0
        for successes in range(0, 51):
            rates = [favored, GroupRate.from_counts("D", successes, 50)]
            entry = next(e for e in compute_impact_ratios(rates, "F") if e.group == "D")
            assert entry.ratio >= previous
            previous = entry.ratio


class TestSmallGroupRule:
    def test_below_two_percent_excludable_with_disclosure(self):
        rates = rates_from({"A": (1, 1), "B": (50, 99)})
        included, excluded = apply_small_group_rule(rates, 100)
        assert [r.group for r in excluded] == ["A"]
        assert excluded[0].n == 1 and excluded[0].rate == 1.0  # still disclosed
        assert [r.group for r in included] == ["B"]

    def test_exactly_two_percent_included(self):
        rates = rates_from({"A": (1, 2), "B": (50, 98)})
        included, excluded = apply_small_group_rule(rates, 100)
        assert excluded == []
        assert {r.group for r in included} == {"A", "B"}

    def test_all_groups_large(self):
        rates = rates_from({"A": (5, 50), "B": (5, 50)})
        included, excluded = apply_small_group_rule(rates, 100)
        assert excluded == []

    def test_partition_preserves_objects(self):
        rates = rates_from({"A": (1, 1), "B": (50, 99)})
        included, excluded = apply_small_group_rule(rates, 100)
        assert set(map(id, included + excluded)) == set(map(id, rates))

    def test_zero_total(self):
        with pytest.raises(EmptyDataset):
            apply_small_group_rule([], 0)

    def test_exact_integer_boundary_sweep(self):
        for total in range(1, 400):
            for n in range(1, total + 1):
                rates = [GroupRate.from_counts("A", 0, n)]
                _, excluded = apply_small_group_rule(rates, total)
                assert bool(excluded) == (n * 100 < 2 * total)


class TestIntersectionalGroups:
    def test_seven_by_two(self):
        scheme = DemographicScheme(
            race_ethnicity_groups=tuple(f"R{i}" for i in range(7)),
            gender_groups=("Male", "Female"),
        )
        groups = intersectional_groups(scheme)
        assert len(groups) == 14
        assert len(set(groups)) == 14

    def test_one_by_one(self):
        scheme = DemographicScheme(race_ethnicity_groups=("R",), gender_groups=("Male",))
        assert intersectional_groups(scheme) == [("R", "Male")]

    def test_race_major_ordering(self):
        scheme = DemographicScheme(
            race_ethnicity_groups=("r1", "r2", "r3"), gender_groups=("g1", "g2")
        )
        assert intersectional_groups(scheme) == [
            ("r1", "g1"),
            ("r1", "g2"),
            ("r2", "g1"),
            ("r2", "g2"),
            ("r3", "g1"),
            ("r3", "g2"),
        ]
