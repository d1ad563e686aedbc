from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from ce_lcrt.designs import (
    BudgetModel,
    DesignFamily,
    DesignPattern,
    LayoutError,
    MISSING,
    TrialLayout,
    build_schedule,
    crxo_constants,
    design_constants,
    feasible_designs,
    pa_constants,
    staggered_incomplete_pattern,
)
from conftest import crxo_layout, pa_layout, sw_layout


class TestSchedules:
    def test_crxo_two_period(self):
        schedule = build_schedule(crxo_layout(2), 4)
        expected = [[1, 0], [1, 0], [0, 1], [0, 1]]
        np.testing.assert_array_equal(schedule.treatment, expected)
        assert schedule.complete

    def test_crxo_alternation_and_halves(self):
        for J in (2, 4, 6, 8):
            schedule = build_schedule(crxo_layout(J), 10)
            assert (schedule.treatment.sum(axis=1) == J // 2).all()
            # sequence 1 treated in odd periods (1-based), sequence 2 complement
            np.testing.assert_array_equal(schedule.treatment[0], schedule.treatment[0])
            assert schedule.treatment[0, 0] == 1 and schedule.treatment[0, 1] == 0
            assert schedule.treatment[-1, 0] == 0 and schedule.treatment[-1, 1] == 1

    def test_sw_staircase(self):
        schedule = build_schedule(sw_layout(4, 6), 4)
        for q in range(1, 5):
            row = schedule.treatment[q - 1]
            assert (row[q:] == 1).all() and (row[:q] == 0).all()

    def test_pa_arm_constancy(self):
        schedule = build_schedule(pa_layout(3), 2)
        np.testing.assert_array_equal(schedule.treatment, [[1, 1, 1], [0, 0, 0]])

    def test_divisibility_enforced(self):
        with pytest.raises(LayoutError):
            build_schedule(crxo_layout(2), 5)
        with pytest.raises(LayoutError):
            build_schedule(sw_layout(3, 4), 10)

    def test_odd_period_crossover_rejected(self):
        with pytest.raises(LayoutError):
            TrialLayout(DesignFamily.CRXO, 3, Fraction(1, 2))

    def test_too_few_periods_for_wedge(self):
        with pytest.raises(LayoutError):
            TrialLayout(DesignFamily.SW, 3, sequences=3)


class TestDesignConstants:
    def test_crxo_example(self):
        consts = design_constants(build_schedule(crxo_layout(2), 4).treatment)
        assert (consts.U, consts.V, consts.W) == (4, 4, 8)

    def test_pa_example(self):
        consts = design_constants(build_schedule(pa_layout(2), 4).treatment)
        assert (consts.U, consts.V, consts.W) == (4, 8, 8)

    def test_sw_example(self):
        consts = design_constants(build_schedule(sw_layout(3, 4), 3).treatment)
        assert (consts.U, consts.V, consts.W) == (6, 14, 14)

    @pytest.mark.parametrize("J", [2, 4, 6])
    def test_crxo_closed_forms_all_even_counts(self, J):
        layout = crxo_layout(J)
        for I in range(2, 201, 2):
            consts = design_constants(build_schedule(layout, I).treatment)
            closed = crxo_constants(I, J, 0.5)
            assert consts == closed

    def test_pa_closed_forms_with_uneven_allocation(self):
        layout = TrialLayout(DesignFamily.PA, 3, Fraction(1, 3))
        for I in range(3, 201, 3):
            consts = design_constants(build_schedule(layout, I).treatment)
            closed = pa_constants(I, 3, 1 / 3)
            assert consts.U == pytest.approx(closed.U)
            assert consts.V == pytest.approx(closed.V)
            assert consts.W == pytest.approx(closed.W)

    def test_schedule_identities(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            J = 2 * int(rng.integers(1, 5))
            den = int(rng.choice([2, 4, 5]))
            num = int(rng.integers(1, den))
            pi = num / den
            I = den * int(rng.integers(1, 12))
            crxo = design_constants(
                build_schedule(TrialLayout(DesignFamily.CRXO, J, Fraction(num, den)), I).treatment)
            assert crxo.U ** 2 - I * crxo.V == pytest.approx(0.0)
            pa = design_constants(
                build_schedule(TrialLayout(DesignFamily.PA, J, Fraction(num, den)), I).treatment)
            assert pa.U ** 2 - I * pa.V == pytest.approx(-I * I * J * J * pi * (1 - pi))
            assert I * pa.U - pa.W == pytest.approx(I * I * J * pi * (1 - pi))

    def test_rejects_incomplete_matrix(self):
        with pytest.raises(ValueError):
            design_constants(np.array([[0, 2], [1, 0]]))


class TestBudgetAndFeasibleSpace:
    def test_example_budget(self):
        budget = BudgetModel(13000.0, 3000.0, 250.0, 10, 10)
        pairs = list(feasible_designs(crxo_layout(2), budget))
        assert (2, 2) in pairs and (2, 4) in pairs
        assert (4, 2) not in pairs
        assert all(I % 2 == 0 for I, _ in pairs)

    def test_empty_when_budget_too_small(self):
        budget = BudgetModel(100.0, 3000.0, 250.0, 10, 10)
        assert list(feasible_designs(crxo_layout(2), budget)) == []

    def test_sw_contains_exact_fit(self, table_budget):
        pairs = list(feasible_designs(sw_layout(3, 4), table_budget))
        assert (30, 7) in pairs
        assert all(I % 3 == 0 for I, _ in pairs)

    def test_every_yielded_pair_is_affordable(self, table_budget):
        layout = crxo_layout(4)
        pairs = set(feasible_designs(layout, table_budget))
        for I in range(2, 101):
            for K in range(2, 201):
                cost = I * (3000 + 250 * 4 * K)
                expected = I % 2 == 0 and cost <= table_budget.total
                assert ((I, K) in pairs) == expected

    def test_scan_order_is_i_major(self, table_budget):
        pairs = list(feasible_designs(crxo_layout(2), table_budget))
        assert pairs == sorted(pairs)

    def test_invalid_budget_rejected(self):
        with pytest.raises(ValueError):
            BudgetModel(-1.0, 3000.0, 250.0, 100, 200)


class TestDesignPattern:
    def test_csv_round_trip(self):
        text = "0,1,1,.\n.,0,1,1\n"
        pattern = DesignPattern.from_csv_text(text)
        assert pattern.to_csv_text() == text
        assert pattern.observed_cluster_periods() == 6

    def test_rollback_rejected(self):
        with pytest.raises(LayoutError):
            DesignPattern.from_csv_text("0,1,0\n0,0,1\n")

    def test_unobserved_period_rejected(self):
        with pytest.raises(LayoutError):
            DesignPattern.from_csv_text("0,.,1\n0,.,1\n")

    def test_single_observation_row_rejected(self):
        with pytest.raises(LayoutError):
            DesignPattern.from_csv_text("0,.,.\n0,1,1\n")

    def test_bad_cell_rejected(self):
        with pytest.raises(LayoutError):
            DesignPattern.from_csv_text("0,2\n1,0\n")

    def test_staggered_even_count(self):
        pattern = staggered_incomplete_pattern(14, 7, 8)
        entries = pattern.entries
        assert (entries[:7, 7] == MISSING).all()
        assert (entries[7:, :2] == MISSING).all()
        assert pattern.observed_cluster_periods() == 7 * 7 + 7 * 6

    def test_staggered_odd_count_keeps_last_cluster_complete(self):
        pattern = staggered_incomplete_pattern(21, 7, 10)
        entries = pattern.entries
        assert (entries[:10, 9] == MISSING).all()
        assert (entries[10:20, :2] == MISSING).all()
        assert (entries[20] != MISSING).all()

    def test_incomplete_layout_cluster_periods(self):
        layout = TrialLayout(DesignFamily.SW_INCOMPLETE, 8, sequences=7)
        assert layout.cluster_periods(28) == 14 * 7 + 14 * 6
        assert layout.cluster_periods(7) == 3 * 7 + 3 * 6 + 8

    def test_two_site_trial_pattern_from_csv(self):
        from pathlib import Path

        path = Path(__file__).parent / "data" / "reinvestment-pattern.csv"
        pattern = DesignPattern.from_csv(path)
        assert (pattern.clusters, pattern.periods) == (11, 8)
        assert pattern.observed_cluster_periods() == 6 * 7 + 5 * 6
        # first site: six early-enders; second site: five late-starters
        assert (pattern.entries[:6, 7] == MISSING).all()
        assert (pattern.entries[6:, :2] == MISSING).all()
        assert pattern.to_csv_text() == path.read_text()

    def test_explicit_pattern_fixes_cluster_count(self):
        pattern = staggered_incomplete_pattern(14, 7, 8)
        layout = TrialLayout(DesignFamily.SW_INCOMPLETE, 8, pattern=pattern)
        assert layout.admits_cluster_count(14)
        assert not layout.admits_cluster_count(28)
        schedule = build_schedule(layout, 14)
        assert not schedule.complete
