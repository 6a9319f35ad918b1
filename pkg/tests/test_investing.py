import numpy as np
import pytest
from hypothesis import given, strategies as st

from sava.investing import (
    Flag,
    LedgerError,
    LevelRecord,
    SelectionLedger,
    UnsupportedRegimeError,
    WealthState,
    fsr_hat,
    fsr_hat_arm,
    g_k,
    levels_arm_specific,
    levels_classical,
    levels_method1,
    levels_savaspecial,
    levels_symmetric,
    neighborhood_count,
    wealth_credit,
    wealth_greedy_step,
)


def ledger_with(n, selections=(), drops=()):
    led = SelectionLedger()
    for j in range(1, n + 1):
        led.arrive(j)
    for j, arm in selections:
        led.select(j, arm)
    for j in drops:
        led.drop(j)
    return led


class TestLedger:
    def test_flags(self):
        led = ledger_with(3, [(1, "A")], [2])
        assert led.flag(1) is Flag.SELECTED_A
        assert led.flag(2) is Flag.DROPPED
        assert led.flag(3) is Flag.CONTINUING
        assert led.flag(9) is Flag.NOT_YET_ARRIVED
        assert led.n_dropped == 1 and led.n_selected() == 1

    def test_absorbing(self):
        led = ledger_with(2, [(1, "B")])
        with pytest.raises(LedgerError):
            led.select(1, "A")
        with pytest.raises(LedgerError):
            led.drop(1)

    def test_cannot_decide_unarrived(self):
        with pytest.raises(LedgerError):
            SelectionLedger().select(1, "A")

    def test_double_arrival(self):
        led = ledger_with(1)
        with pytest.raises(LedgerError):
            led.arrive(1)

    def test_bad_arm(self):
        with pytest.raises(ValueError):
            ledger_with(1).select(1, "C")

    def test_sorted_selection_lists(self):
        led = ledger_with(5, [(4, "A"), (2, "B"), (3, "A")])
        assert led.selections() == [2, 3, 4]
        assert led.selections("A") == [3, 4]
        assert led.selections("B") == [2]

    def test_copy_is_independent(self):
        led = ledger_with(3, [(1, "A")])
        c = led.copy()
        c.select(2, "B")
        assert led.n_selected() == 1


class TestNeighborhood:
    def test_first_selection_excluded(self):
        # selections {1, 3}, j = 4, k = 3: window [1, 3] holds both, the first is excluded
        assert neighborhood_count(ledger_with(4, [(1, "A"), (3, "A")]), 4, 3) == 1

    def test_only_first_selection(self):
        assert neighborhood_count(ledger_with(3, [(1, "A")]), 2, 5) == 0

    def test_first_selection_outside_window(self):
        # selections {1, 5, 6}, j = 7, k = 2: window [5, 6], first (1) already outside
        assert neighborhood_count(ledger_with(7, [(1, "A"), (5, "B"), (6, "A")]), 7, 2) == 2

    def test_ignores_later_indices(self):
        assert neighborhood_count(ledger_with(9, [(1, "A"), (2, "A"), (8, "A")]), 3, 5) == 1

    def test_bad_window(self):
        with pytest.raises(ValueError):
            neighborhood_count(ledger_with(1), 1, 0)


class TestSymmetricLevels:
    def test_initial_budget(self):
        a = levels_symmetric(ledger_with(1), 1, 25, 0.05)
        assert a == pytest.approx((0.002, 0.002))

    def test_no_initial_budget_past_k(self):
        assert levels_symmetric(ledger_with(30), 26, 25, 0.05) == (0.0, 0.0)

    def test_second_selection_funds_window(self):
        led = ledger_with(30, [(1, "A"), (2, "B")])
        assert levels_symmetric(led, 3, 25, 0.05)[0] == pytest.approx(0.05 / 25 * 2)
        assert levels_symmetric(led, 27, 25, 0.05)[0] == pytest.approx(0.05 / 25)
        assert levels_symmetric(led, 28, 25, 0.05)[0] == 0.0

    def test_classical_counts_only_a(self):
        led = ledger_with(5, [(1, "A"), (2, "B"), (3, "A")])
        assert levels_classical(led, 4, 3, 0.03) == pytest.approx(0.01 * (0 + 1))
        assert levels_classical(led, 2, 3, 0.03) == pytest.approx(0.01)

    def test_arm_specific(self):
        led = ledger_with(6, [(1, "A"), (2, "A"), (3, "B"), (4, "B")])
        a_a, a_b = levels_arm_specific(led, 5, 4, 2, 0.04, 0.02)
        assert a_a == pytest.approx(0.01 * (0 + 1))   # A: {1, 2} minus first
        assert a_b == pytest.approx(0.01 * (0 + 1))   # B: {3, 4} minus first


class TestFsrHat:
    def test_no_selections(self):
        recs = [LevelRecord(), LevelRecord()]
        recs[0].set(0.002, 0.002)
        assert fsr_hat(recs, ledger_with(2)) == pytest.approx(0.002)

    def test_uses_maxima(self):
        r = LevelRecord()
        r.set(0.01, 0.0)
        r.set(0.0, 0.02)
        assert (r.max_a, r.max_b, r.wealth) == (0.01, 0.02, 0.02)
        led = ledger_with(3, [(1, "A"), (2, "A")])
        assert fsr_hat([r, r], led) == pytest.approx(0.02)
        assert fsr_hat_arm([r, r], led, "A") == pytest.approx(0.01)
        assert fsr_hat_arm([r, r], led, "B") == pytest.approx(0.04)

    def test_bad_arm(self):
        with pytest.raises(ValueError):
            fsr_hat_arm([], ledger_with(1), "X")


class TestGeometric:
    @pytest.mark.parametrize("k", [1, 2, 5, 10, 30])
    def test_weights_sum_to_one(self, k):
        assert sum(g_k(i, k) for i in range(1, k + 1)) == pytest.approx(1.0)

    def test_out_of_range(self):
        assert g_k(0, 5) == 0.0 and g_k(6, 5) == 0.0

    def test_savaspecial_levels(self):
        led = ledger_with(5, [(1, "A"), (2, "A")])
        # task 3: initial 0.1 * 2^-3 plus slot 3 - 2 = 1 of the second selection
        assert levels_savaspecial(led, 3, 10, 0.1)[0] == pytest.approx(0.1 * (2 ** -3 + 2 ** -1))

    def test_method1_rotates(self):
        led = ledger_with(3)
        seq = [levels_method1(led, 1, 3, 0.1, t, 1)[0] for t in range(1, 7)]
        assert seq == pytest.approx([0.05, 0.025, 0.025, 0.05, 0.025, 0.025])

    def test_method1_needs_integer_times(self):
        with pytest.raises(UnsupportedRegimeError):
            levels_method1(ledger_with(1), 1, 3, 0.1, 1.5, 1)


class TestWealth:
    def test_greedy_spend(self):
        w, level = wealth_greedy_step(WealthState(0.1), True, 0.03)
        assert level == 0.03 and w.w == pytest.approx(0.07)

    def test_greedy_refuses(self):
        w, level = wealth_greedy_step(WealthState(0.01), True, 0.03)
        assert level == 0.0 and w.w == 0.01
        w, level = wealth_greedy_step(WealthState(0.5), False, 0.03)
        assert level == 0.0 and w.w == 0.5

    def test_credit(self):
        assert wealth_credit(WealthState(0.0), 0, 1, 0.1).w == 0.0
        assert wealth_credit(WealthState(0.0), 1, 3, 0.1).w == pytest.approx(0.2)

    def test_negative_wealth_rejected(self):
        with pytest.raises(ValueError):
            WealthState(-0.1)


def random_ledger(rng, n):
    led = SelectionLedger()
    for j in range(1, n + 1):
        led.arrive(j)
    for j in range(1, n + 1):
        u = rng.random()
        if u < 0.3:
            led.select(j, "A")
        elif u < 0.5:
            led.select(j, "B")
        elif u < 0.6:
            led.drop(j)
    return led


LEVEL_RULES = [
    lambda led, j: levels_symmetric(led, j, 5, 0.05),
    lambda led, j: (levels_classical(led, j, 4, 0.05), 0.0),
    lambda led, j: levels_arm_specific(led, j, 3, 6, 0.03, 0.02),
    lambda led, j: levels_savaspecial(led, j, 5, 0.05),
]


def test_level_monotone_and_index_local():
    # 10^4 random ledgers: adding a selection never lowers a level, and flags of
    # tasks with index >= j never change task j's level
    rng = np.random.default_rng(7)
    for trial in range(10_000):
        n = int(rng.integers(2, 25))
        led = random_ledger(rng, n)
        rule = LEVEL_RULES[trial % len(LEVEL_RULES)]
        cont = [j for j in led.tasks() if led.flag(j) is Flag.CONTINUING]
        j = int(rng.integers(1, n + 1))
        before = rule(led, j)
        if cont:
            grown = led.copy()
            grown.select(int(rng.choice(cont)), "A" if rng.random() < 0.5 else "B")
            after = rule(grown, j)
            assert after[0] >= before[0] - 1e-15 and after[1] >= before[1] - 1e-15
        later = [i for i in cont if i >= j]
        if later:
            perturbed = led.copy()
            i = int(rng.choice(later))
            if rng.random() < 0.5:
                perturbed.select(i, "A")
            else:
                perturbed.drop(i)
            assert rule(perturbed, j) == before


@given(st.lists(st.sampled_from("ABDC"), min_size=1, max_size=60), st.integers(1, 12))
def test_sum_of_levels_bounded(flags, k):
    # levels evaluated on the final ledger bound the FSR estimate for each arm split
    alpha = 0.05
    led = SelectionLedger()
    n = len(flags)
    for j in range(1, n + 1):
        led.arrive(j)
    for j, f in enumerate(flags, start=1):
        if f in "AB":
            led.select(j, f)
        elif f == "D":
            led.drop(j)
    total = sum(levels_symmetric(led, j, k, alpha)[0] for j in range(1, n + 1))
    assert total <= alpha * max(led.n_selected(), 1) + 1e-12
    total = sum(levels_savaspecial(led, j, k, alpha)[0] for j in range(1, n + 1))
    assert total <= alpha * max(led.n_selected(), 1) + 1e-12
