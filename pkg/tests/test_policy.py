import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sava.policy import Decision, Region, classify_region, decide, decide_classical

unit = st.floats(0, 1)


class TestDecide:
    def test_nothing_significant_continues(self):
        assert decide(1.0, 1.0, 0.002, 0.002, elapsed=0) is Decision.C

    def test_nothing_significant_after_tolerance_drops(self):
        assert decide(1.0, 1.0, 0.002, 0.002, elapsed=5, b=5) is Decision.D

    def test_both_significant_smaller_wins(self):
        assert decide(0.001, 0.0005, 0.01, 0.01, 0) is Decision.B
        assert decide(0.0005, 0.001, 0.01, 0.01, 0) is Decision.A

    def test_tie_goes_to_a(self):
        assert classify_region(0.001, 0.001, 0.01, 0.01) is Region.D1A

    def test_single_significant(self):
        assert decide(0.001, 0.5, 0.01, 0.01, 0) is Decision.A
        assert decide(0.5, 0.001, 0.01, 0.01, 0) is Decision.B

    def test_boundary_is_significant(self):
        assert classify_region(0.01, 0.5, 0.01, 0.01) is Region.D2A

    def test_zero_level_never_met_by_positive_p(self):
        assert decide(5e-324, 5e-324, 0.0, 0.0, 0) is Decision.C

    def test_infinite_tolerance_never_drops(self):
        assert decide(1.0, 1.0, 0.0, 0.0, elapsed=1e12) is Decision.C

    def test_classical(self):
        assert decide_classical(0.001, 0.01, 0) is Decision.A
        assert decide_classical(0.5, 0.01, 0) is Decision.C
        assert decide_classical(0.5, 0.01, 3, b=2) is Decision.D

    def test_decision_flags(self):
        assert Decision.A.is_selection and Decision.B.is_selection
        assert not Decision.C.is_final and Decision.D.is_final
        assert str(Decision.D) == "D"


def _expected(p_a, p_b, a_a, a_b):
    sa, sb = p_a <= a_a, p_b <= a_b
    return {
        Region.D1A: sa and sb and p_b >= p_a,
        Region.D1B: sa and sb and p_b < p_a,
        Region.D2A: sa and not sb,
        Region.D2B: sb and not sa,
        Region.D3: not sa and not sb,
    }


def test_region_exhaustive_grid():
    # 50^4 boundary-inclusive grid: every point lies in exactly one region
    g = np.linspace(0.0, 1.0, 50)
    pa, pb, aa, ab = (x.ravel() for x in np.meshgrid(g, g, g, g, indexing="ij"))
    sa, sb = pa <= aa, pb <= ab
    masks = {
        Region.D1A: sa & sb & (pb >= pa),
        Region.D1B: sa & sb & (pb < pa),
        Region.D2A: sa & ~sb,
        Region.D2B: sb & ~sa,
        Region.D3: ~sa & ~sb,
    }
    total = sum(m.astype(int) for m in masks.values())
    assert np.all(total == 1)
    # the scalar classifier agrees with the vectorized partition everywhere
    codes = {r: i for i, r in enumerate(Region)}
    want = np.zeros(pa.size, dtype=int)
    for r, m in masks.items():
        want[m] = codes[r]
    vals = g.tolist()
    idx = 0
    for p_a, p_b, a_a, a_b in itertools.product(vals, vals, vals, vals):
        assert codes[classify_region(p_a, p_b, a_a, a_b)] == want[idx]
        idx += 1
    assert idx == 50 ** 4


@given(unit, unit, unit, unit)
def test_region_matches_definition(p_a, p_b, a_a, a_b):
    exp = _expected(p_a, p_b, a_a, a_b)
    assert [r for r, hit in exp.items() if hit] == [classify_region(p_a, p_b, a_a, a_b)]


@given(unit, unit, unit, unit, st.floats(0, 10), st.floats(0, 10))
def test_selection_independent_of_time(p_a, p_b, a_a, a_b, e1, e2):
    d1 = decide(p_a, p_b, a_a, a_b, e1, b=5)
    d2 = decide(p_a, p_b, a_a, a_b, e2, b=5)
    if d1.is_selection or d2.is_selection:
        assert d1 is d2
