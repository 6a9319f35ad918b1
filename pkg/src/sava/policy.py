"""Decision rule mapping two directional p-values to an action.

The unit square of ``(p_a, p_b)`` is cut into five regions by the two test
levels. Both significant: the smaller p-value wins, ties going to A. Exactly
one significant: that arm. Neither: keep sampling (C) until the task's
tolerance runs out, then drop it (D).
"""
from __future__ import annotations

import enum
import math


class Decision(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def is_selection(self) -> bool:
        return self is Decision.A or self is Decision.B

    @property
    def is_final(self) -> bool:
        return self is not Decision.C

    def __str__(self) -> str:
        return self.value


class Region(str, enum.Enum):
    D1A = "D1A"
    D1B = "D1B"
    D2A = "D2A"
    D2B = "D2B"
    D3 = "D3"


def classify_region(p_a: float, p_b: float, a_a: float, a_b: float) -> Region:
    sig_a = p_a <= a_a
    sig_b = p_b <= a_b
    if sig_a and sig_b:
        return Region.D1A if p_b >= p_a else Region.D1B
    if sig_a:
        return Region.D2A
    if sig_b:
        return Region.D2B
    return Region.D3


_REGION_TO_DECISION = {
    Region.D1A: Decision.A,
    Region.D2A: Decision.A,
    Region.D1B: Decision.B,
    Region.D2B: Decision.B,
}


def decide(p_a: float, p_b: float, a_a: float, a_b: float,
           elapsed: float, b: float = math.inf) -> Decision:
    """Action for one task; ``elapsed >= b`` turns an abstention into a drop."""
    region = classify_region(p_a, p_b, a_a, a_b)
    if region is Region.D3:
        return Decision.D if elapsed >= b else Decision.C
    return _REGION_TO_DECISION[region]


def decide_classical(p_a: float, a_a: float, elapsed: float, b: float = math.inf) -> Decision:
    """One-directional variant: select A or abstain, never B."""
    if p_a <= a_a:
        return Decision.A
    return Decision.D if elapsed >= b else Decision.C
