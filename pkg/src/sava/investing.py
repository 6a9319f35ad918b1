"""Alpha-investing: test levels for each task, and the FSR estimate they must respect.

Tasks are indexed 1, 2, ... in arrival order. The ledger records which
tasks have been selected (towards A or B) or dropped. The valid rules
(``levels_symmetric``, ``levels_classical``, ``levels_arm_specific``,
``levels_savaspecial``) read only ledger entries with index below ``j``, and
adding a selection never lowers a level.

Each selection except the very first funds the ``k`` tasks that follow it.
Excluding the first selection is what keeps ::

    fsr_hat = sum_j max(abar_a^j, abar_b^j) / max(|S|, 1) <= alpha.

``levels_method1`` and the greedy-wealth helpers are deliberately invalid
rules used to show FSR inflation; they break monotonicity in time and index
locality respectively.
"""
from __future__ import annotations

import enum
from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import Iterable, Optional


class LedgerError(RuntimeError):
    """Illegal flag transition."""


class UnsupportedRegimeError(ValueError):
    """The rule is only defined for integer, unit-spaced decision times."""


class Flag(str, enum.Enum):
    NOT_YET_ARRIVED = "not_yet_arrived"
    CONTINUING = "continuing"
    SELECTED_A = "selected_A"
    SELECTED_B = "selected_B"
    DROPPED = "dropped"


class SelectionLedger:
    """Per-task flags plus sorted index lists of selections.

    ``stop_times`` keeps the decision time at which each task left the
    continuing state; only ``levels_method1`` reads it.
    """

    def __init__(self):
        self._flags: dict[int, Flag] = {}
        self.selected: list[int] = []
        self.selected_a: list[int] = []
        self.selected_b: list[int] = []
        self.stop_times: dict[int, float] = {}

    def flag(self, j: int) -> Flag:
        return self._flags.get(j, Flag.NOT_YET_ARRIVED)

    def arrive(self, j: int) -> None:
        if self.flag(j) is not Flag.NOT_YET_ARRIVED:
            raise LedgerError(f"task {j} already arrived")
        self._flags[j] = Flag.CONTINUING

    def _finish(self, j: int, flag: Flag, time: Optional[float]) -> None:
        current = self.flag(j)
        if current is not Flag.CONTINUING:
            raise LedgerError(f"task {j} cannot move from {current.value} to {flag.value}")
        self._flags[j] = flag
        if time is not None:
            self.stop_times[j] = time

    def select(self, j: int, arm: str, time: Optional[float] = None) -> None:
        if arm == "A":
            self._finish(j, Flag.SELECTED_A, time)
            insort(self.selected_a, j)
        elif arm == "B":
            self._finish(j, Flag.SELECTED_B, time)
            insort(self.selected_b, j)
        else:
            raise ValueError(f"arm must be 'A' or 'B', got {arm!r}")
        insort(self.selected, j)

    def drop(self, j: int, time: Optional[float] = None) -> None:
        self._finish(j, Flag.DROPPED, time)

    def selections(self, arm: Optional[str] = None) -> list[int]:
        if arm is None:
            return self.selected
        if arm == "A":
            return self.selected_a
        if arm == "B":
            return self.selected_b
        raise ValueError(f"arm must be None, 'A' or 'B', got {arm!r}")

    def n_selected(self, arm: Optional[str] = None) -> int:
        return len(self.selections(arm))

    @property
    def n_dropped(self) -> int:
        return sum(1 for f in self._flags.values() if f is Flag.DROPPED)

    def tasks(self) -> list[int]:
        return sorted(self._flags)

    def copy(self) -> "SelectionLedger":
        new = SelectionLedger()
        new._flags = dict(self._flags)
        new.selected = list(self.selected)
        new.selected_a = list(self.selected_a)
        new.selected_b = list(self.selected_b)
        new.stop_times = dict(self.stop_times)
        return new


def _window_count(sel: list[int], j: int, k: int) -> int:
    # selections with index in [j-k, j-1], minus the first selection below j
    hi = bisect_left(sel, j)
    if hi == 0:
        return 0
    lo = bisect_left(sel, j - k)
    count = hi - lo
    if sel[0] >= j - k:
        count -= 1
    return count


def neighborhood_count(ledger: SelectionLedger, j: int, k: int, arm: Optional[str] = None) -> int:
    """Selections in ``[j-k, j-1]``, not counting the earliest selection before ``j``."""
    if k < 1:
        raise ValueError(f"window k must be >= 1, got {k}")
    return _window_count(ledger.selections(arm), j, k)


def _window_level(sel: list[int], j: int, k: int, alpha: float) -> float:
    return alpha / k * ((1 if j <= k else 0) + _window_count(sel, j, k))


def levels_symmetric(ledger: SelectionLedger, j: int, k: int, alpha: float) -> tuple[float, float]:
    if k < 1:
        raise ValueError(f"window k must be >= 1, got {k}")
    a = _window_level(ledger.selected, j, k, alpha)
    return a, a


def levels_classical(ledger: SelectionLedger, j: int, k: int, alpha: float) -> float:
    if k < 1:
        raise ValueError(f"window k must be >= 1, got {k}")
    return _window_level(ledger.selected_a, j, k, alpha)


def levels_arm_specific(ledger: SelectionLedger, j: int, k_a: int, k_b: int,
                        alpha_a: float, alpha_b: float) -> tuple[float, float]:
    if k_a < 1 or k_b < 1:
        raise ValueError(f"windows must be >= 1, got {k_a}, {k_b}")
    return (_window_level(ledger.selected_a, j, k_a, alpha_a),
            _window_level(ledger.selected_b, j, k_b, alpha_b))


@dataclass(slots=True)
class LevelRecord:
    """Current levels of one task and their running maxima over decision times."""

    a_a: float = 0.0
    a_b: float = 0.0
    max_a: float = 0.0
    max_b: float = 0.0

    def set(self, a_a: float, a_b: float) -> None:
        self.a_a = a_a
        self.a_b = a_b
        if a_a > self.max_a:
            self.max_a = a_a
        if a_b > self.max_b:
            self.max_b = a_b

    @property
    def wealth(self) -> float:
        return self.max_a if self.max_a >= self.max_b else self.max_b


def fsr_hat(records: Iterable[LevelRecord], ledger: SelectionLedger) -> float:
    total = sum(r.wealth for r in records)
    return total / max(ledger.n_selected(), 1)


def fsr_hat_arm(records: Iterable[LevelRecord], ledger: SelectionLedger, arm: str) -> float:
    if arm == "A":
        total = sum(r.max_a for r in records)
    elif arm == "B":
        total = sum(r.max_b for r in records)
    else:
        raise ValueError(f"arm must be 'A' or 'B', got {arm!r}")
    return total / max(ledger.n_selected(arm), 1)


def g_k(i: int, k: int) -> float:
    """Geometric slot weights ``2^-i`` for ``i < k`` with the tail ``2^-(k-1)`` at ``i = k``.

    Sums to one over ``i = 1..k``.
    """
    if i < 1 or i > k:
        return 0.0
    if i < k:
        return 2.0 ** -i
    return 2.0 ** -(k - 1)


def levels_savaspecial(ledger: SelectionLedger, j: int, k: int, alpha: float) -> tuple[float, float]:
    """Static-slot geometric variant: slot ``j - I_n`` of each funding selection."""
    sel = ledger.selected
    hi = bisect_left(sel, j)
    level = alpha * g_k(j, k) if j <= k else 0.0
    lo = max(bisect_left(sel, j - k), 1)
    for idx in sel[lo:hi]:
        level += alpha * g_k(j - idx, k)
    return level, level


def _as_int_time(t: float, what: str) -> int:
    if float(t) != int(t):
        raise UnsupportedRegimeError(f"{what} = {t} is not an integer decision time")
    return int(t)


def levels_method1(ledger: SelectionLedger, j: int, k: int, alpha: float,
                   t_now: float, first_eval_time: float) -> tuple[float, float]:
    """Time-rotating slot allocation (adversarial: levels are not monotone in time).

    Slots rotate with ``(t_now - t) mod k``, where ``t`` is the task's first
    evaluation time for the initial budget, and the stop time of each funding
    selection otherwise.
    """
    now = _as_int_time(t_now, "t_now")
    level = 0.0
    if j <= k:
        first = _as_int_time(first_eval_time, "first_eval_time")
        level += alpha * g_k((now - first) % k + 1, k)
    sel = ledger.selected
    hi = bisect_left(sel, j)
    lo = max(bisect_left(sel, j - k), 1)
    for idx in sel[lo:hi]:
        stop = _as_int_time(ledger.stop_times[idx], f"stop time of task {idx}")
        level += alpha * g_k((now - stop) % k + 1, k)
    return level, level


@dataclass(slots=True)
class WealthState:
    w: float

    def __post_init__(self):
        if self.w < 0:
            raise ValueError(f"wealth must be nonnegative, got {self.w}")


def wealth_greedy_step(w: WealthState, prior_levels_were_zero: bool,
                       prev_min_p: float) -> tuple[WealthState, float]:
    """Spend ``prev_min_p`` on a task whose previous levels were zero, if affordable."""
    if prior_levels_were_zero and w.w >= prev_min_p:
        return WealthState(max(w.w - prev_min_p, 0.0)), prev_min_p
    return w, 0.0


def wealth_credit(w: WealthState, n_selected_prev: int, n_selected_now: int,
                  alpha: float) -> WealthState:
    """End-of-step credit ``alpha * (max(1, |S_now|) - max(1, |S_prev|))``."""
    return WealthState(w.w + alpha * (max(1, n_selected_now) - max(1, n_selected_prev)))
