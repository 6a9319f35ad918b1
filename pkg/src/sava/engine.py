"""The doubly sequential selection engine.

At each decision time the engine

1. admits tasks that arrived since the previous decision time,
2. feeds new observations to every active (still undecided) task,
3. walks the active tasks in ascending index, computing each task's test
   levels from the ledger *as it stands at that point of the walk* and
   applying the decision rule,
4. freezes tasks that were selected or dropped.

Because step 3 runs in index order, a selection made for task ``i`` at this
decision time already funds tasks ``i+1, ..., i+k`` at the same time.

The mode picks the level rule. The valid modes (``Symmetric``, ``Classical``,
``ArmSpecific``, ``SavaSpecial``) are checked after every step for the
FSR-estimate bound; the adversarial ones are only recorded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence, Union

import numpy as np

from .evidence import EvidenceKind, EvidenceState
from .investing import (
    LevelRecord,
    SelectionLedger,
    UnsupportedRegimeError,
    WealthState,
    levels_arm_specific,
    levels_classical,
    levels_method1,
    levels_savaspecial,
    levels_symmetric,
    wealth_credit,
    wealth_greedy_step,
)
from .metrics import DecisionRow, MetricsSeries, compute_metrics
from .policy import Decision, decide, decide_classical

FSR_HAT_TOL = 1e-12


class ProtocolError(RuntimeError):
    """The caller violated the step protocol (order of times, frozen tasks)."""


class InvariantViolation(AssertionError):
    """The FSR estimate exceeded its budget under a rule that must respect it."""


def _check_alpha(alpha: float, name: str = "alpha") -> None:
    if not 0 < alpha < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {alpha}")


def _check_k(k: int, name: str = "k") -> None:
    if int(k) != k or k < 1:
        raise ValueError(f"{name} must be a positive integer, got {k}")


@dataclass(frozen=True)
class Symmetric:
    alpha: float
    k: int = 25

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_k(self.k)


@dataclass(frozen=True)
class Classical:
    alpha: float
    k: int = 25

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_k(self.k)


@dataclass(frozen=True)
class ArmSpecific:
    alpha_a: float
    alpha_b: float
    k_a: int = 25
    k_b: int = 25

    def __post_init__(self):
        _check_alpha(self.alpha_a, "alpha_a")
        _check_alpha(self.alpha_b, "alpha_b")
        _check_k(self.k_a, "k_a")
        _check_k(self.k_b, "k_b")


@dataclass(frozen=True)
class SavaSpecial:
    alpha: float
    k: int = 10

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_k(self.k)


@dataclass(frozen=True)
class AdversarialMethod1:
    alpha: float
    k: int = 10

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_k(self.k)


@dataclass(frozen=True)
class AdversarialMethod2:
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)


EngineMode = Union[Symmetric, Classical, ArmSpecific, SavaSpecial,
                   AdversarialMethod1, AdversarialMethod2]

VALID_MODES = (Symmetric, Classical, ArmSpecific, SavaSpecial)


@dataclass(frozen=True)
class DecisionGrid:
    """Decision times and task arrival times (task ``j`` is ``arrivals[j-1]``)."""

    times: tuple
    arrivals: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        arrivals = tuple(float(t) for t in self.arrivals)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "arrivals", arrivals)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("decision times must be strictly increasing")
        if any(b < a for a, b in zip(arrivals, arrivals[1:])):
            raise ValueError("arrivals must be listed in arrival order")
        if arrivals and not times:
            raise ValueError("tasks arrive but there are no decision times")
        if arrivals and arrivals[-1] > times[-1]:
            raise ValueError("every arrival must precede or equal the final decision time")

    @property
    def n_tasks(self) -> int:
        return len(self.arrivals)

    @property
    def tied_arrivals(self) -> bool:
        return any(b == a for a, b in zip(self.arrivals, self.arrivals[1:]))

    def arrival(self, j: int) -> float:
        return self.arrivals[j - 1]


@dataclass
class TaskState:
    id: int
    arrival: float
    tolerance: float = math.inf
    decision: Decision = Decision.C
    evidence: EvidenceState = field(default_factory=EvidenceState)
    levels: LevelRecord = field(default_factory=LevelRecord)
    ground_truth: Optional[str] = None
    first_eval_time: Optional[float] = None
    stop_time: Optional[float] = None


class Engine:
    """Incremental engine for one run. Call :meth:`step` once per grid time."""

    def __init__(self, mode: EngineMode, grid: DecisionGrid, kind: EvidenceKind,
                 tolerances: Union[float, Sequence[float], Mapping[int, float]] = math.inf,
                 check_invariants: bool = True, record: str = "full",
                 order: Optional[Callable[[list], list]] = None):
        if record not in ("full", "final", "none"):
            raise ValueError(f"record must be 'full', 'final' or 'none', got {record!r}")
        self.mode = mode
        self.grid = grid
        self.kind = kind
        self.record = record
        self.check_invariants = check_invariants and isinstance(mode, VALID_MODES)
        # test hook: permute the within-step processing order
        self._order = order
        if isinstance(mode, AdversarialMethod1):
            ts = grid.times
            if any(t != int(t) for t in ts) or any(b - a != 1 for a, b in zip(ts, ts[1:])):
                raise UnsupportedRegimeError(
                    "Method 1 levels need consecutive integer decision times")
        self._tolerances = tolerances
        self.i = 0
        self.tasks: dict[int, TaskState] = {}
        self.active: list[int] = []
        self.ledger = SelectionLedger()
        self.log: list[DecisionRow] = []
        self.fsr_hat_values: list[float] = []
        self.fsr_hat_a_values: list[float] = []
        self.fsr_hat_b_values: list[float] = []
        self.n_active_values: list[int] = []
        self._n_arrived = 0
        self._sum_wealth = 0.0
        self._sum_a = 0.0
        self._sum_b = 0.0
        if isinstance(mode, AdversarialMethod2):
            self.wealth = WealthState(mode.alpha)
            self._prev_active: set[int] = set()

    @property
    def alpha(self) -> float:
        return getattr(self.mode, "alpha", None) or max(self.mode.alpha_a, self.mode.alpha_b)

    def _tolerance(self, j: int) -> float:
        tol = self._tolerances
        if isinstance(tol, Mapping):
            return float(tol.get(j, math.inf))
        if isinstance(tol, (list, tuple, np.ndarray)):
            return float(tol[j - 1])
        return float(tol)

    @property
    def done(self) -> bool:
        return self.i >= len(self.grid.times)

    @property
    def next_time(self) -> float:
        return self.grid.times[self.i]

    def _prev_time(self) -> float:
        return self.grid.times[self.i - 1] if self.i > 0 else -math.inf

    def upcoming_active(self) -> list[int]:
        """Tasks that will be active at the next grid time, in ascending index."""
        t = self.next_time
        new = []
        j = self._n_arrived + 1
        while j <= self.grid.n_tasks and self.grid.arrival(j) <= t:
            new.append(j)
            j += 1
        return self.active + new

    def _admit(self, t: float) -> list[int]:
        new = []
        while self._n_arrived < self.grid.n_tasks and self.grid.arrival(self._n_arrived + 1) <= t:
            self._n_arrived += 1
            j = self._n_arrived
            self.tasks[j] = TaskState(id=j, arrival=self.grid.arrival(j),
                                      tolerance=self._tolerance(j), first_eval_time=t)
            self.ledger.arrive(j)
            new.append(j)
        return new

    def _levels(self, task: TaskState, t: float, prev_p) -> tuple[float, float]:
        mode = self.mode
        j = task.id
        if isinstance(mode, Symmetric):
            return levels_symmetric(self.ledger, j, mode.k, mode.alpha)
        if isinstance(mode, Classical):
            return levels_classical(self.ledger, j, mode.k, mode.alpha), 0.0
        if isinstance(mode, ArmSpecific):
            return levels_arm_specific(self.ledger, j, mode.k_a, mode.k_b,
                                       mode.alpha_a, mode.alpha_b)
        if isinstance(mode, SavaSpecial):
            return levels_savaspecial(self.ledger, j, mode.k, mode.alpha)
        if isinstance(mode, AdversarialMethod1):
            return levels_method1(self.ledger, j, mode.k, mode.alpha, t, task.first_eval_time)
        if isinstance(mode, AdversarialMethod2):
            if j not in self._prev_active:
                return 0.0, 0.0
            zero_before = task.levels.a_a == 0.0 and task.levels.a_b == 0.0
            self.wealth, level = wealth_greedy_step(self.wealth, zero_before, min(prev_p[j]))
            return level, level
        raise TypeError(f"unknown engine mode {mode!r}")

    def _set_levels(self, task: TaskState, a_a: float, a_b: float) -> None:
        rec = task.levels
        old_w, old_a, old_b = rec.wealth, rec.max_a, rec.max_b
        rec.set(a_a, a_b)
        self._sum_wealth += rec.wealth - old_w
        self._sum_a += rec.max_a - old_a
        self._sum_b += rec.max_b - old_b

    def fsr_hat(self) -> float:
        return self._sum_wealth / max(self.ledger.n_selected(), 1)

    def fsr_hat_arm(self, arm: str) -> float:
        total = self._sum_a if arm == "A" else self._sum_b
        return total / max(self.ledger.n_selected(arm), 1)

    def _check(self, t: float) -> None:
        mode = self.mode
        if isinstance(mode, ArmSpecific):
            fa, fb = self.fsr_hat_arm("A"), self.fsr_hat_arm("B")
            if fa > mode.alpha_a + FSR_HAT_TOL or fb > mode.alpha_b + FSR_HAT_TOL:
                raise InvariantViolation(
                    f"arm FSR estimates ({fa}, {fb}) exceed ({mode.alpha_a}, {mode.alpha_b}) at t={t}")
        elif isinstance(mode, Classical):
            fa = self.fsr_hat_arm("A")
            if fa > mode.alpha + FSR_HAT_TOL:
                raise InvariantViolation(f"FSR estimate {fa} exceeds {mode.alpha} at t={t}")
        else:
            f = self.fsr_hat()
            if f > mode.alpha + FSR_HAT_TOL:
                raise InvariantViolation(f"FSR estimate {f} exceeds {mode.alpha} at t={t}")

    def step(self, t: float, new_observations: Mapping[int, Iterable] = None) -> list[tuple[int, Decision]]:
        if self.done:
            raise ProtocolError(f"decision time {t} is past the end of the grid")
        if t != self.next_time:
            raise ProtocolError(f"expected decision time {self.next_time}, got {t}")
        new_observations = new_observations or {}
        continuing = self.active
        continuing_set = set(continuing)
        new = self._admit(t)
        active = continuing + new
        active_set = continuing_set.union(new)
        for j in new_observations:
            if j not in active_set:
                if j in self.tasks:
                    raise ProtocolError(
                        f"observations for task {j}, which is frozen at {self.tasks[j].decision}")
                raise ProtocolError(f"observations for task {j}, which has not arrived by t={t}")

        is_m2 = isinstance(self.mode, AdversarialMethod2)
        prev_p = {j: (self.tasks[j].evidence.p_a, self.tasks[j].evidence.p_b)
                  for j in continuing} if is_m2 else None
        n_sel_before = self.ledger.n_selected()

        kind = self.kind
        for j, xs in new_observations.items():
            self.tasks[j].evidence.absorb(xs, kind)

        classical = isinstance(self.mode, Classical)
        order = self._order(list(active)) if self._order else active
        index = self.i + 1
        out = []
        still = []
        record = self.record
        for j in order:
            task = self.tasks[j]
            a_a, a_b = self._levels(task, t, prev_p)
            self._set_levels(task, a_a, a_b)
            ev = task.evidence
            elapsed = t - task.arrival
            if classical:
                d = decide_classical(ev.p_a, a_a, elapsed, task.tolerance)
            else:
                d = decide(ev.p_a, ev.p_b, a_a, a_b, elapsed, task.tolerance)
            if d is Decision.C:
                still.append(j)
            else:
                task.decision = d
                task.stop_time = t
                if d is Decision.D:
                    self.ledger.drop(j, t)
                else:
                    self.ledger.select(j, d.value, t)
            if record == "full" or (record == "final" and d is not Decision.C):
                self.log.append(DecisionRow(index, j, d, ev.p_a, ev.p_b, a_a, a_b))
            out.append((j, d))

        if is_m2:
            self.wealth = wealth_credit(self.wealth, n_sel_before, self.ledger.n_selected(),
                                        self.mode.alpha)
            self._prev_active = active_set

        self.active = sorted(still)
        self.fsr_hat_values.append(self.fsr_hat())
        self.fsr_hat_a_values.append(self.fsr_hat_arm("A"))
        self.fsr_hat_b_values.append(self.fsr_hat_arm("B"))
        self.n_active_values.append(len(active))
        if self.check_invariants:
            self._check(t)
        self.i += 1
        return out


class StreamSource(Protocol):
    def samples(self, task: int, t_lo: float, t_hi: float):
        """Observations of ``task`` with time in ``(t_lo, t_hi]``."""


@dataclass
class RunResult:
    metrics: Optional[MetricsSeries]
    ledger: SelectionLedger
    log: list
    engine: Engine

    def level_trace(self, task: int) -> list[tuple[int, float, float]]:
        """``(decision index, level_a, level_b)`` for each time the task was evaluated."""
        return [(r.index, r.level_a, r.level_b) for r in self.log if r.task == task]


def run(mode: EngineMode, grid: DecisionGrid, source: StreamSource, kind: EvidenceKind,
        truths: Optional[Mapping[int, str]] = None, tolerances=math.inf,
        record: str = "full", check_invariants: bool = True) -> RunResult:
    """Drive an :class:`Engine` over the whole grid, pulling data from ``source``."""
    engine = Engine(mode, grid, kind, tolerances=tolerances,
                    check_invariants=check_invariants, record=record)
    times = grid.times
    for i, t in enumerate(times):
        t_lo = times[i - 1] if i > 0 else -math.inf
        obs = {j: source.samples(j, t_lo, t) for j in engine.upcoming_active()}
        engine.step(t, obs)
    metrics = None
    if truths is not None:
        metrics = compute_metrics(engine.log if record != "none" else [], truths, grid,
                                  fsr_hat=engine.fsr_hat_values,
                                  n_active=engine.n_active_values)
    return RunResult(metrics, engine.ledger, engine.log, engine)
