"""Per-run error/power series and their Monte Carlo aggregation.

For a single run, at each decision time ``t``:

* ``fsp``: share of selected tasks whose chosen arm is wrong
  (denominator ``max(|S_t|, 1)``),
* ``tsp``: share of arrived tasks whose current decision equals the truth.

Across replications, ``FSR_t`` and ``TSR_t`` are means of those proportions
while ``mFSR_t`` is a ratio of means.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .policy import Decision


class DecisionRow(NamedTuple):
    index: int          # 1-based decision-time index
    task: int
    decision: Decision
    p_a: float
    p_b: float
    level_a: float
    level_b: float


_COUNT_FIELDS = ("n_arrived", "n_active", "n_selected", "n_selected_a",
                 "n_selected_b", "n_dropped", "n_false", "n_correct")


@dataclass
class MetricsSeries:
    times: np.ndarray
    fsp: np.ndarray
    tsp: np.ndarray
    fsr_hat: np.ndarray
    n_arrived: np.ndarray
    n_active: np.ndarray
    n_selected: np.ndarray
    n_selected_a: np.ndarray
    n_selected_b: np.ndarray
    n_dropped: np.ndarray
    n_false: np.ndarray
    n_correct: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def empty(cls) -> "MetricsSeries":
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), z.copy(), *(zi.copy() for _ in _COUNT_FIELDS))

    def truncated(self, n: int) -> "MetricsSeries":
        return MetricsSeries(**{f: getattr(self, f)[:n] for f in self.field_names()})

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return ("times", "fsp", "tsp", "fsr_hat") + _COUNT_FIELDS


class MissingTruthError(KeyError):
    pass


def _truth(truths, task: int) -> Decision:
    try:
        value = truths[task]
    except (KeyError, IndexError):
        raise MissingTruthError(f"no ground truth for task {task}") from None
    if value is None:
        raise MissingTruthError(f"no ground truth for task {task}")
    return Decision(value)


def compute_metrics(log: Sequence[DecisionRow], truths: Mapping[int, str], grid,
                    fsr_hat: Optional[Sequence[float]] = None,
                    n_active: Optional[Sequence[int]] = None) -> MetricsSeries:
    """Build the per-decision-time series from a decision log.

    ``log`` may hold every row (one per active task per decision time) or only
    the rows where a task's decision became final; C rows carry no state
    change. ``fsr_hat`` and ``n_active`` are engine-side bookkeeping passed
    through when available.
    """
    if not isinstance(truths, Mapping):
        truths = {i + 1: v for i, v in enumerate(truths)}
    times = list(grid.times)
    n = len(times)
    arrivals = list(grid.arrivals)
    order = sorted(range(len(arrivals)), key=lambda i: arrivals[i])
    for task in range(1, len(arrivals) + 1):
        _truth(truths, task)

    rows_by_index: dict[int, list[DecisionRow]] = {}
    for row in log:
        rows_by_index.setdefault(row.index, []).append(row)

    out = {f: np.zeros(n, dtype=np.int64) for f in _COUNT_FIELDS}
    fsp = np.zeros(n)
    tsp = np.zeros(n)
    sel = sel_a = sel_b = dropped = false = correct = 0
    arrived = 0
    decided: dict[int, Decision] = {}
    for i, t in enumerate(times):
        while arrived < len(order) and arrivals[order[arrived]] <= t:
            arrived += 1
        for row in rows_by_index.get(i + 1, ()):
            d = Decision(row.decision)
            prev = decided.get(row.task)
            if prev is not None and prev.is_final:
                if prev != d:
                    raise ValueError(f"task {row.task} changed a final decision {prev} -> {d}")
                continue
            if not d.is_final:
                continue
            decided[row.task] = d
            theta = _truth(truths, row.task)
            if d.is_selection:
                sel += 1
                if d is Decision.A:
                    sel_a += 1
                else:
                    sel_b += 1
                if d != theta:
                    false += 1
            else:
                dropped += 1
            if d == theta:
                correct += 1
        out["n_arrived"][i] = arrived
        out["n_selected"][i] = sel
        out["n_selected_a"][i] = sel_a
        out["n_selected_b"][i] = sel_b
        out["n_dropped"][i] = dropped
        out["n_false"][i] = false
        out["n_correct"][i] = correct
        fsp[i] = false / max(sel, 1)
        tsp[i] = correct / max(arrived, 1)
    if n_active is not None:
        out["n_active"][:] = np.asarray(n_active, dtype=np.int64)
    return MetricsSeries(
        times=np.asarray(times, dtype=np.float64), fsp=fsp, tsp=tsp,
        fsr_hat=np.asarray(fsr_hat, dtype=np.float64) if fsr_hat is not None else np.full(n, np.nan),
        **out)


@dataclass
class AggregateSummary:
    """Replication means with Monte Carlo standard errors, indexed by decision-time index."""

    index: np.ndarray
    fsr: np.ndarray
    fsr_se: np.ndarray
    mfsr: np.ndarray
    mfsr_se: np.ndarray
    tsr: np.ndarray
    tsr_se: np.ndarray
    n_reps: np.ndarray
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.index)


def _se(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(x.std(ddof=1) / math.sqrt(x.size))


def ratio_of_means(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """``mean(num) / mean(den)`` with a delta-method standard error."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    r = float(num.mean() / den.mean())
    if num.size < 2:
        return r, 0.0
    resid = num - r * den
    return r, float(resid.std(ddof=1) / math.sqrt(num.size) / den.mean())


def aggregate(replications: Sequence[MetricsSeries], max_index: Optional[int] = 800,
              align: str = "common") -> AggregateSummary:
    """Average per-replication series by decision-time index.

    ``align="common"`` truncates to the shortest series; ``"available"`` keeps
    every index and averages over the replications that reach it.
    """
    reps = list(replications)
    if not reps:
        raise ValueError("aggregate needs at least one replication")
    lengths = [len(r) for r in reps]
    if align == "common":
        L = min(lengths)
    elif align == "available":
        L = max(lengths)
    else:
        raise ValueError(f"align must be 'common' or 'available', got {align!r}")
    if max_index is not None:
        L = min(L, max_index)

    fsr, fsr_se, mfsr, mfsr_se, tsr, tsr_se, counts = ([] for _ in range(7))
    for i in range(L):
        have = [r for r in reps if len(r) > i]
        f = np.array([r.fsp[i] for r in have])
        s = np.array([r.tsp[i] for r in have])
        v = np.array([r.n_false[i] for r in have], dtype=np.float64)
        d = np.array([max(r.n_selected[i], 1) for r in have], dtype=np.float64)
        m, m_se = ratio_of_means(v, d)
        fsr.append(f.mean())
        fsr_se.append(_se(f))
        tsr.append(s.mean())
        tsr_se.append(_se(s))
        mfsr.append(m)
        mfsr_se.append(m_se)
        counts.append(len(have))
    return AggregateSummary(
        index=np.arange(1, L + 1), fsr=np.array(fsr), fsr_se=np.array(fsr_se),
        mfsr=np.array(mfsr), mfsr_se=np.array(mfsr_se), tsr=np.array(tsr),
        tsr_se=np.array(tsr_se), n_reps=np.array(counts, dtype=np.int64),
        degenerate=len(reps) == 1)


def final_values(replications: Sequence[MetricsSeries], name: str) -> np.ndarray:
    """The last entry (the final decision time) of ``name`` from each replication."""
    return np.array([getattr(r, name)[-1] for r in replications if len(r)], dtype=np.float64)


def final_summary(replications: Sequence[MetricsSeries]) -> dict[str, float]:
    fsp = final_values(replications, "fsp")
    tsp = final_values(replications, "tsp")
    v = final_values(replications, "n_false")
    d = np.maximum(final_values(replications, "n_selected"), 1.0)
    m, m_se = ratio_of_means(v, d)
    return {"fsr": float(fsp.mean()), "fsr_se": _se(fsp), "tsr": float(tsp.mean()),
            "tsr_se": _se(tsp), "mfsr": m, "mfsr_se": m_se, "n_reps": int(fsp.size)}
