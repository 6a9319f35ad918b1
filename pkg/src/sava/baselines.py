"""Online FDR comparators: LORD++, SAFFRON and ADDIS, one spender per direction.

These rules must decide each task once, on arrival. Each task ``j`` is
evaluated at the first grid time at or after its arrival, on the samples in
that grid interval. Both directional nulls go through their own spender and
the two rejection flags are merged by :func:`combine_directional`.

The SAFFRON and ADDIS level formulas are the textbook-style expressions with
two quirks kept as-is:

* SAFFRON's candidate count after the ``i``-th rejection counts later
  rejections (``p_k <= alpha_k``) rather than candidates (``p_k <= lambda``),
  and only the first two terms carry the ``(1 - lambda)`` factor.
* ADDIS's gamma index can reach 0 or below; such offsets contribute nothing,
  so its first level is 0.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .evidence import fixed_p_wilcoxon, fixed_p_ztest
from .metrics import DecisionRow, compute_metrics
from .policy import Decision

GAMMA_EXPONENT = 1.6
_GAMMA_SUM_TERMS = 10 ** 6


def gamma_lordpp(j: int) -> float:
    """``0.0722 log(j v 2) / (j exp(sqrt(log j)))``; zero for ``j < 1``."""
    if j < 1:
        return 0.0
    return 0.0722 * math.log(max(j, 2)) / (j * math.exp(math.sqrt(math.log(j))))


@lru_cache(maxsize=None)
def gamma_normalizer(s: float = GAMMA_EXPONENT) -> float:
    """``sum_{j>=1} (j+1)^-s``: direct sum to 10^6 plus a midpoint integral tail."""
    j = np.arange(1, _GAMMA_SUM_TERMS + 1, dtype=np.float64)
    head = float(np.sum((j + 1.0) ** -s))
    # sum_{n > N+1} n^-s ~ integral from N + 1.5 to infinity
    tail = (_GAMMA_SUM_TERMS + 1.5) ** (1.0 - s) / (s - 1.0)
    return head + tail


def gamma_power(j: int) -> float:
    """Normalized ``(j+1)^-1.6``; zero for ``j < 1``."""
    if j < 1:
        return 0.0
    return (j + 1.0) ** -GAMMA_EXPONENT / gamma_normalizer()


class Spender:
    """Shared bookkeeping: the p-values and levels seen so far, and the rejections."""

    name = "spender"

    def __init__(self, alpha: float):
        if not 0 < alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        self.alpha = alpha
        self.pvalues: list[float] = []
        self.levels: list[float] = []
        self.rejections: list[int] = []  # 1-based hypothesis indices

    @property
    def j(self) -> int:
        """Index of the next hypothesis."""
        return len(self.pvalues) + 1

    def level(self) -> float:
        raise NotImplementedError

    def test(self, p: float) -> tuple[bool, float]:
        """Level the next hypothesis, record ``p`` and report whether it is rejected."""
        a = self.level()
        reject = p <= a
        self.pvalues.append(p)
        self.levels.append(a)
        if reject:
            self.rejections.append(self.j - 1)
        return reject, a


class LordPP(Spender):
    name = "lordpp"

    def __init__(self, alpha: float):
        super().__init__(alpha)
        self.w0 = alpha / 10

    def level(self) -> float:
        j = self.j
        tau = self.rejections
        a = self.w0 * gamma_lordpp(j)
        if tau:
            a += (self.alpha - self.w0) * gamma_lordpp(j - tau[0])
            a += self.alpha * sum(gamma_lordpp(j - t) for t in tau[1:])
        return a


class Saffron(Spender):
    name = "saffron"

    def __init__(self, alpha: float, lam: float = 0.5):
        super().__init__(alpha)
        self.lam = lam
        self.w0 = alpha / 2

    def _after(self, tau_i: int, j: int) -> int:
        # rejections among k = tau_i + 1 .. j - 1
        return sum(1 for t in self.rejections if tau_i < t < j)

    def level(self) -> float:
        j = self.j
        lam = self.lam
        if j == 1:
            return min((1 - lam) * gamma_power(1) * self.w0, lam)
        tau = self.rejections
        inner = self.w0 * gamma_power(j - self._after(0, j))
        if tau:
            inner += (self.alpha - self.w0) * gamma_power(j - tau[0] - self._after(tau[0], j))
        total = (1 - lam) * inner
        for t in tau[1:]:
            total += self.alpha * gamma_power(j - t - self._after(t, j))
        return min(lam, total)


class Addis(Spender):
    name = "addis"

    def __init__(self, alpha: float, lam: float = 0.25, tau: float = 0.5):
        super().__init__(alpha)
        self.lam = lam
        self.tau = tau
        self.w0 = alpha / 2

    def _count(self, lo: int, hi: int, thresh: float) -> int:
        # p_k <= thresh over 1-based k in [lo, hi]
        return sum(1 for p in self.pvalues[max(lo, 1) - 1: hi] if p <= thresh)

    def level(self) -> float:
        j = self.j
        s_j = self._count(1, j - 1, self.tau)
        total = self.w0 * gamma_power(s_j - self._count(1, j - 1, self.lam))
        for i, kappa in enumerate(self.rejections, start=1):
            kappa_star = self._count(1, kappa, self.tau)
            c_i = self._count(kappa + 1, j - 1, self.lam)
            weight = self.alpha - self.w0 if i == 1 else self.alpha
            total += weight * gamma_power(s_j - kappa_star - c_i)
        return min(self.lam, (self.tau - self.lam) * total)


RULES: dict[str, Callable[[float], Spender]] = {
    "lordpp": LordPP,
    "saffron": Saffron,
    "addis": Addis,
}


def make_spender(rule: str, alpha: float) -> Spender:
    try:
        return RULES[rule](alpha)
    except KeyError:
        raise ValueError(f"unknown rule {rule!r}; expected one of {sorted(RULES)}") from None


def lordpp_level(j: int, alpha: float, rejections=()) -> float:
    s = LordPP(alpha)
    s.pvalues = [1.0] * (j - 1)
    s.rejections = list(rejections)
    return s.level()


def combine_directional(reject_a: bool, reject_b: bool, p_a: float, p_b: float) -> Decision:
    if reject_a and reject_b:
        return Decision.A if p_a < p_b else Decision.B
    if reject_a:
        return Decision.A
    if reject_b:
        return Decision.B
    return Decision.D


PVALUE_METHODS = {
    "wilcoxon": lambda xs: tuple(fixed_p_wilcoxon(xs)[:2]),
    "ztest": fixed_p_ztest,
}


class BaselineResult:
    def __init__(self, rule, log, metrics, spenders):
        self.rule = rule
        self.log = log
        self.metrics = metrics
        self.spender_a, self.spender_b = spenders

    def level_trace(self, task: int):
        return [(r.index, r.level_a, r.level_b) for r in self.log if r.task == task]


def run_baseline(rule: str, grid, source, alpha: float, pvalue: str = "wilcoxon",
                 truths=None) -> BaselineResult:
    """Evaluate every task once, at the first grid time at or after its arrival."""
    try:
        pfun = PVALUE_METHODS[pvalue]
    except KeyError:
        raise ValueError(f"unknown p-value method {pvalue!r}") from None
    spend_a = make_spender(rule, alpha)
    spend_b = make_spender(rule, alpha)
    log: list[DecisionRow] = []
    times = grid.times
    j = 1
    n = grid.n_tasks
    for i, t in enumerate(times):
        t_lo = times[i - 1] if i > 0 else -math.inf
        while j <= n and grid.arrival(j) <= t:
            xs = source.samples(j, t_lo, t)
            if len(xs) == 0:
                p_a = p_b = 1.0
            else:
                p_a, p_b = pfun(xs)
            rej_a, a_a = spend_a.test(p_a)
            rej_b, a_b = spend_b.test(p_b)
            d = combine_directional(rej_a, rej_b, p_a, p_b)
            log.append(DecisionRow(i + 1, j, d, p_a, p_b, a_a, a_b))
            j += 1
    metrics = compute_metrics(log, truths, grid) if truths is not None else None
    return BaselineResult(rule, log, metrics, (spend_a, spend_b))
