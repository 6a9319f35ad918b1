"""E-processes and the always-valid directional p-values built from them.

Every task carries an :class:`EvidenceState` holding two log e-processes, one
accumulating evidence *for* arm A (it is an e-process when arm B is the true
state) and one for arm B. The directional p-values are the reciprocals of the
running maxima, so they can only decrease as data arrive::

    p_a = min(1, 1 / max_{s <= t} E_s^A)

All arithmetic is done in log space. Two e-process families are provided:

* :class:`HoeffdingBounded`: observations bounded in ``[-K, K]``, with a
  predictable-in-count betting fraction ``lambda_schedule(r, alpha)``.
* :class:`GaussianLR`: unit-variance Gaussian data with known ``|mu|``,
  as the likelihood ratio of ``N(|mu|, 1)`` against ``N(-|mu|, 1)``.

:class:`DirectPValues` lets a caller feed raw directional p-values (scripted
tests, static-p-value worlds); the running-min wrapper still applies.

Fixed-sample p-values for the online-FDR comparators live here too:
:func:`fixed_p_wilcoxon` and :func:`fixed_p_ztest`.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from . import kernels

# smallest positive double; keeps p > 0 after exp() underflow so that a zero
# test level can never be met
_TINY = 5e-324

EXACT_WILCOXON_MAX_N = 25


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class OutOfSupportError(ValueError):
    """An observation falls outside the declared support ``[-K, K]``."""


@dataclass(frozen=True)
class HoeffdingBounded:
    K: float
    alpha: float

    def __post_init__(self):
        if not self.K > 0:
            raise DomainError(f"K must be positive, got {self.K}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class GaussianLR:
    mu_abs: float

    def __post_init__(self):
        if not self.mu_abs > 0:
            raise DomainError(f"mu_abs must be positive, got {self.mu_abs}")


@dataclass(frozen=True)
class DirectPValues:
    """Observations are raw ``(p_a, p_b)`` pairs rather than data."""


EvidenceKind = Union[HoeffdingBounded, GaussianLR, DirectPValues]


def _pvalue(max_log_e: float) -> float:
    if max_log_e <= 0.0:
        return 1.0
    return math.exp(-max_log_e) or _TINY


@dataclass(slots=True)
class EvidenceState:
    """Per-task pair of log e-processes and their running-min p-values.

    ``max_log_e_*`` starts at 0 (the empty product); this does not change the
    p-values because they are capped at 1 anyway.
    """

    log_e_a: float = 0.0
    log_e_b: float = 0.0
    max_log_e_a: float = 0.0
    max_log_e_b: float = 0.0
    r: int = 0
    p_a: float = 1.0
    p_b: float = 1.0

    def _refresh(self) -> None:
        self.p_a = _pvalue(self.max_log_e_a)
        self.p_b = _pvalue(self.max_log_e_b)

    def absorb(self, xs, kind: EvidenceKind) -> "EvidenceState":
        """Absorb a batch of observations in place and return ``self``."""
        if isinstance(kind, HoeffdingBounded):
            xs = np.asarray(xs, dtype=np.float64)
            if xs.size == 0:
                return self
            if np.abs(xs).max() > kind.K:
                bad = xs[np.abs(xs) > kind.K][0]
                raise OutOfSupportError(f"observation {bad} outside [-{kind.K}, {kind.K}]")
            (self.log_e_a, self.log_e_b, self.max_log_e_a, self.max_log_e_b,
             self.r) = kernels.absorb_hoeffding(
                self.log_e_a, self.log_e_b, self.max_log_e_a, self.max_log_e_b,
                self.r, xs, kind.K, kind.alpha)
        elif isinstance(kind, GaussianLR):
            xs = np.asarray(xs, dtype=np.float64)
            if xs.size == 0:
                return self
            (self.log_e_a, self.log_e_b, self.max_log_e_a,
             self.max_log_e_b) = kernels.absorb_gaussian(
                self.log_e_a, self.log_e_b, self.max_log_e_a, self.max_log_e_b,
                xs, kind.mu_abs)
            self.r += int(xs.size)
        elif isinstance(kind, DirectPValues):
            for pair in xs:
                _absorb_direct(self, pair)
            return self
        else:
            raise TypeError(f"unknown evidence kind {kind!r}")
        self._refresh()
        return self


def lambda_schedule(r: int, alpha: float) -> float:
    """Betting fraction ``min(sqrt(8 log(2/alpha) / (r log(r+1))), 1)``.

    Natural logarithms throughout.
    """
    if r < 1 or int(r) != r:
        raise DomainError(f"r must be a positive integer, got {r}")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return min(math.sqrt(8.0 * math.log(2.0 / alpha) / (r * math.log(r + 1.0))), 1.0)


def update_hoeffding(state: EvidenceState, x: float, kind: HoeffdingBounded) -> EvidenceState:
    """One bounded observation; returns a new state and leaves ``state`` alone."""
    if abs(x) > kind.K:
        raise OutOfSupportError(f"observation {x} outside [-{kind.K}, {kind.K}]")
    r = state.r + 1
    lam = lambda_schedule(r, kind.alpha)
    step = lam * x / (2.0 * kind.K)
    drift = lam * lam / 8.0
    log_a = state.log_e_a + step - drift
    log_b = state.log_e_b - step - drift
    new = dataclasses.replace(
        state, r=r, log_e_a=log_a, log_e_b=log_b,
        max_log_e_a=max(state.max_log_e_a, log_a),
        max_log_e_b=max(state.max_log_e_b, log_b))
    new._refresh()
    return new


def update_gaussian_lr(state: EvidenceState, x: float, kind: GaussianLR) -> EvidenceState:
    """One unit-variance Gaussian observation; the log likelihood ratio is ``2|mu|x``."""
    step = 2.0 * kind.mu_abs * x
    log_a = state.log_e_a + step
    log_b = state.log_e_b - step
    new = dataclasses.replace(
        state, r=state.r + 1, log_e_a=log_a, log_e_b=log_b,
        max_log_e_a=max(state.max_log_e_a, log_a),
        max_log_e_b=max(state.max_log_e_b, log_b))
    new._refresh()
    return new


def _neg_log(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p-value {p} outside [0, 1]")
    return math.inf if p == 0.0 else -math.log(p)


def _absorb_direct(state: EvidenceState, pair) -> None:
    # keep the p-values themselves rather than exp(-log p), which can drift by an ulp
    rho_a, rho_b = pair
    state.log_e_a = _neg_log(rho_a)
    state.log_e_b = _neg_log(rho_b)
    state.max_log_e_a = max(state.max_log_e_a, state.log_e_a)
    state.max_log_e_b = max(state.max_log_e_b, state.log_e_b)
    state.p_a = min(state.p_a, rho_a or _TINY)
    state.p_b = min(state.p_b, rho_b or _TINY)
    state.r += 1


def update_direct(state: EvidenceState, pair) -> EvidenceState:
    """Feed a raw p-value pair; the stored values are running minima."""
    new = dataclasses.replace(state)
    _absorb_direct(new, pair)
    return new


def current_pvalues(state: EvidenceState) -> tuple[float, float]:
    return state.p_a, state.p_b


class SignedRankResult(NamedTuple):
    p_a: float
    p_b: float
    degenerate: bool = False


@lru_cache(maxsize=None)
def _signed_rank_tails(n: int) -> tuple[np.ndarray, np.ndarray]:
    counts = kernels.signed_rank_counts(n)
    total = 2.0 ** n
    # upper[t] = P(T+ >= t), lower[t] = P(T+ <= t)
    upper = np.cumsum(counts[::-1])[::-1] / total
    lower = np.cumsum(counts) / total
    return upper, lower


def fixed_p_wilcoxon(samples: Sequence[float]) -> SignedRankResult:
    """One-sided Wilcoxon signed-rank p-values ``(p_a, p_b)``.

    ``p_a`` tests ``mu <= 0`` against ``mu > 0``; ``p_b`` the reverse. Exact
    zeros are dropped. The exact null distribution is used for up to 25
    untied magnitudes, otherwise the normal approximation with continuity and
    tie corrections.
    """
    x = np.asarray(samples, dtype=np.float64)
    x = x[x != 0.0]
    n = x.size
    if n == 0:
        return SignedRankResult(1.0, 1.0, True)
    mag = np.abs(x)
    ranks = rankdata(mag)
    t_plus = float(ranks[x > 0].sum())
    _, tie_sizes = np.unique(mag, return_counts=True)
    tied = tie_sizes.size < n
    if n <= EXACT_WILCOXON_MAX_N and not tied:
        upper, lower = _signed_rank_tails(n)
        t = int(round(t_plus))
        return SignedRankResult(float(upper[t]), float(lower[t]))
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48.0
    sd = math.sqrt(var)
    p_a = float(ndtr(-(t_plus - mean - 0.5) / sd))
    p_b = float(ndtr((t_plus - mean + 0.5) / sd))
    return SignedRankResult(min(p_a, 1.0), min(p_b, 1.0))


def fixed_p_ztest(samples: Sequence[float], sigma: float = 1.0) -> tuple[float, float]:
    """One-sided z-test p-values ``(1 - Phi(z), Phi(z))`` with known ``sigma``."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise DomainError("z-test needs at least one sample")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    z = float(x.mean()) * math.sqrt(x.size) / sigma
    return float(ndtr(-z)), float(ndtr(z))
