"""Synthetic doubly sequential worlds.

Tasks arrive on the integer clock ``1..T``: task 1 at ``t = 1`` and a new one
at each later ``t`` with probability ``p``. The decision grid has one point
just before every later arrival plus the horizon, so exactly one task joins
per grid interval::

    grid = {a - 1 : a an arrival, a >= 2} U {T}

Each task draws one observation per unit time from its arrival on.

Randomness is split by purpose with ``SeedSequence`` spawn keys (arrivals,
truths, and one substream per task), so a task's data depend only on the root
seed and its index. Extending the horizon or adding tasks leaves earlier
tasks' draws untouched.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .engine import DecisionGrid

FIXTURE_VERSION = 1

_KEY_ARRIVALS = 0
_KEY_TRUTHS = 1
_KEY_TASK = 2


@dataclass(frozen=True)
class TruncGauss:
    """``N(+-mu, 1)`` truncated to ``[-K, K]``."""

    mu: float
    K: float = 2.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.K > 0:
            raise ValueError(f"K must be positive, got {self.K}")


@dataclass(frozen=True)
class Gauss:
    """``N(+-mu, 1)``."""

    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")


Model = Union[TruncGauss, Gauss]


@dataclass(frozen=True)
class WorldConfig:
    T: int
    p: float
    pi_plus: float
    model: Model
    seed: int = 0

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")
        if not 0 < self.p <= 1:
            raise ValueError(f"arrival probability must lie in (0, 1], got {self.p}")
        if not 0 <= self.pi_plus <= 1:
            raise ValueError(f"pi_plus must lie in [0, 1], got {self.pi_plus}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = {"kind": type(self.model).__name__, **asdict(self.model)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WorldConfig":
        m = dict(d["model"])
        kind = m.pop("kind")
        model = {"TruncGauss": TruncGauss, "Gauss": Gauss}[kind](**m)
        return cls(T=d["T"], p=d["p"], pi_plus=d["pi_plus"], model=model, seed=d["seed"])


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def sample_truncnorm(mu, sigma, lo, hi, rng: np.random.Generator, size=None):
    """Draws from ``N(mu, sigma^2)`` restricted to ``[lo, hi]`` by inverting the CDF.

    One uniform per draw, so the number of generator calls never depends on
    the values drawn.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not lo < hi:
        raise ValueError(f"empty truncation range [{lo}, {hi}]")
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    u = rng.random(size)
    # work in the upper tail when it is better conditioned
    if a > 0:
        fa, fb = ndtr(-a), ndtr(-b)
        x = -ndtri(fa - u * (fa - fb))
    else:
        fa, fb = ndtr(a), ndtr(b)
        x = ndtri(fa + u * (fb - fa))
    return np.clip(mu + sigma * x, lo, hi)


def truncnorm_mean(mu: float, sigma: float, lo: float, hi: float) -> float:
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    return mu + sigma * (phi(a) - phi(b)) / (ndtr(b) - ndtr(a))


def arrival_times(T: int, p: float, seed: int) -> np.ndarray:
    draws = _rng(seed, _KEY_ARRIVALS).random(T)
    hits = np.nonzero(draws[1:] < p)[0] + 2
    return np.concatenate(([1], hits)).astype(np.int64)


def grid_times(arrivals, T: int) -> np.ndarray:
    pts = [a - 1 for a in arrivals if a >= 2]
    if not pts or pts[-1] != T:
        pts.append(T)
    return np.asarray(pts, dtype=np.int64)


@dataclass
class World:
    """Arrivals, decision grid, ground truth and per-task data streams.

    ``samples(j, t_lo, t_hi)`` returns task ``j``'s observations taken at
    integer times in ``(t_lo, t_hi]``; each task's full stream is drawn once
    and cached.
    """

    config: WorldConfig
    grid: DecisionGrid
    truths: tuple
    means: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_tasks(self) -> int:
        return self.grid.n_tasks

    def stream(self, j: int) -> np.ndarray:
        s = self._cache.get(j)
        if s is None:
            a = int(self.grid.arrival(j))
            n = self.config.T - a + 1
            rng = _rng(self.config.seed, _KEY_TASK, j)
            mu = self.means[j - 1]
            model = self.config.model
            if isinstance(model, TruncGauss):
                s = sample_truncnorm(mu, 1.0, -model.K, model.K, rng, n)
            else:
                s = mu + rng.standard_normal(n)
            self._cache[j] = s
        return s

    def samples(self, j: int, t_lo: float, t_hi: float) -> np.ndarray:
        a = int(self.grid.arrival(j))
        lo = max(a, math.floor(t_lo) + 1) if t_lo > -math.inf else a
        hi = min(int(math.floor(t_hi)), self.config.T)
        if hi < lo:
            return np.zeros(0)
        return self.stream(j)[lo - a: hi - a + 1]

    def task_seed(self, j: int) -> dict:
        return {"entropy": self.config.seed, "spawn_key": [_KEY_TASK, j]}


def gen_world(config: WorldConfig) -> World:
    arrivals = arrival_times(config.T, config.p, config.seed)
    grid = DecisionGrid(tuple(grid_times(arrivals, config.T)), tuple(arrivals))
    u = _rng(config.seed, _KEY_TRUTHS).random(len(arrivals))
    is_a = u < config.pi_plus
    truths = tuple("A" if x else "B" for x in is_a)
    means = np.where(is_a, config.model.mu, -config.model.mu)
    return World(config, grid, truths, means)


@dataclass
class DirectWorld:
    """A world whose tasks carry fixed directional p-values instead of data.

    ``samples`` yields the task's ``(p_a, p_b)`` pair once per decision time
    at which it is active; the pair never changes.
    """

    name: str
    T: int
    grid: DecisionGrid
    truths: tuple
    means: np.ndarray
    pvalues: np.ndarray  # shape (n_tasks_total, 2)
    seed: int
    alpha: float = 0.1

    @property
    def n_tasks(self) -> int:
        return self.grid.n_tasks

    def samples(self, j: int, t_lo: float, t_hi: float) -> list:
        if self.grid.arrival(j) > t_hi:
            return []
        return [tuple(self.pvalues[j - 1])]


def _static_pvalues(means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # the informative direction sees Y ~ N(mu, 0.25), the other a U(0, 1) draw
    y = means + 0.5 * rng.standard_normal(means.size)
    u = rng.random(means.size)
    pos = means >= 0
    p_a = np.where(pos, ndtr(-y), u)
    p_b = np.where(pos, u, ndtr(y))
    return np.column_stack([p_a, p_b])


def _direct_world(name: str, means: np.ndarray, seed: int, T: int = 100) -> DirectWorld:
    n_arrive = min(T, means.size)
    arrivals = tuple(range(1, n_arrive + 1))
    grid = DecisionGrid(tuple(grid_times(arrivals, T)), arrivals)
    pvals = _static_pvalues(means, _rng(seed, _KEY_TASK))
    truths = tuple("A" if m >= 0 else "B" for m in means[:n_arrive])
    return DirectWorld(name, T, grid, truths, means, pvals, seed)


def gen_counterexample1(seed: int, n_tasks: int = 500, T: int = 100) -> DirectWorld:
    """Means ``+-0.5`` at random; with one arrival per unit time only the first ``T`` tasks arrive."""
    means = _rng(seed, _KEY_TRUTHS).integers(0, 2, n_tasks) - 0.5
    return _direct_world("counterexample1", means.astype(np.float64), seed, T)


COUNTEREXAMPLE2_MEANS = np.array(
    [2.5] * 20 + [0.01] * 30 + [2.5] * 10 + [0.001] * 10 + [2.5] * 10 + [0.001] * 20)


def gen_counterexample2(seed: int, T: int = 100) -> DirectWorld:
    """Fixed block pattern of means, all positive."""
    return _direct_world("counterexample2", COUNTEREXAMPLE2_MEANS.copy(), seed, T)


def save_world(world: World, path) -> None:
    """Write a regression fixture: config echo, arrivals, truths, per-task seeds."""
    doc = {
        "format": "sava-world",
        "version": FIXTURE_VERSION,
        "config": world.config.to_dict(),
        "grid": list(world.grid.times),
        "arrivals": list(world.grid.arrivals),
        "truths": list(world.truths),
        "task_seeds": [world.task_seed(j) for j in range(1, world.n_tasks + 1)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_world(path) -> World:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "sava-world":
        raise ValueError(f"{path} is not a world fixture")
    if doc.get("version") != FIXTURE_VERSION:
        raise ValueError(f"unsupported fixture version {doc.get('version')}")
    world = gen_world(WorldConfig.from_dict(doc["config"]))
    if (list(world.grid.arrivals) != [float(a) for a in doc["arrivals"]]
            or list(world.truths) != doc["truths"]):
        raise ValueError("fixture does not match the world regenerated from its config")
    return world
