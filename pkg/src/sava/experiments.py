"""Replication harness: run several methods on shared worlds and collect metric series.

Every replication ``r`` gets its own world seed derived from the root seed
and ``r`` alone, so running ``N`` replications reproduces the first ``N`` of
a longer run, and the result does not depend on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import baselines
from .engine import (
    AdversarialMethod1,
    AdversarialMethod2,
    ArmSpecific,
    Classical,
    SavaSpecial,
    Symmetric,
    run,
)
from .evidence import DirectPValues, GaussianLR, HoeffdingBounded
from .ingest import Replay
from .metrics import MetricsSeries
from .simgen import (
    DirectWorld,
    Gauss,
    TruncGauss,
    World,
    WorldConfig,
    gen_counterexample1,
    gen_counterexample2,
    gen_world,
)

SAVA_METHODS = ("sava", "sava-classical", "sava-armspec", "method1", "method2", "savaspecial")
BASELINE_METHODS = ("lordpp", "saffron", "addis")
METHODS = SAVA_METHODS + BASELINE_METHODS


@dataclass(frozen=True)
class MethodParams:
    alpha: float = 0.05
    k: int = 25
    alpha_a: Optional[float] = None
    alpha_b: Optional[float] = None


def engine_mode(method: str, params: MethodParams):
    a, k = params.alpha, params.k
    if method == "sava":
        return Symmetric(a, k)
    if method == "sava-classical":
        return Classical(a, k)
    if method == "sava-armspec":
        aa = params.alpha_a if params.alpha_a is not None else a / 2
        ab = params.alpha_b if params.alpha_b is not None else a / 2
        return ArmSpecific(aa, ab, k, k)
    if method == "savaspecial":
        return SavaSpecial(a, k)
    if method == "method1":
        return AdversarialMethod1(a, k)
    if method == "method2":
        return AdversarialMethod2(a)
    raise ValueError(f"{method!r} is not an engine method")


def evidence_kind(world, alpha: float):
    if isinstance(world, DirectWorld):
        return DirectPValues()
    if isinstance(world, Replay):
        return HoeffdingBounded(2.0, alpha)
    model = world.config.model
    if isinstance(model, TruncGauss):
        return HoeffdingBounded(model.K, alpha)
    return GaussianLR(model.mu)


def pvalue_method(world) -> str:
    if isinstance(world, World) and isinstance(world.config.model, Gauss):
        return "ztest"
    if isinstance(world, DirectWorld):
        raise ValueError("the online FDR comparators need sample data, not fixed p-values")
    return "wilcoxon"


def run_method(method: str, world, params: MethodParams, record: str = "final",
               check_invariants: bool = True):
    """Run one method on one world; returns the engine or baseline result object."""
    if method in BASELINE_METHODS:
        return baselines.run_baseline(method, world.grid, world, params.alpha,
                                      pvalue_method(world), truths=world.truths)
    if method not in SAVA_METHODS:
        raise ValueError(f"unknown method {method!r}")
    return run(engine_mode(method, params), world.grid, world,
               evidence_kind(world, params.alpha), truths=world.truths,
               record=record, check_invariants=check_invariants)


def replication_seed(seed: int, rep: int) -> int:
    state = np.random.SeedSequence(seed, spawn_key=(rep,)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


@dataclass(frozen=True)
class SimJob:
    """Everything one replication needs; picklable for the process pool."""

    world: str                    # "sim", "ce1", "ce2"
    methods: tuple
    params: MethodParams
    seed: int
    T: int = 300
    p: float = 1 / 3
    pi_plus: float = 0.5
    model: object = None


def make_world(job: SimJob, rep: int):
    s = replication_seed(job.seed, rep)
    if job.world == "sim":
        return gen_world(WorldConfig(job.T, job.p, job.pi_plus, job.model, s))
    if job.world == "ce1":
        return gen_counterexample1(s, T=job.T)
    if job.world == "ce2":
        return gen_counterexample2(s, T=job.T)
    raise ValueError(f"unknown world kind {job.world!r}")


def run_replication(job: SimJob, rep: int) -> dict[str, MetricsSeries]:
    world = make_world(job, rep)
    out = {}
    for m in job.methods:
        res = run_method(m, world, job.params)
        out[m] = res.metrics
    return out


def _run_one(args):
    job, rep = args
    return run_replication(job, rep)


def run_replications(job: SimJob, reps: int, threads: int = 1) -> dict[str, list[MetricsSeries]]:
    """Run ``reps`` replications of ``job``; returns per-method lists in replication order."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    tasks = [(job, r) for r in range(reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=max(1, reps // (4 * threads))))
    else:
        results = [_run_one(t) for t in tasks]
    return {m: [r[m] for r in results] for m in job.methods}
