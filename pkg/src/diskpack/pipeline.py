"""Restart orchestration: Phase 1 compaction followed by Phase 2 refinement."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import __version__, phase1
from .analysis import BondGraph, immobility_shading
from .billiards import BilliardsParams
from .core import Configuration, dispersion
from .errors import AllRestartsFailed, PackingError
from .phase1 import Phase1Params
from .phase2 import refine

log = logging.getLogger(__name__)


@dataclass
class PackingResult:
    configuration: Configuration
    m: float
    bond_graph: BondGraph
    labels: list[str]
    provenance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.configuration.n


@dataclass
class RunSpec:
    n: int
    shape: str = "square"
    phase1: Phase1Params = field(default_factory=Phase1Params)
    billiards: BilliardsParams = field(default_factory=BilliardsParams)
    restarts: int = 1
    base_seed: int = 0
    out: str | None = None
    records_dir: str | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")


@dataclass
class RestartRecord:
    index: int
    seed: int
    m: float | None
    phase1_m: float | None = None
    phase1_seconds: float = 0.0
    phase2_seconds: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class MultiRestartResult:
    best: PackingResult
    trace: list[RestartRecord]


def result_from(config: Configuration, bonds: BondGraph, provenance: dict) -> PackingResult:
    labels = immobility_shading(bonds).labels
    # a lone disk has no pairwise distance to spread
    m = dispersion(config) if config.n > 1 else math.inf
    return PackingResult(config, m, bonds, labels, provenance)


def run_single(n: int, shape: str = "square", p1: Phase1Params | None = None,
               bp: BilliardsParams | None = None, seed: int = 0,
               restart: int = 0) -> tuple[PackingResult, RestartRecord]:
    p1 = p1 or Phase1Params()
    t0 = time.perf_counter()
    out1 = phase1.compact(n, p1, seed, shape)
    t1 = time.perf_counter()
    m1 = dispersion(out1.config) if n > 1 else None
    out2 = refine(out1.config, bp, seed)
    t2 = time.perf_counter()
    provenance = {
        "seed": seed,
        "restart": restart,
        "version": __version__,
        "phase1_sweeps": out1.sweeps,
        "phase1_levels": out1.levels,
        "phase1_converged": out1.converged,
        "phase1_m": m1,
        "init_box_side": p1.box_side(n),
        "phase2_events": out2.events,
        "phase2_jammed": out2.jammed,
        "phase2_polished": out2.polished,
        # the direction chosen by a failed second try is kept for the next attempt
        "failed_direction_persists": True,
    }
    result = result_from(out2.config, out2.bonds, provenance)
    record = RestartRecord(restart, seed, result.m, m1, t1 - t0, t2 - t1)
    return result, record


def _restart_job(args):
    spec, k = args
    seed = spec.base_seed + k
    try:
        return run_single(spec.n, spec.shape, spec.phase1, spec.billiards, seed, k)
    except PackingError as exc:
        return None, RestartRecord(k, seed, None, error=f"{type(exc).__name__}: {exc}")


def multi_restart(spec: RunSpec, workers: int = 1) -> MultiRestartResult:
    """Independent pipelines with seeds ``base_seed + k``; keeps the largest ``m``.

    Ties go to the lowest restart index, so the outcome does not depend on
    the order in which workers finish.
    """
    jobs = [(spec, k) for k in range(spec.restarts)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_restart_job, jobs))
    else:
        outcomes = [_restart_job(j) for j in jobs]
    trace = [rec for _, rec in outcomes]
    good = [(res, rec) for res, rec in outcomes if res is not None]
    if not good:
        raise AllRestartsFailed(f"all {spec.restarts} restarts failed: {trace[0].error}")
    best, _ = min(good, key=lambda pair: (-pair[0].m, pair[1].index))
    for rec in trace:
        if not rec.ok:
            log.warning("restart %d (seed %d) failed: %s", rec.index, rec.seed, rec.error)
    return MultiRestartResult(best, trace)
