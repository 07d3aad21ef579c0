"""Timing experiments: per-restart cost and how fast Phase 1 gains digits of ``m``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from . import phase1
from .core import m_from_side
from .phase1 import Phase1Params
from .phase2 import refine


@dataclass
class DigitPoint:
    digits: int
    sweeps: int
    seconds: float


@dataclass
class BenchRun:
    seed: int
    phase1_seconds: float
    phase2_seconds: float
    phase1_m: float
    refined_m: float
    curve: list[DigitPoint]

    @property
    def total_seconds(self) -> float:
        return self.phase1_seconds + self.phase2_seconds


def agreement_digits(value: float, reference: float) -> int:
    """Number of leading decimal digits shared with ``reference`` (relative error based)."""
    if value == reference:
        return 16
    rel = abs(value - reference) / abs(reference)
    return max(0, min(16, int(math.floor(-math.log10(rel)))))


def digits_curve(history, reference: float, radius: float = 1.0) -> list[DigitPoint]:
    """First elapsed time at which each digit count is reached.

    ``history`` holds ``(sweeps, seconds, side)`` entries as produced by
    a Phase 1 run on a square. Times are cumulative, so the curve is
    non-decreasing in the digit count.
    """
    curve: list[DigitPoint] = []
    reached = 0
    for sweeps, seconds, side in history:
        d = agreement_digits(m_from_side(side, radius), reference)
        while reached < d:
            reached += 1
            curve.append(DigitPoint(reached, sweeps, seconds))
    return curve


def bench(n: int = 10, restarts: int = 3, seed: int = 0, params: Phase1Params | None = None) -> list[BenchRun]:
    runs = []
    for k in range(restarts):
        s = seed + k
        t0 = time.perf_counter()
        out1 = phase1.compact(n, params, s)
        t1 = time.perf_counter()
        out2 = refine(out1.config, seed=s)
        t2 = time.perf_counter()
        curve = digits_curve(out1.history, out2.m)
        runs.append(BenchRun(s, t1 - t0, t2 - t1, m_from_side(out1.config.region.side, 1.0), out2.m, curve))
    return runs


def format_bench(runs: list[BenchRun]) -> str:
    lines = ["seed  phase1[s]  phase2[s]  phase1 m              refined m"]
    for r in runs:
        lines.append(f"{r.seed:4d}  {r.phase1_seconds:9.4f}  {r.phase2_seconds:9.4f}  "
                     f"{r.phase1_m:.15f}  {r.refined_m:.15f}")
    best = max(runs, key=lambda r: r.refined_m)
    lines.append(f"Phase 1 digits-vs-time curve (seed {best.seed}, reference = refined m):")
    lines.append("digits    sweeps  cumulative[s]  ratio")
    prev = None
    for p in best.curve:
        ratio = f"{p.seconds / prev:.2f}" if prev else "-"
        lines.append(f"{p.digits:6d}  {p.sweeps:8d}  {p.seconds:13.6f}  {ratio}")
        prev = p.seconds if p.seconds > 0 else prev
    lines.append(f"refinement reaches full precision at {best.total_seconds:.6f} s")
    return "\n".join(lines)
