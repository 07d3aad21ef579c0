"""Refinement of approximate packings to exact contacts.

The billiards compression hardens an approximate packing; the bonds it
reveals are then solved exactly by a least-squares polish of the contact
equations. A quarter-turn of the input offers an independent second path
through the same refinement, which is how rigidity is checked.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .analysis import BondGraph, bond_graph_from, classify_rattlers, contacts, match_points
from .billiards import BilliardsParams, BilliardsResult, billiards_compress
from .core import (OVERLAP_TOL, ROTATE90_WALLS, Circle, Configuration, Square, dispersion,
                   validity_violations)
from .errors import PolishFailed

log = logging.getLogger(__name__)

BOND_TIGHT = 1e-11
BOND_LOOSE = 1e-5
# Gap thresholds (diameter fractions) tried in turn when choosing which
# post-billiards gaps to polish shut. A quasi-jammed billiards run can leave
# true contacts open by ~1e-6, so the smallest threshold is not always enough.
CANDIDATE_LADDER = (1e-8, 1e-7, 1e-6, 3e-6, 1e-5)
POLISH_TARGET = 1e-24

__all__ = [
    "BilliardsParams", "billiards_compress", "identify_bonds", "PolishProblem",
    "polish_bonds", "refine", "rigidity_perturbation_check",
]


def identify_bonds(config: Configuration, tight: float = BOND_TIGHT,
                   loose: float = BOND_LOOSE, warn: bool = True) -> BondGraph:
    """Contacts with gap below ``tight`` diameters; gaps in ``[tight, loose)`` are flagged."""
    all_gaps = contacts(config)
    bonds = [c for c in all_gaps if c.gap < tight]
    ambiguous = sorted((c for c in all_gaps if tight <= c.gap < loose), key=lambda c: c.gap)
    if ambiguous and warn:
        log.warning("%d gaps in the ambiguous band [%g, %g)", len(ambiguous), tight, loose)
    return bond_graph_from(config, bonds, ambiguous)


@dataclass
class PolishProblem:
    config: Configuration
    disk_bonds: list[tuple[int, int]]
    wall_bonds: list[tuple[int, str]]
    diameter: float
    free_diameter: bool = False

    @classmethod
    def from_bonds(cls, config: Configuration, bonds: BondGraph, diameter: float | None = None,
                   free_diameter: bool = False) -> "PolishProblem":
        return cls(config, sorted(bonds.disk_edges), sorted(bonds.wall_edges, key=str),
                   config.diameter if diameter is None else diameter, free_diameter)


@dataclass
class PolishResult:
    config: Configuration
    residual: float
    iterations: int
    diameter: float


def _residuals(problem: PolishProblem, x: np.ndarray):
    n = problem.config.n
    z = x[: 2 * n].reshape(n, 2)
    d = x[2 * n] if problem.free_diameter else problem.diameter
    region = problem.config.region
    m = len(problem.disk_bonds) + len(problem.wall_bonds)
    res = np.empty(m)
    jac = np.zeros((m, len(x)))
    row = 0
    for i, j in problem.disk_bonds:
        diff = z[i] - z[j]
        dist = np.hypot(*diff)
        u = diff / dist
        res[row] = dist - d
        jac[row, 2 * i: 2 * i + 2] = u
        jac[row, 2 * j: 2 * j + 2] = -u
        if problem.free_diameter:
            jac[row, 2 * n] = -1.0
        row += 1
    for i, wall in problem.wall_bonds:
        res[row] = region.wall_distance(z[i], wall) - d / 2
        if isinstance(region, Circle):
            grad = -z[i] / np.hypot(*z[i])
        else:
            grad = -region.normals()[region.wall_names.index(wall)]
        jac[row, 2 * i: 2 * i + 2] = grad
        if problem.free_diameter:
            jac[row, 2 * n] = -0.5
        row += 1
    return res, jac


def polish_bonds(problem: PolishProblem, max_iter: int = 200,
                 target: float = POLISH_TARGET) -> PolishResult:
    """Minimize the squared bond-equation residuals by damped Gauss-Newton.

    Steps are minimum-norm least-squares solutions (so rank-deficient bond
    systems are fine) with backtracking; when no Gauss-Newton step decreases
    the objective a steepest-descent step is tried instead.
    """
    cfg = problem.config
    n = cfg.n
    x = cfg.centers.ravel().copy()
    if problem.free_diameter:
        x = np.append(x, problem.diameter)

    def result(x, f, it):
        d = x[2 * n] if problem.free_diameter else problem.diameter
        return PolishResult(Configuration(x[: 2 * n].reshape(n, 2), d / 2, cfg.region), f, it, d)

    if not problem.disk_bonds and not problem.wall_bonds:
        return result(x, 0.0, 0)

    res, jac = _residuals(problem, x)
    f = float(res @ res)
    for it in range(max_iter):
        if f <= target:
            return result(x, f, it)
        step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        accepted = False
        for direction in (step, -(jac.T @ res)):
            t = 1.0
            for _ in range(60):
                x_new = x + t * direction
                res_new, jac_new = _residuals(problem, x_new)
                f_new = float(res_new @ res_new)
                if f_new < f:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        if not accepted:
            break
        x, res, jac, f = x_new, res_new, jac_new, f_new
    if f <= target:
        return result(x, f, max_iter)
    raise PolishFailed(f"bond system residual stalled at {f:.3e}", residual=f)


@dataclass
class Phase2Result:
    config: Configuration
    m: float
    bonds: BondGraph
    events: int
    jammed: bool
    polished: bool
    polish_residual: float
    notes: list[str] = field(default_factory=list)


def refine(config: Configuration, params: BilliardsParams | None = None, seed: int = 0,
           tight: float = BOND_TIGHT, loose: float = BOND_LOOSE,
           candidates: tuple[float, ...] = CANDIDATE_LADDER) -> Phase2Result:
    """Billiards compression inside the fixed region, then an exact bond polish.

    Each candidate threshold proposes a bond set. A polish is kept only if the
    result is valid and its diameter is at least the billiards one; among kept
    results the largest diameter wins, since it is the denser packing of the
    same region. The ladder stops once a kept result has no ambiguous gaps.
    """
    b: BilliardsResult = billiards_compress(config, params, seed)
    notes = ["billiards termination uses a stall-in-diameter criterion"]
    if not b.jammed:
        notes.append("billiards hit max_events before jamming")
    final, best_d = b.config, b.diameter
    polished = False
    residual = float("nan")
    all_gaps = contacts(b.config)
    tried: set[frozenset] = set()
    for candidate in candidates:
        cands = [c for c in all_gaps if c.gap < candidate]
        key = frozenset((c.a, c.b) for c in cands)
        if not cands or key in tried:
            continue
        tried.add(key)
        graph = bond_graph_from(b.config, cands)
        problem = PolishProblem.from_bonds(b.config, graph, b.diameter, free_diameter=True)
        try:
            pr = polish_bonds(problem)
        except PolishFailed as exc:
            notes.append(f"polish at gap < {candidate:g} failed: {exc}")
            continue
        if pr.diameter < b.diameter * (1 - 1e-12) or validity_violations(pr.config, OVERLAP_TOL):
            notes.append(f"polish at gap < {candidate:g} rejected (overlap or shrink)")
            continue
        if not polished or pr.diameter > best_d:
            final, best_d, residual, polished = pr.config, pr.diameter, pr.residual, True
        if not identify_bonds(final, tight, loose, warn=False).ambiguous:
            break
    bonds = identify_bonds(final, tight, loose)
    m = dispersion(final)
    return Phase2Result(final, m, bonds, b.events, b.jammed, polished, residual, notes)


def rotate_bonds(bonds: BondGraph) -> BondGraph:
    """Bond graph of the quarter-turned packing (disk labels kept)."""
    return BondGraph(bonds.n, bonds.disk_edges,
                     frozenset((i, ROTATE90_WALLS[w]) for i, w in bonds.wall_edges),
                     bonds.ambiguous, bonds.incident_walls)


def relabel_bonds(bonds: BondGraph, perm) -> BondGraph:
    disk = frozenset((min(perm[i], perm[j]), max(perm[i], perm[j])) for i, j in bonds.disk_edges)
    wall = frozenset((perm[i], w) for i, w in bonds.wall_edges)
    return BondGraph(bonds.n, disk, wall, bonds.ambiguous, bonds.incident_walls)


@dataclass
class RigidityReport:
    passed: bool
    m_original: float
    m_rotated: float
    bonds_match: bool
    max_center_mismatch: float
    rattlers: list[int]
    mismatches: list[tuple[int, float]] = field(default_factory=list)

    @property
    def m_difference(self) -> float:
        return abs(self.m_original - self.m_rotated)

    def text(self) -> str:
        lines = [
            f"rigidity check: {'pass' if self.passed else 'FAIL'}",
            f"  m original {self.m_original:.17g}",
            f"  m rotated  {self.m_rotated:.17g}  (|diff| {self.m_difference:.3e})",
            f"  bond graphs match under rotation: {self.bonds_match}",
            f"  worst center mismatch: {self.max_center_mismatch:.3e}"
            f" (rattlers excluded: {[r + 1 for r in self.rattlers]})",
        ]
        lines += [f"  disk {i + 1}: mismatch {d:.3e}" for i, d in self.mismatches]
        return "\n".join(lines)


def rigidity_perturbation_check(phase1_output: Configuration, seed: int = 0,
                                params: BilliardsParams | None = None,
                                m_tol: float = 1e-9, center_tol: float = 1e-7) -> RigidityReport:
    """Refine the configuration and its quarter-turn; the results must agree up to the turn."""
    if not isinstance(phase1_output.region, Square):
        raise ValueError("the rotation check needs a square region")
    a = refine(phase1_output, params, seed)
    b = refine(phase1_output.rotated90(), params, seed)
    a_rot = a.config.rotated90()
    a_bonds = rotate_bonds(a.bonds)
    rattlers = classify_rattlers(a.bonds) | classify_rattlers(b.bonds)
    keep = np.array([i for i in range(a.config.n) if i not in rattlers], int)
    perm = np.arange(a.config.n)
    worst = 0.0
    mismatches = []
    if len(keep):
        sub_perm, worst = match_points(a_rot.centers[keep], b.config.centers[keep])
        perm[keep] = keep[sub_perm]
        dist = np.hypot(*(a_rot.centers[keep] - b.config.centers[perm[keep]]).T)
        mismatches = [(int(i), float(d)) for i, d in zip(keep, dist) if d > center_tol]
    bonds_match = (relabel_bonds(a_bonds, perm).disk_edges == b.bonds.disk_edges
                   and relabel_bonds(a_bonds, perm).wall_edges == b.bonds.wall_edges)
    passed = abs(a.m - b.m) <= m_tol and bonds_match and worst <= center_tol
    return RigidityReport(passed, a.m, b.m, bonds_match, worst, sorted(rattlers), mismatches)
