"""Reading a packing: bonds, rattlers, immobility shading, near contacts, symmetry."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Configuration, Square, pair_distances

# Neighbors closer than this (in diameters) form a rattler's cage.
CAGE_CUTOFF = 0.15

RATTLER, FIXED, ANCHORED = "rattler", "fixed", "anchored"

SYMMETRY_AXES = ("vertical", "horizontal", "diagonal", "antidiagonal")


class Contact(NamedTuple):
    """A disk-disk (``b`` int) or disk-wall (``b`` str) gap in diameter fractions."""

    a: int
    b: int | str
    gap: float

    @property
    def is_wall(self) -> bool:
        return isinstance(self.b, str)

    def label(self) -> str:
        """One-based label in the style ``21-5`` or ``bottom-11``."""
        if self.is_wall:
            return f"{self.b}-{self.a + 1}"
        return f"{self.a + 1}-{self.b + 1}"


@dataclass(frozen=True)
class BondGraph:
    n: int
    disk_edges: frozenset = frozenset()
    wall_edges: frozenset = frozenset()
    ambiguous: tuple = ()
    incident_walls: frozenset = frozenset()

    def __post_init__(self):
        for i, j in self.disk_edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad disk edge {(i, j)} for n={self.n}")
        for i, _ in self.wall_edges:
            if not 0 <= i < self.n:
                raise ValueError(f"bad wall edge disk {i} for n={self.n}")

    @property
    def total(self) -> int:
        return len(self.disk_edges) + len(self.wall_edges)

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n, int)
        for i, j in self.disk_edges:
            deg[i] += 1
            deg[j] += 1
        for i, _ in self.wall_edges:
            deg[i] += 1
        return deg

    def neighbors(self, a: int) -> set:
        out: set = {j for i, j in self.disk_edges if i == a}
        out |= {i for i, j in self.disk_edges if j == a}
        out |= {w for i, w in self.wall_edges if i == a}
        return out

    def in_contact(self, b, c) -> bool:
        """Whether two clique elements (disk index or wall name) touch."""
        if isinstance(b, str) and isinstance(c, str):
            return frozenset((b, c)) in self.incident_walls
        if isinstance(b, str):
            b, c = c, b
        if isinstance(c, str):
            return (b, c) in self.wall_edges
        return (min(b, c), max(b, c)) in self.disk_edges

    def with_bond(self, a: int, b) -> "BondGraph":
        if isinstance(b, str):
            return BondGraph(self.n, self.disk_edges, self.wall_edges | {(a, b)},
                             self.ambiguous, self.incident_walls)
        return BondGraph(self.n, self.disk_edges | {(min(a, b), max(a, b))}, self.wall_edges,
                         self.ambiguous, self.incident_walls)


def contacts(config: Configuration) -> list[Contact]:
    """Every disk-disk and disk-wall gap, measured in fractions of the diameter."""
    diam = config.diameter
    out = []
    if config.n >= 2:
        i, j, dist = pair_distances(config.centers)
        gaps = (dist - diam) / diam
        out.extend(Contact(int(a), int(b), float(g)) for a, b, g in zip(i, j, gaps))
    walls = (config.region.wall_distances(config.centers) - config.radius) / diam
    names = config.region.wall_names
    for a in range(config.n):
        out.extend(Contact(a, names[k], float(walls[a, k])) for k in range(len(names)))
    return out


def bond_graph_from(config: Configuration, bonds, ambiguous=()) -> BondGraph:
    disk_edges = frozenset((c.a, c.b) for c in bonds if not c.is_wall)
    wall_edges = frozenset((c.a, c.b) for c in bonds if c.is_wall)
    return BondGraph(config.n, disk_edges, wall_edges, tuple(ambiguous),
                     frozenset(config.region.incident_walls()))


def near_contact_report(config: Configuration, cutoff: float = 0.02,
                        tight: float = 1e-11) -> list[Contact]:
    """Gaps that are not bonds (at or above ``tight``) yet below ``cutoff``, smallest first."""
    rows = [c for c in contacts(config) if tight <= c.gap < cutoff]
    return sorted(rows, key=lambda c: (c.gap, c.a, str(c.b)))


def format_gap(x: float) -> str:
    """Six significant digits with a leading ``0.``, e.g. ``0.663349E-05``."""
    if x == 0:
        return "0.000000E+00"
    exp = math.floor(math.log10(abs(x))) + 1
    mant = x / 10.0 ** exp
    if round(abs(mant), 6) >= 1.0:
        mant /= 10
        exp += 1
    return f"{mant:.6f}E{exp:+03d}"


def format_near_contacts(rows: list[Contact]) -> str:
    return "\n".join(f"{c.label():>14}  {format_gap(c.gap)}" for c in rows)


def classify_rattlers(bonds: BondGraph) -> set[int]:
    """Disks without a single bond."""
    return {int(a) for a in np.flatnonzero(bonds.degree() == 0)}


def rattler_cages(config: Configuration, rattlers, cutoff: float = CAGE_CUTOFF) -> dict[int, list]:
    """Disks and walls within ``cutoff`` diameters of each rattler."""
    cages: dict[int, list] = {r: [] for r in rattlers}
    for c in contacts(config):
        if c.gap >= cutoff:
            continue
        if c.a in cages:
            cages[c.a].append(c.b)
        if not c.is_wall and c.b in cages:
            cages[c.b].append(c.a)
    return cages


@dataclass
class DiskClassification:
    labels: list[str]

    @property
    def rattlers(self) -> set[int]:
        return {i for i, lab in enumerate(self.labels) if lab == RATTLER}

    @property
    def anchored(self) -> set[int]:
        return {i for i, lab in enumerate(self.labels) if lab == ANCHORED}

    @property
    def fixed(self) -> set[int]:
        """Every non-rattler, anchored disks included."""
        return {i for i, lab in enumerate(self.labels) if lab != RATTLER}


def in_three_clique(bonds: BondGraph, a: int) -> bool:
    nbrs = sorted(bonds.neighbors(a), key=str)
    for x in range(len(nbrs)):
        for y in range(x + 1, len(nbrs)):
            if bonds.in_contact(nbrs[x], nbrs[y]):
                return True
    return False


def immobility_shading(bonds: BondGraph) -> DiskClassification:
    rattlers = classify_rattlers(bonds)
    labels = []
    for a in range(bonds.n):
        if a in rattlers:
            labels.append(RATTLER)
        else:
            labels.append(ANCHORED if in_three_clique(bonds, a) else FIXED)
    return DiskClassification(labels)


_REFLECTIONS = {
    "vertical": np.array([[-1.0, 0.0], [0.0, 1.0]]),
    "horizontal": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "diagonal": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "antidiagonal": np.array([[0.0, -1.0], [-1.0, 0.0]]),
}


def reflect(config: Configuration, axis: str) -> Configuration:
    return Configuration(config.centers @ _REFLECTIONS[axis].T, config.radius, config.region)


def match_points(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Optimal assignment ``perm`` with ``a[k] ~ b[perm[k]]`` and its worst distance."""
    if len(a) == 0:
        return np.zeros(0, int), 0.0
    cost = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(a), int)
    perm[rows] = cols
    return perm, float(cost[rows, cols].max())


def detect_mirror_symmetry(config: Configuration, tol: float = 1e-7) -> str | None:
    """First square reflection axis mapping the centers onto themselves within ``tol``."""
    if not isinstance(config.region, Square):
        raise ValueError("mirror symmetry detection needs a square region")
    for axis in SYMMETRY_AXES:
        _, worst = match_points(reflect(config, axis).centers, config.centers)
        if worst <= tol:
            return axis
    return None


@dataclass
class AnalysisReport:
    bonds: BondGraph
    classification: DiskClassification
    cages: dict
    near_contacts: list[Contact]
    symmetry: str | None
    extra: dict = field(default_factory=dict)

    def text(self) -> str:
        b = self.bonds
        lines = [
            f"bonds: {b.total} ({len(b.disk_edges)} disk-disk, {len(b.wall_edges)} disk-wall)",
            f"ambiguous gaps: {len(b.ambiguous)}",
            f"rattlers: {len(self.classification.rattlers)}"
            + "".join(f"\n  {r + 1}: cage {_cage_labels(c)}" for r, c in sorted(self.cages.items())),
            f"anchored: {len(self.classification.anchored)}",
            f"mirror symmetry: {self.symmetry or 'none'}",
            "near contacts:",
        ]
        if self.near_contacts:
            lines.append(format_near_contacts(self.near_contacts))
        for key, value in self.extra.items():
            lines.append(f"{key}: {value}")
        return "\n".join(lines)


def _cage_labels(items) -> str:
    return ", ".join(x if isinstance(x, str) else str(x + 1) for x in items)


def analyze(config: Configuration, bonds: BondGraph, cutoff: float = 0.02,
            tight: float = 1e-11, symmetry_tol: float = 1e-7) -> AnalysisReport:
    classification = immobility_shading(bonds)
    symmetry = detect_mirror_symmetry(config, symmetry_tol) if isinstance(config.region, Square) else None
    return AnalysisReport(
        bonds=bonds,
        classification=classification,
        cages=rattler_cages(config, classification.rattlers),
        near_contacts=near_contact_report(config, cutoff, tight),
        symmetry=symmetry,
    )
