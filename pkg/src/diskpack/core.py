"""Geometry primitives, container regions and the disk/point-dispersion conversions.

Coordinates are measured in disk-radius units with every region centered at
the origin. A region is closed: a disk of radius ``r`` is inside when each
wall distance of its center is at least ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Iterable, NamedTuple

import numpy as np

from .errors import DegenerateSquare, NotEnoughDisks, OutsideRegion

# Relative overlap tolerance (multiplied by the radius) for validity checks.
OVERLAP_TOL = 1e-12

SQRT3 = math.sqrt(3.0)


class BoundaryObstacle(NamedTuple):
    wall: str
    point: np.ndarray
    distance: float


class Region:
    """Convex container centered at the origin.

    Subclasses describe themselves through named walls. Polygonal regions are
    intersections of half-planes ``normal . p <= offset``.
    """

    kind: ClassVar[str] = ""
    wall_names: ClassVar[tuple[str, ...]] = ()

    def wall_distance(self, p, wall: str) -> float:
        raise NotImplementedError

    def wall_distances(self, centers: np.ndarray) -> np.ndarray:
        """Center-to-wall distances, shape (n, n_walls), in ``wall_names`` order."""
        raise NotImplementedError

    def wall_foot(self, p, wall: str) -> np.ndarray:
        """Closest point of ``wall`` to ``p``."""
        raise NotImplementedError

    def boundary_distance(self, p) -> float:
        return float(self.wall_distances(np.asarray(p, float).reshape(1, 2)).min())

    def contains(self, p, radius: float = 0.0, tol: float = 0.0) -> bool:
        return self.boundary_distance(p) >= radius - tol

    def boundary_obstacles(self, center, reach: float) -> list[BoundaryObstacle]:
        raise NotImplementedError

    def fit(self, centers: np.ndarray, radius: float) -> "Region":
        """Smallest origin-centered region of the same shape holding every disk."""
        raise NotImplementedError

    def scaled(self, factor: float) -> "Region":
        raise NotImplementedError

    def incident_walls(self) -> set[frozenset[str]]:
        """Pairs of walls that meet at a corner."""
        return set()

    def center_domain_size(self, radius: float) -> float:
        """Reference length of the region left to the centers (used for ``m``)."""
        raise NotImplementedError

    def outline(self) -> np.ndarray | None:
        """Polygon vertices counter-clockwise, or None for curved regions."""
        return None

    def params(self) -> dict[str, float]:
        raise NotImplementedError

    @property
    def extent(self) -> float:
        """Half-size of the axis-aligned box enclosing the region."""
        raise NotImplementedError


class _PolygonRegion(Region):
    """Shared half-plane machinery for the polygonal containers."""

    def normals(self) -> np.ndarray:
        raise NotImplementedError

    def offsets(self) -> np.ndarray:
        raise NotImplementedError

    def wall_distances(self, centers):
        centers = np.asarray(centers, float).reshape(-1, 2)
        return self.offsets()[None, :] - centers @ self.normals().T

    def wall_distance(self, p, wall):
        k = self.wall_names.index(wall)
        p = np.asarray(p, float)
        return float(self.offsets()[k] - self.normals()[k] @ p)

    def wall_foot(self, p, wall):
        k = self.wall_names.index(wall)
        p = np.asarray(p, float)
        return p + self.wall_distance(p, wall) * self.normals()[k]

    def boundary_obstacles(self, center, reach):
        center = np.asarray(center, float)
        dists = self.wall_distances(center)[0]
        if np.any(dists < 0):
            raise OutsideRegion(f"point {center.tolist()} lies outside the {self.kind}")
        verts = self.outline()
        out = []
        for k, wall in enumerate(self.wall_names):
            foot = center + dists[k] * self.normals()[k]
            # The perpendicular foot is a local minimum of the boundary
            # distance only when it falls inside the side itself.
            a, b = verts[k], verts[(k + 1) % len(verts)]
            t = (foot - a) @ (b - a) / ((b - a) @ (b - a))
            if not 0.0 <= t <= 1.0:
                continue
            if dists[k] <= reach:
                out.append(BoundaryObstacle(wall, foot, float(dists[k])))
        return out


@dataclass(frozen=True)
class Rectangle(_PolygonRegion):
    width: float
    height: float

    kind: ClassVar[str] = "rectangle"
    # Walls are listed in the same order as the outline edges.
    wall_names: ClassVar[tuple[str, ...]] = ("bottom", "right", "top", "left")

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("rectangle sides must be positive")

    def normals(self):
        return np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])

    def offsets(self):
        hw, hh = self.width / 2, self.height / 2
        return np.array([hh, hw, hh, hw])

    def outline(self):
        hw, hh = self.width / 2, self.height / 2
        return np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])

    def incident_walls(self):
        return {frozenset(p) for p in [("bottom", "right"), ("right", "top"), ("top", "left"), ("left", "bottom")]}

    def fit(self, centers, radius):
        c = np.asarray(centers, float)
        t = max((np.abs(c[:, 0]).max() + radius) / (self.width / 2),
                (np.abs(c[:, 1]).max() + radius) / (self.height / 2))
        return self.scaled(t)

    def scaled(self, factor):
        return Rectangle(self.width * factor, self.height * factor)

    def center_domain_size(self, radius):
        return self.width - 2 * radius

    def params(self):
        return {"width": self.width, "height": self.height}

    @property
    def extent(self):
        return max(self.width, self.height) / 2


@dataclass(frozen=True)
class Square(Rectangle):
    """Axis-aligned square of the given side."""

    width: float = field(init=False, repr=False)
    height: float = field(init=False, repr=False)
    side: float = 1.0

    kind: ClassVar[str] = "square"

    def __init__(self, side: float):
        if not side > 0:
            raise ValueError("square side must be positive")
        object.__setattr__(self, "side", float(side))
        object.__setattr__(self, "width", float(side))
        object.__setattr__(self, "height", float(side))

    def fit(self, centers, radius):
        return Square(_bounding_side(np.asarray(centers, float), radius))

    def scaled(self, factor):
        return Square(self.side * factor)

    def params(self):
        return {"side": self.side}


@dataclass(frozen=True)
class Triangle(_PolygonRegion):
    """Equilateral triangle with a horizontal bottom side and centroid at the origin."""

    side: float

    kind: ClassVar[str] = "triangle"
    wall_names: ClassVar[tuple[str, ...]] = ("bottom", "right", "left")

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("triangle side must be positive")

    @property
    def inradius(self) -> float:
        return self.side / (2 * SQRT3)

    def normals(self):
        return np.array([[0.0, -1.0], [SQRT3 / 2, 0.5], [-SQRT3 / 2, 0.5]])

    def offsets(self):
        return np.full(3, self.inradius)

    def outline(self):
        h = self.inradius
        return np.array([[-self.side / 2, -h], [self.side / 2, -h], [0.0, 2 * h]])

    def incident_walls(self):
        return {frozenset(p) for p in [("bottom", "right"), ("right", "left"), ("left", "bottom")]}

    def fit(self, centers, radius):
        c = np.asarray(centers, float)
        need = (c @ self.normals().T).max() + radius
        return Triangle(need * 2 * SQRT3)

    def scaled(self, factor):
        return Triangle(self.side * factor)

    def center_domain_size(self, radius):
        return (self.inradius - radius) * 2 * SQRT3

    def params(self):
        return {"side": self.side}

    @property
    def extent(self):
        return max(self.side / 2, 2 * self.inradius)


@dataclass(frozen=True)
class Circle(Region):
    radius: float

    kind: ClassVar[str] = "circle"
    wall_names: ClassVar[tuple[str, ...]] = ("rim",)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")

    def wall_distances(self, centers):
        centers = np.asarray(centers, float).reshape(-1, 2)
        return (self.radius - np.hypot(centers[:, 0], centers[:, 1]))[:, None]

    def wall_distance(self, p, wall="rim"):
        return float(self.radius - math.hypot(*np.asarray(p, float)))

    def wall_foot(self, p, wall="rim"):
        p = np.asarray(p, float)
        norm = math.hypot(*p)
        if norm == 0.0:
            return np.array([self.radius, 0.0])
        return p * (self.radius / norm)

    def boundary_obstacles(self, center, reach):
        center = np.asarray(center, float)
        dist = self.wall_distance(center)
        if dist < 0:
            raise OutsideRegion(f"point {center.tolist()} lies outside the circle")
        # At the exact center every rim point is equidistant; no isolated minimum.
        if math.hypot(*center) == 0.0 or dist > reach:
            return []
        return [BoundaryObstacle("rim", self.wall_foot(center), dist)]

    def fit(self, centers, radius):
        c = np.asarray(centers, float)
        return Circle(float(np.hypot(c[:, 0], c[:, 1]).max() + radius))

    def scaled(self, factor):
        return Circle(self.radius * factor)

    def center_domain_size(self, radius):
        return 2 * (self.radius - radius)

    def params(self):
        return {"radius": self.radius}

    @property
    def extent(self):
        return self.radius


REGION_KINDS = {"square": Square, "rectangle": Rectangle, "triangle": Triangle, "circle": Circle}


def make_region(kind: str, **params: float) -> Region:
    try:
        cls = REGION_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown region kind {kind!r}") from None
    return cls(**params)


@dataclass
class Configuration:
    """Disk centers with a common radius inside a region."""

    centers: np.ndarray
    radius: float
    region: Region

    def __post_init__(self):
        self.centers = np.array(self.centers, dtype=float).reshape(-1, 2)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not np.all(np.isfinite(self.centers)):
            raise ValueError("non-finite coordinates")

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def diameter(self) -> float:
        return 2 * self.radius

    def copy(self) -> "Configuration":
        return Configuration(self.centers.copy(), self.radius, self.region)

    def rotated90(self) -> "Configuration":
        """Counter-clockwise quarter turn about the origin (square regions only)."""
        if not isinstance(self.region, Square):
            raise ValueError("quarter-turn rotation needs a square region")
        x, y = self.centers[:, 0], self.centers[:, 1]
        return Configuration(np.column_stack([-y, x]), self.radius, self.region)


# Quarter-turn wall relabeling for squares: a disk on the right wall ends up on the top wall.
ROTATE90_WALLS = {"right": "top", "top": "left", "left": "bottom", "bottom": "right"}


def _bounding_side(centers: np.ndarray, radius: float) -> float:
    if len(centers) == 0:
        raise NotEnoughDisks("empty configuration")
    far = float(np.abs(centers).max())
    side = 2.0 * (far + radius)
    # rounding can leave the farthest disk an ulp outside; widen until it fits exactly
    while side / 2 - far < radius:
        side = math.nextafter(side, math.inf)
    return side


def pair_distances(centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Upper-triangle index arrays and center distances for all pairs."""
    i, j = np.triu_indices(len(centers), k=1)
    d = centers[i] - centers[j]
    return i, j, np.hypot(d[:, 0], d[:, 1])


def min_pairwise_gap(config: Configuration) -> float:
    """Smallest surface-to-surface gap between two disks (negative on overlap)."""
    if config.n < 2:
        raise NotEnoughDisks("need at least two disks")
    _, _, dist = pair_distances(config.centers)
    return float(dist.min() - 2 * config.radius)


def min_wall_gap(config: Configuration) -> float:
    return float(config.region.wall_distances(config.centers).min() - config.radius)


def bounding_square_side(config: Configuration) -> float:
    """Side of the smallest origin-centered axis-aligned square holding every disk."""
    return _bounding_side(config.centers, config.radius)


def m_from_side(side: float, radius: float) -> float:
    """Point-dispersion value of ``n`` disks of ``radius`` packed in a square of ``side``."""
    if side <= 2 * radius:
        raise DegenerateSquare(f"side {side} does not exceed the diameter {2 * radius}")
    return 2 * radius / (side - 2 * radius)


def side_from_m(m: float, radius: float) -> float:
    if not m > 0:
        raise ValueError("m must be positive")
    return 2 * radius * (1 + 1 / m)


def diameter_fraction(m: float) -> float:
    """Disk diameter relative to the unit square for dispersion value ``m``."""
    return m / (1 + m)


def dispersion(config: Configuration) -> float:
    """The ``m`` value of a configuration.

    For squares this is ``m_from_side`` of the bounding square; other regions
    use the size of the region left to the centers as reference length.
    """
    if isinstance(config.region, Square):
        return m_from_side(bounding_square_side(config), config.radius)
    return 2 * config.radius / config.region.center_domain_size(config.radius)


def boundary_obstacles(region: Region, center, reach: float) -> list[BoundaryObstacle]:
    """Boundary points that locally minimize the distance to ``center``, within ``reach``."""
    return region.boundary_obstacles(center, reach)


def validity_violations(config: Configuration, tol: float = OVERLAP_TOL) -> list[str]:
    """Human-readable overlap and containment violations, empty when valid."""
    out = []
    abs_tol = tol * config.radius
    if config.n >= 2:
        i, j, dist = pair_distances(config.centers)
        gaps = dist - 2 * config.radius
        for k in np.flatnonzero(gaps < -abs_tol):
            out.append(f"disks {i[k] + 1} and {j[k] + 1} overlap by {-gaps[k]:.3e}")
    walls = config.region.wall_distances(config.centers) - config.radius
    for a, k in zip(*np.nonzero(walls < -abs_tol)):
        out.append(f"disk {a + 1} crosses wall {config.region.wall_names[k]} by {-walls[a, k]:.3e}")
    return out


def is_valid(config: Configuration, tol: float = OVERLAP_TOL) -> bool:
    return not validity_violations(config, tol)


def grid_configuration(k: int, radius: float = 1.0) -> Configuration:
    """``k x k`` square grid of tangent disks filling a square of side ``2 k radius``."""
    coords = (np.arange(k) - (k - 1) / 2) * 2 * radius
    xx, yy = np.meshgrid(coords, coords)
    centers = np.column_stack([xx.ravel(), yy.ravel()])
    return Configuration(centers, radius, Square(2 * k * radius))


def unit_square_points(config: Configuration) -> np.ndarray:
    """Centers mapped to the unit square formulation (square regions only)."""
    side = bounding_square_side(config) - 2 * config.radius
    return config.centers / side + 0.5


def from_unit_square_points(points: Iterable, radius: float = 1.0) -> Configuration:
    """Disks of ``radius`` centered on dispersion points scaled so the closest pair touches."""
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) < 2:
        raise NotEnoughDisks("need at least two points")
    _, _, dist = pair_distances(pts)
    m = float(dist.min())
    scale = 2 * radius / m
    centers = (pts - 0.5) * scale
    return Configuration(centers, radius, Square(scale + 2 * radius))
