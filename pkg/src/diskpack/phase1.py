"""Shrinking-step repulsion compaction inside a shrinking container.

Every disk keeps a motion direction. A sweep tries to move each disk a step
``s`` along its direction; a blocked disk gets a new direction from the sum
of repelling vectors of the obstacles it can reach and tries once more.
After each sweep the container is refitted around the disks. The step is
multiplied by ``q`` whenever the container stops shrinking for more than
``tolerance`` sweeps or a whole sweep fails, and the run ends once the step
falls to ``epsilon``.

The per-disk loops are compiled with numba; the public functions below wrap
the same kernels so that single operations and full runs share one code path.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import Circle, Configuration, Rectangle, Region, Square, Triangle
from .errors import NotEnoughDisks, ScatterFailed

log = logging.getLogger(__name__)

POLYGON, CIRCLE = 0, 1

# Rejection-sampling attempts per disk when scattering the initial state.
SCATTER_TRIES = 20000


@dataclass
class Phase1Params:
    s0: float = 0.25
    q: float = 0.43
    epsilon: float = 1e-10
    tolerance: int = 1000
    alpha: float = 1.0
    init_box_side: float | None = None  # default 4 * sqrt(n)
    max_sweeps: int = 5_000_000

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if not 0 < self.epsilon < self.s0:
            raise ValueError("need 0 < epsilon < s0")
        if self.tolerance < 1:
            raise ValueError("tolerance must be at least 1")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")

    def box_side(self, n: int) -> float:
        return self.init_box_side if self.init_box_side is not None else 4.0 * math.sqrt(n)


@dataclass
class Obstacle:
    kind: str  # "disk" | "boundary"
    point: np.ndarray
    d: float


# --- region <-> kernel arrays -------------------------------------------------
#
# A polygonal region of size t is {p : (normal_k . p + r) / base_k <= t}; a
# circle of size t is {p : |p| + r <= t}. Containment checks and refitting use
# the very same expression, so a refitted region never grows.


def _kernel_region(region: Region) -> tuple[int, np.ndarray, np.ndarray, float]:
    if isinstance(region, Circle):
        return CIRCLE, np.zeros((0, 2)), np.zeros(0), region.radius
    if isinstance(region, Square):
        return POLYGON, region.normals(), np.full(4, 0.5), region.side
    if isinstance(region, Rectangle):
        aspect = region.height / region.width
        return POLYGON, region.normals(), np.array([aspect / 2, 0.5, aspect / 2, 0.5]), region.width
    if isinstance(region, Triangle):
        return POLYGON, region.normals(), np.full(3, 1 / (2 * math.sqrt(3))), region.side
    raise TypeError(f"unsupported region {region!r}")


def _region_from_size(template: Region, t: float) -> Region:
    if isinstance(template, Circle):
        return Circle(t)
    if isinstance(template, Square):
        return Square(t)
    if isinstance(template, Rectangle):
        return Rectangle(t, t * template.height / template.width)
    return Triangle(t)


@numba.njit(cache=True)
def _fits(x, y, r, shape, normals, base, t):
    if shape == CIRCLE:
        return math.hypot(x, y) + r <= t
    for k in range(normals.shape[0]):
        if (normals[k, 0] * x + normals[k, 1] * y + r) / base[k] > t:
            return False
    return True


@numba.njit(cache=True)
def _free(centers, i, x, y, r):
    lim = 4.0 * r * r
    for j in range(centers.shape[0]):
        if j == i:
            continue
        dx = x - centers[j, 0]
        dy = y - centers[j, 1]
        if dx * dx + dy * dy < lim:
            return False
    return True


@numba.njit(cache=True)
def _fit_size(centers, r, shape, normals, base):
    best = -np.inf
    for i in range(centers.shape[0]):
        x, y = centers[i, 0], centers[i, 1]
        if shape == CIRCLE:
            v = math.hypot(x, y) + r
            if v > best:
                best = v
        else:
            for k in range(normals.shape[0]):
                v = (normals[k, 0] * x + normals[k, 1] * y + r) / base[k]
                if v > best:
                    best = v
    return best


@numba.njit(cache=True)
def _reset_direction(centers, i, r, s, alpha, shape, normals, base, t, fallback):
    x, y = centers[i, 0], centers[i, 1]
    vx = 0.0
    vy = 0.0
    reach_disk = 2.0 * (r + s)
    for j in range(centers.shape[0]):
        if j == i:
            continue
        dx = x - centers[j, 0]
        dy = y - centers[j, 1]
        d1 = math.hypot(dx, dy)
        if d1 <= reach_disk and d1 > 0.0:
            # unit vector from the closest point of disk j toward center i
            w = d1 ** alpha / d1
            vx += dx * w
            vy += dy * w
    reach_wall = r + s
    if shape == CIRCLE:
        rho = math.hypot(x, y)
        d2 = t - rho
        if rho > 0.0 and d2 <= reach_wall:
            w = (2.0 * d2) ** alpha / rho
            vx -= x * w
            vy -= y * w
    else:
        for k in range(normals.shape[0]):
            # Interior perpendicular feet always land on the side itself for
            # rectangles and equilateral triangles.
            d2 = base[k] * t - (normals[k, 0] * x + normals[k, 1] * y)
            if d2 <= reach_wall:
                w = (2.0 * d2) ** alpha
                vx -= normals[k, 0] * w
                vy -= normals[k, 1] * w
    if vx == 0.0 and vy == 0.0:
        vx, vy = -x, -y
        if vx == 0.0 and vy == 0.0:
            vx, vy = fallback[i, 0], fallback[i, 1]
    return vx, vy


@numba.njit(cache=True)
def _try_move(centers, i, dx, dy, s, r, shape, normals, base, t):
    norm = math.hypot(dx, dy)
    if norm == 0.0 or not math.isfinite(norm):
        return False
    nx = centers[i, 0] + s * (dx / norm)
    ny = centers[i, 1] + s * (dy / norm)
    if _fits(nx, ny, r, shape, normals, base, t) and _free(centers, i, nx, ny, r):
        centers[i, 0] = nx
        centers[i, 1] = ny
        return True
    return False


@numba.njit(cache=True)
def _move_attempt(centers, dirs, i, s, r, alpha, shape, normals, base, t, fallback):
    if _try_move(centers, i, dirs[i, 0], dirs[i, 1], s, r, shape, normals, base, t):
        return True
    vx, vy = _reset_direction(centers, i, r, s, alpha, shape, normals, base, t, fallback)
    dirs[i, 0] = vx
    dirs[i, 1] = vy
    return _try_move(centers, i, vx, vy, s, r, shape, normals, base, t)


@numba.njit(cache=True)
def _sweep(centers, dirs, order, s, r, alpha, shape, normals, base, t, fallback):
    successes = 0
    for idx in range(order.shape[0]):
        if _move_attempt(centers, dirs, order[idx], s, r, alpha, shape, normals, base, t, fallback):
            successes += 1
    return successes


@numba.njit(cache=True)
def _run_level(centers, dirs, order, s, r, alpha, shape, normals, base, t,
               fallback, impatience, tolerance, max_sweeps):
    """Sweep at a fixed step until the step must shrink or the sweep budget ends.

    Returns (sweeps done, final size, impatience, successes of the last sweep).
    """
    sweeps = 0
    successes = -1
    while sweeps < max_sweeps:
        successes = _sweep(centers, dirs, order, s, r, alpha, shape, normals, base, t, fallback)
        sweeps += 1
        new_t = _fit_size(centers, r, shape, normals, base)
        if not new_t < t:
            impatience += 1
        t = new_t
        if impatience > tolerance or successes == 0:
            break
    return sweeps, t, impatience, successes


@dataclass
class Phase1State:
    config: Configuration
    directions: np.ndarray
    params: Phase1Params
    rng: np.random.Generator
    sweep_order: np.ndarray
    fallback: np.ndarray
    level: int = 0
    impatience: int = 0
    prev_size: float = math.inf
    sweeps: int = 0
    seed: int | None = None
    converged: bool = False
    history: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def s(self) -> float:
        """Current move step; always exactly ``s0 * q**level``."""
        return self.params.s0 * self.params.q ** self.level

    @property
    def prev_side(self) -> float:
        return self.prev_size

    @property
    def n(self) -> int:
        return self.config.n

    def _kernel_args(self):
        shape, normals, base, t = _kernel_region(self.config.region)
        return shape, normals, base, t

    def _new_order(self) -> None:
        self.sweep_order = self.rng.permutation(self.n).astype(np.int64)
        theta = self.rng.uniform(0.0, 2 * math.pi, self.n)
        self.fallback = np.column_stack([np.cos(theta), np.sin(theta)])


def scatter(n: int, box_side: float, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    """Non-overlapping random disk centers in an origin-centered square."""
    half = box_side / 2 - radius
    if half < 0:
        raise ScatterFailed(f"box side {box_side} cannot hold a disk of radius {radius}")
    centers = np.empty((n, 2))
    lim = (2 * radius) ** 2
    for i in range(n):
        for _ in range(SCATTER_TRIES):
            p = rng.uniform(-half, half, 2)
            if i == 0 or (((centers[:i] - p) ** 2).sum(axis=1) >= lim).all():
                centers[i] = p
                break
        else:
            raise ScatterFailed(f"could not place disk {i + 1} of {n} in a box of side {box_side}")
    return centers


def initialize(n: int, params: Phase1Params | None = None, seed: int = 0,
               shape: Region | str = "square") -> Phase1State:
    """Scatter ``n`` unit disks, aim each at the origin and fit the container around them."""
    if n < 1:
        raise NotEnoughDisks("need at least one disk")
    params = params or Phase1Params()
    rng = np.random.default_rng(seed)
    centers = scatter(n, params.box_side(n), rng)
    template = _shape_template(shape)
    region = template.fit(centers, 1.0)
    state = Phase1State(
        config=Configuration(centers, 1.0, region),
        directions=-centers,
        params=params,
        rng=rng,
        sweep_order=np.arange(n),
        fallback=np.zeros((n, 2)),
        seed=seed,
    )
    state._new_order()
    # Refit through the kernel expression so later comparisons are exact.
    _, normals, base, _ = _kernel_region(region)
    kind = CIRCLE if isinstance(region, Circle) else POLYGON
    state.prev_size = _fit_size(state.config.centers, 1.0, kind, normals, base)
    state.config.region = _region_from_size(region, state.prev_size)
    return state


def _shape_template(shape: Region | str) -> Region:
    if isinstance(shape, Region):
        return shape
    return {"square": Square(1.0), "circle": Circle(1.0), "triangle": Triangle(1.0),
            "rectangle": Rectangle(1.0, 1.0)}[shape]


def obstacles(state: Phase1State, i: int) -> list[Obstacle]:
    """Repelling obstacles disk ``i`` can reach with one straight move of length ``s``."""
    c = state.config.centers
    r, s = state.config.radius, state.s
    out = []
    for j in range(state.n):
        if j == i:
            continue
        d1 = float(np.hypot(*(c[i] - c[j])))
        if 0 < d1 <= 2 * (r + s):
            out.append(Obstacle("disk", c[j] + r * (c[i] - c[j]) / d1, d1))
    for ob in state.config.region.boundary_obstacles(c[i], r + s):
        out.append(Obstacle("boundary", ob.point, ob.distance))
    return out


def reset_direction(state: Phase1State, i: int) -> np.ndarray:
    """Sum of repelling vectors acting on disk ``i`` (not stored)."""
    shape, normals, base, t = state._kernel_args()
    vx, vy = _reset_direction(state.config.centers, i, state.config.radius, state.s,
                              state.params.alpha, shape, normals, base, t, state.fallback)
    return np.array([vx, vy])


def move_attempt(state: Phase1State, i: int) -> bool:
    shape, normals, base, t = state._kernel_args()
    return bool(_move_attempt(state.config.centers, state.directions, i, state.s,
                              state.config.radius, state.params.alpha, shape, normals,
                              base, t, state.fallback))


def _refit(state: Phase1State) -> None:
    shape, normals, base, _ = state._kernel_args()
    new_t = _fit_size(state.config.centers, state.config.radius, shape, normals, base)
    if not new_t < state.prev_size:
        state.impatience += 1
    state.prev_size = new_t
    state.config.region = _region_from_size(state.config.region, new_t)


def sweep(state: Phase1State) -> int:
    """One pass of move attempts in ``sweep_order`` followed by a container refit."""
    shape, normals, base, t = state._kernel_args()
    successes = _sweep(state.config.centers, state.directions, state.sweep_order, state.s,
                       state.config.radius, state.params.alpha, shape, normals, base, t,
                       state.fallback)
    state.sweeps += 1
    _refit(state)
    return int(successes)


def shrink_step(state: Phase1State) -> None:
    state.level += 1
    state.impatience = 0
    state._new_order()


@dataclass
class Phase1Result:
    config: Configuration
    converged: bool
    sweeps: int
    levels: int
    history: list[tuple[int, float, float]]


def run(state: Phase1State) -> Phase1Result:
    """Run the compaction to termination.

    ``history`` holds one ``(sweeps, elapsed seconds, region size)`` entry per
    finished step level.
    """
    p = state.params
    start = time.perf_counter()
    while state.s > p.epsilon:
        budget = p.max_sweeps - state.sweeps
        if budget <= 0:
            break
        shape, normals, base, t = state._kernel_args()
        done, t, impatience, successes = _run_level(
            state.config.centers, state.directions, state.sweep_order, state.s,
            state.config.radius, p.alpha, shape, normals, base, t, state.fallback,
            state.impatience, p.tolerance, budget)
        state.sweeps += done
        state.impatience = impatience
        state.prev_size = t
        state.config.region = _region_from_size(state.config.region, t)
        state.history.append((state.sweeps, time.perf_counter() - start, t))
        if impatience > p.tolerance or successes == 0:
            shrink_step(state)
    state.converged = state.s <= p.epsilon
    if not state.converged:
        log.warning("phase 1 hit max_sweeps=%d at step %.3e", p.max_sweeps, state.s)
    return Phase1Result(state.config.copy(), state.converged, state.sweeps, state.level,
                        list(state.history))


def compact(n: int, params: Phase1Params | None = None, seed: int = 0,
            shape: Region | str = "square") -> Phase1Result:
    return run(initialize(n, params, seed, shape))
