"""Event-driven hard-disk dynamics with uniformly growing diameters.

Disks move ballistically inside a fixed container while their common
diameter grows linearly in time. Pair and wall collisions are predicted
exactly (the contact condition is quadratic in time), kept in a heap and
processed in time order. A collision reflects the normal relative velocity
and adds the growth rate so the pair separates in the frame of the growing
surfaces. Velocities are rescaled to the initial rms speed once per event
window; the run stops once the diameter has stalled for several consecutive windows.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import OVERLAP_TOL, Circle, Configuration, Region
from .errors import SimulationInconsistency

POLYGON, CIRCLE = 0, 1

# kernel exit codes
JAMMED, EVENT_CAP, OVERLAP = 0, 1, 2


@dataclass
class BilliardsParams:
    growth_rate: float = 0.01
    initial_speed_scale: float = 1.0
    stall_rel_growth: float = 1e-13
    event_window: int | None = None  # default 50 * n
    stall_windows: int = 10  # consecutive stalled windows required to stop
    max_events: int = 20_000_000

    def __post_init__(self):
        if not self.growth_rate > 0:
            raise ValueError("growth_rate must be positive")
        if not (self.initial_speed_scale > 0 and self.stall_rel_growth > 0):
            raise ValueError("thresholds must be positive")
        if self.stall_windows < 1:
            raise ValueError("stall_windows must be at least 1")

    def window(self, n: int) -> int:
        return self.event_window if self.event_window is not None else 50 * n


@dataclass
class BilliardsResult:
    config: Configuration
    diameter: float
    events: int
    jammed: bool

    @property
    def not_jammed(self) -> bool:
        return not self.jammed


@numba.njit(cache=True)
def _pair_time(rx, ry, vx, vy, sigma, g):
    """Earliest t >= 0 with |r + v t| = sigma + g t, or inf."""
    a = vx * vx + vy * vy - g * g
    b = rx * vx + ry * vy - sigma * g
    dist = math.hypot(rx, ry)
    c = (dist - sigma) * (dist + sigma)
    if c <= 0.0 and b < 0.0:
        return 0.0
    disc = b * b - a * c
    if disc < 0.0:
        return np.inf
    sq = math.sqrt(disc)
    if b < 0.0:
        return max(c / (-b + sq), 0.0)
    if a < 0.0:
        return (b + sq) / (-a)
    return np.inf


@numba.njit(cache=True)
def _wall_time(px, py, vx, vy, sigma, g, shape, normals, offsets, k):
    if shape == CIRCLE:
        # |p + v t| = R - (sigma + g t) / 2
        big_r = offsets[0]
        h = big_r - sigma / 2
        a = vx * vx + vy * vy - g * g / 4
        b = px * vx + py * vy + h * g / 2
        dist = math.hypot(px, py)
        c = (dist - h) * (dist + h)
        if c >= 0.0 and b > 0.0:
            return 0.0
        # same algebra as the pair case with the sign of the gap flipped
        disc = b * b - a * c
        if disc < 0.0:
            return np.inf
        sq = math.sqrt(disc)
        if a > 0.0:
            return max((-b + sq) / a, 0.0)
        if b > 0.0:
            return max(-c / (b + sq), 0.0)
        return np.inf
    gap = offsets[k] - (normals[k, 0] * px + normals[k, 1] * py) - sigma / 2
    rate = normals[k, 0] * vx + normals[k, 1] * vy + g / 2
    if rate <= 0.0:
        return np.inf
    return max(gap / rate, 0.0)


@numba.njit(cache=True)
def _predict(i, pos, vel, sigma, g, shape, normals, offsets):
    best = np.inf
    partner = -(10 ** 9)
    n = pos.shape[0]
    for j in range(n):
        if j == i:
            continue
        t = _pair_time(pos[i, 0] - pos[j, 0], pos[i, 1] - pos[j, 1],
                       vel[i, 0] - vel[j, 0], vel[i, 1] - vel[j, 1], sigma, g)
        if t < best:
            best = t
            partner = j
    n_walls = 1 if shape == CIRCLE else normals.shape[0]
    for k in range(n_walls):
        t = _wall_time(pos[i, 0], pos[i, 1], vel[i, 0], vel[i, 1], sigma, g,
                       shape, normals, offsets, k)
        if t < best:
            best = t
            partner = -1 - k
    return best, partner


@numba.njit(cache=True)
def _simulate(pos, vel, sigma, g, shape, normals, offsets, v_rms, stall, window,
              stall_windows, max_events, tol):
    """Returns (diameter, events processed, exit code, worst overlap seen)."""
    n = pos.shape[0]
    ver = np.zeros(n, np.int64)
    nxt = np.full(n, -(10 ** 9), np.int64)
    events = 0
    worst = 0.0
    stalled = 0
    while True:
        # (re)build the schedule from the current state, time origin at 0
        heap = [(0.0, 0, 0, 0, 0)]
        heap.pop()
        t_now = 0.0
        sigma0 = sigma
        for i in range(n):
            ver[i] += 1
            t, p = _predict(i, pos, vel, sigma, g, shape, normals, offsets)
            nxt[i] = p
            if t < np.inf:
                heapq.heappush(heap, (t, i, p, ver[i], ver[p] if p >= 0 else 0))
        processed = 0
        while processed < window and len(heap) > 0:
            t_ev, i, p, vi, vp = heapq.heappop(heap)
            if vi != ver[i] or (p >= 0 and vp != ver[p]):
                continue
            dt = t_ev - t_now
            if dt > 0.0:
                for a in range(n):
                    pos[a, 0] += vel[a, 0] * dt
                    pos[a, 1] += vel[a, 1] * dt
                t_now = t_ev
            sigma = sigma0 + g * t_now
            if p >= 0:
                rx = pos[i, 0] - pos[p, 0]
                ry = pos[i, 1] - pos[p, 1]
                dist = math.hypot(rx, ry)
                gap = dist - sigma
                if gap < worst:
                    worst = gap
                if gap < -tol:
                    return sigma, events, OVERLAP, worst
                nx, ny = rx / dist, ry / dist
                u = (vel[i, 0] - vel[p, 0]) * nx + (vel[i, 1] - vel[p, 1]) * ny
                dv = g - u
                vel[i, 0] += dv * nx
                vel[i, 1] += dv * ny
                vel[p, 0] -= dv * nx
                vel[p, 1] -= dv * ny
                ver[p] += 1
            else:
                k = -1 - p
                if shape == CIRCLE:
                    dist = math.hypot(pos[i, 0], pos[i, 1])
                    gap = offsets[0] - dist - sigma / 2
                    nx, ny = pos[i, 0] / dist, pos[i, 1] / dist
                else:
                    nx, ny = normals[k, 0], normals[k, 1]
                    gap = offsets[k] - (nx * pos[i, 0] + ny * pos[i, 1]) - sigma / 2
                if gap < worst:
                    worst = gap
                if gap < -tol:
                    return sigma, events, OVERLAP, worst
                u = vel[i, 0] * nx + vel[i, 1] * ny
                dv = -2.0 * u - g
                vel[i, 0] += dv * nx
                vel[i, 1] += dv * ny
            ver[i] += 1
            events += 1
            processed += 1
            # re-predict the colliding disks and everyone scheduled against them
            for a in range(n):
                if a == i or a == p or nxt[a] == i or (p >= 0 and nxt[a] == p):
                    if a != i and a != p:
                        ver[a] += 1
                    t, q = _predict(a, pos, vel, sigma, g, shape, normals, offsets)
                    nxt[a] = q
                    if t < np.inf:
                        heapq.heappush(heap, (t_now + t, a, q, ver[a], ver[q] if q >= 0 else 0))
            if events >= max_events:
                return sigma, events, EVENT_CAP, worst
        if len(heap) == 0 and processed < window:
            # nothing can ever collide again (only possible for degenerate input)
            return sigma, events, JAMMED, worst
        if (sigma - sigma0) / sigma < stall:
            stalled += 1
            if stalled >= stall_windows:
                return sigma, events, JAMMED, worst
        else:
            stalled = 0
        ke = 0.0
        for a in range(n):
            ke += vel[a, 0] ** 2 + vel[a, 1] ** 2
        scale = v_rms / math.sqrt(ke / n) if ke > 0.0 else 1.0
        for a in range(n):
            vel[a, 0] *= scale
            vel[a, 1] *= scale


def _region_arrays(region: Region) -> tuple[int, np.ndarray, np.ndarray]:
    if isinstance(region, Circle):
        return CIRCLE, np.zeros((1, 2)), np.array([region.radius])
    return POLYGON, region.normals(), region.offsets()


def billiards_compress(config: Configuration, params: BilliardsParams | None = None,
                       seed: int = 0) -> BilliardsResult:
    """Grow the disks of ``config`` inside its fixed region until they jam."""
    params = params or BilliardsParams()
    rng = np.random.default_rng(seed)
    n = config.n
    vel = rng.normal(size=(n, 2))
    vel -= vel.mean(axis=0) if n > 1 else 0.0
    rms = math.sqrt((vel ** 2).sum() / n)
    if rms == 0.0:
        vel = np.ones((n, 2))
        rms = math.sqrt(2.0)
    vel *= params.initial_speed_scale / rms
    pos = config.centers.copy()
    shape, normals, offsets = _region_arrays(config.region)
    tol = OVERLAP_TOL * config.radius
    sigma, events, code, worst = _simulate(
        pos, vel, 2.0 * config.radius, params.growth_rate, shape, normals, offsets,
        params.initial_speed_scale, params.stall_rel_growth, params.window(n),
        params.stall_windows, params.max_events, tol)
    if code == OVERLAP:
        raise SimulationInconsistency(
            f"predicted contact left an overlap of {-worst:.3e} after {events} events")
    out = Configuration(pos, sigma / 2, config.region)
    return BilliardsResult(out, sigma, events, jammed=code == JAMMED)
