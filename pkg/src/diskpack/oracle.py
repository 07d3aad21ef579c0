"""Ground truth for small point-dispersion instances in the unit square.

Closed-form optima for a handful of n, and a brute-force refiner that works
directly on points in ``[0, 1]^2`` and never touches the packing pipeline.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import Unsupported


@dataclass(frozen=True)
class KnownOptimum:
    n: int
    m: float
    exact: str
    source: str  # "analytic" | "brute-force"
    note: str = ""


_R2, _R6 = math.sqrt(2.0), math.sqrt(6.0)

KNOWN_OPTIMA = {
    2: KnownOptimum(2, _R2, "sqrt(2)", "analytic"),
    3: KnownOptimum(3, _R6 - _R2, "sqrt(6) - sqrt(2)", "analytic"),
    4: KnownOptimum(4, 1.0, "1", "analytic"),
    5: KnownOptimum(5, _R2 / 2, "sqrt(2)/2", "analytic"),
    9: KnownOptimum(9, 0.5, "1/2", "analytic"),
    # Square grids: optimality is proven elsewhere; treat as lower bounds only.
    16: KnownOptimum(16, 1 / 3, "1/3", "analytic", "grid; lower bound"),
    25: KnownOptimum(25, 0.25, "1/4", "analytic", "grid; lower bound"),
    36: KnownOptimum(36, 0.2, "1/5", "analytic", "grid; lower bound"),
}


def analytic_optimum(n: int) -> float:
    try:
        return KNOWN_OPTIMA[n].m
    except KeyError:
        raise Unsupported(f"no closed-form optimum recorded for n={n}") from None


def min_distance(points: np.ndarray) -> float:
    d = points[:, None, :] - points[None, :, :]
    dist = np.hypot(d[..., 0], d[..., 1])
    iu = np.triu_indices(len(points), 1)
    return float(dist[iu].min())


def _sorted_distances(points):
    d = points[:, None, :] - points[None, :, :]
    iu = np.triu_indices(len(points), 1)
    return np.sort(np.hypot(d[..., 0], d[..., 1])[iu])


def _better(a: np.ndarray, b: np.ndarray, tol: float = 1e-15) -> bool:
    """Lexicographic comparison of sorted distance vectors."""
    diff = a - b
    k = np.flatnonzero(np.abs(diff) > tol)
    return bool(len(k) and diff[k[0]] > 0)


_MOVES = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], float)


def coordinate_ascent(points: np.ndarray, step: float, iters: int, min_step: float = 1e-9) -> np.ndarray:
    """Single-point pattern moves that improve the sorted distance vector, with step halving."""
    p = points.copy()
    best = _sorted_distances(p)
    for _ in range(iters):
        improved = False
        for i in range(len(p)):
            for mv in _MOVES:
                q = p.copy()
                q[i] = np.clip(q[i] + step * mv, 0.0, 1.0)
                cand = _sorted_distances(q)
                if _better(cand, best):
                    p, best, improved = q, cand, True
                    break
        if not improved:
            step /= 2
            if step < min_step:
                break
    return p


def _slsqp(points: np.ndarray) -> np.ndarray:
    """Maximize t subject to |p_i - p_j| >= t inside the unit square."""
    n = len(points)
    iu, ju = np.triu_indices(n, 1)
    x0 = np.append(points.ravel(), min_distance(points))

    def cons(x):
        p = x[:-1].reshape(n, 2)
        d = p[iu] - p[ju]
        return (d ** 2).sum(axis=1) - x[-1] ** 2

    def cons_jac(x):
        p = x[:-1].reshape(n, 2)
        d = p[iu] - p[ju]
        jac = np.zeros((len(iu), 2 * n + 1))
        rows = np.arange(len(iu))
        jac[rows, 2 * iu] = 2 * d[:, 0]
        jac[rows, 2 * iu + 1] = 2 * d[:, 1]
        jac[rows, 2 * ju] = -2 * d[:, 0]
        jac[rows, 2 * ju + 1] = -2 * d[:, 1]
        jac[:, -1] = -2 * x[-1]
        return jac

    grad = np.zeros(2 * n + 1)
    grad[-1] = -1.0
    res = minimize(lambda x: -x[-1], x0, jac=lambda x: grad, method="SLSQP",
                   bounds=[(0.0, 1.0)] * (2 * n) + [(0.0, 2.0)],
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"ftol": 1e-16, "maxiter": 500})
    return np.clip(res.x[:-1].reshape(n, 2), 0.0, 1.0)


def starting_points(n: int, grid_resolution: int) -> list[np.ndarray]:
    """Structured starts: grid fillings, corner templates, edge templates, lattice subsets."""
    starts = []
    lattice = np.linspace(0.0, 1.0, grid_resolution)
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], float)
    for k in sorted({math.ceil(math.sqrt(n)), math.ceil(math.sqrt(n)) + 1, 2}):
        ax = np.linspace(0.0, 1.0, k)
        grid = np.array([[x, y] for y in ax for x in ax])
        if len(grid) < n:
            continue
        starts.append(grid[:n])
        snake = np.array([[ax[i] if r % 2 == 0 else ax[k - 1 - i], ax[r]] for r in range(k) for i in range(k)])
        starts.append(snake[:n])
        # corners first, then the rest of the grid
        rest = [g for g in grid if not any(np.allclose(g, c) for c in corners)]
        starts.append(np.vstack([corners, *rest])[:n])
    # points spread along the boundary
    t = np.arange(n) / n
    starts.append(np.array([_perimeter_point(s) for s in t]))
    # deterministic subsets of the resolution lattice
    rng = np.random.default_rng(grid_resolution * 1000 + n)
    cells = np.array(list(itertools.product(lattice, lattice)))
    for _ in range(2 * grid_resolution):
        starts.append(cells[rng.choice(len(cells), n, replace=False)])
    return starts


def _perimeter_point(s: float) -> tuple[float, float]:
    u = 4 * s
    side, f = int(u), u - int(u)
    return [(f, 0.0), (1.0, f), (1 - f, 1.0), (0.0, 1 - f)][side]


@dataclass
class BruteForceResult:
    m: float
    points: np.ndarray
    starts: int


def brute_force_refine(n: int, grid_resolution: int = 16, local_iters: int = 200) -> BruteForceResult:
    """Best dispersion found from structured starts: a valid lower bound on the optimum."""
    if not 2 <= n <= 8:
        raise ValueError("brute force is limited to 2 <= n <= 8")
    if not 2 <= grid_resolution <= 32:
        raise ValueError("grid_resolution must lie in [2, 32]")
    best_m, best_pts = -1.0, None
    starts = starting_points(n, grid_resolution)
    for p0 in starts:
        p = coordinate_ascent(p0, 1.0 / grid_resolution, local_iters)
        for cand in (p, _slsqp(p)):
            m = min_distance(cand)
            # ties broken lexicographically on the coordinates for determinism
            if m > best_m + 1e-15 or (abs(m - best_m) <= 1e-15 and tuple(cand.ravel()) < tuple(best_pts.ravel())):
                best_m, best_pts = m, cand
    return BruteForceResult(best_m, best_pts, len(starts))
