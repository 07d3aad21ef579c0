import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diskpack.billiards import BilliardsParams, billiards_compress
from diskpack.core import Configuration, Square, dispersion, grid_configuration, is_valid
from diskpack.errors import PolishFailed
from diskpack.oracle import analytic_optimum
from diskpack.phase1 import compact
from diskpack.phase2 import (
    PolishProblem,
    identify_bonds,
    polish_bonds,
    refine,
    rigidity_perturbation_check,
)

CORNERS = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], float)


def shrunk(config, factor):
    """Same centers scaled toward the origin, radius scaled so disks no longer touch."""
    return Configuration(config.centers * factor, config.radius * factor * 0.9, config.region)


class TestBilliards:
    def test_single_disk_fills_square(self):
        cfg = Configuration(np.array([[0.3, -0.2]]), 0.5, Square(4))
        out = billiards_compress(cfg, seed=1)
        assert out.jammed
        assert out.diameter == pytest.approx(4, abs=1e-9)

    def test_four_disks_jam_at_corners(self):
        cfg = shrunk(Configuration(CORNERS, 1.0, Square(4)), 0.8)
        out = billiards_compress(cfg, seed=2)
        assert out.diameter == pytest.approx(2, abs=1e-9)
        assert dispersion(out.config) == pytest.approx(analytic_optimum(4), abs=1e-9)

    def test_two_disks_diagonal(self):
        side = 2 + math.sqrt(2)
        cfg = Configuration(np.array([[0.5, 0.1], [-0.4, -0.6]]), 0.6, Square(side))
        out = billiards_compress(cfg, seed=3)
        dist = np.hypot(*(out.config.centers[0] - out.config.centers[1]))
        assert out.diameter == pytest.approx(2, abs=1e-9)
        assert dist == pytest.approx(2, abs=1e-9)

    def test_event_cap_flags_not_jammed(self):
        cfg = shrunk(Configuration(CORNERS, 1.0, Square(4)), 0.8)
        out = billiards_compress(cfg, BilliardsParams(max_events=10), seed=0)
        assert out.not_jammed and out.events <= 10

    @settings(max_examples=15, deadline=None)
    @given(st.integers(2, 14), st.integers(0, 1000))
    def test_output_valid_and_never_shrinks(self, n, seed):
        p1 = compact(n, seed=seed)
        out = billiards_compress(p1.config, seed=seed)
        assert is_valid(out.config)
        assert out.diameter >= p1.config.diameter
        assert dispersion(out.config) >= dispersion(p1.config) - 1e-12

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            BilliardsParams(growth_rate=0)


class TestIdentifyBonds:
    def test_corners(self):
        g = identify_bonds(Configuration(CORNERS, 1.0, Square(4)))
        assert len(g.disk_edges) == 4 and len(g.wall_edges) == 8 and g.total == 12
        assert g.ambiguous == ()

    def test_ambiguous_pair(self):
        gap = 1e-8 * 2
        cfg = Configuration(np.array([[0, 0], [2 + gap, 0]]), 1.0, Square(100))
        g = identify_bonds(cfg)
        assert g.total == 0 and len(g.ambiguous) == 1
        assert g.ambiguous[0].gap == pytest.approx(1e-8, rel=1e-6)

    @settings(max_examples=50)
    @given(st.floats(1e-14, 1e-3), st.floats(1e-14, 1e-3), st.integers(0, 100))
    def test_monotone_in_tight(self, t1, t2, seed):
        rng = np.random.default_rng(seed)
        base = grid_configuration(3).centers + rng.uniform(-1e-6, 0, (9, 2)) * np.sign(grid_configuration(3).centers)
        cfg = Configuration(base, 1.0, Square(6))
        lo, hi = sorted((t1, t2))
        a, b = identify_bonds(cfg, lo, 1e-2), identify_bonds(cfg, hi, 1e-2)
        assert a.disk_edges <= b.disk_edges and a.wall_edges <= b.wall_edges


class TestPolish:
    def test_recovers_corners(self):
        rng = np.random.default_rng(0)
        cfg = Configuration(CORNERS + rng.uniform(-1e-3, 1e-3, (4, 2)), 1.0, Square(4))
        truth = identify_bonds(Configuration(CORNERS, 1.0, Square(4)))
        out = polish_bonds(PolishProblem.from_bonds(cfg, truth, 2.0))
        assert out.residual < 1e-24
        assert np.allclose(out.config.centers, CORNERS, atol=1e-11)

    def test_empty(self):
        cfg = Configuration(CORNERS * 1.3, 1.0, Square(8))
        out = polish_bonds(PolishProblem(cfg, [], [], 2.0))
        assert out.residual == 0 and np.array_equal(out.config.centers, cfg.centers)

    def test_infeasible(self):
        # three mutually tangent disks cannot all touch the same wall
        cfg = Configuration(np.array([[-1, -0.5], [1, -0.5], [0, 1.2]]), 1.0, Square(4))
        problem = PolishProblem(cfg, [(0, 1), (0, 2), (1, 2)], [(0, "bottom"), (1, "bottom"), (2, "bottom")], 2.0)
        with pytest.raises(PolishFailed) as info:
            polish_bonds(problem)
        assert info.value.residual > 1e-3

    def test_monotone_objective(self):
        from diskpack.phase2 import _residuals
        rng = np.random.default_rng(4)
        cfg = Configuration(CORNERS + rng.uniform(-0.05, 0.05, (4, 2)), 1.0, Square(4))
        bonds = identify_bonds(Configuration(CORNERS, 1.0, Square(4)))
        problem = PolishProblem.from_bonds(cfg, bonds, 2.0)
        fs = []
        for k in range(1, 8):
            try:
                out = polish_bonds(problem, max_iter=k, target=0.0)
            except PolishFailed as exc:
                fs.append(exc.residual)
            else:
                fs.append(out.residual)
        r0, _ = _residuals(problem, cfg.centers.ravel())
        fs.insert(0, float(r0 @ r0))
        assert all(b <= a for a, b in zip(fs, fs[1:]))


class TestRefine:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 9])
    def test_reaches_known_optima(self, n):
        best = max(refine(compact(n, seed=s).config, seed=s).m for s in range(3))
        assert best == pytest.approx(analytic_optimum(n), abs=1e-9)

    def test_composition_never_loses(self):
        for seed in range(5):
            p1 = compact(8, seed=seed)
            p2 = refine(p1.config, seed=seed)
            assert p2.m >= dispersion(p1.config) - 1e-12
            assert is_valid(p2.config)


class TestRigidity:
    def test_corners(self):
        cfg = shrunk(Configuration(CORNERS, 1.0, Square(4)), 0.9)
        rep = rigidity_perturbation_check(cfg, seed=0)
        assert rep.passed and rep.m_difference <= 1e-9

    def test_diagonal_pair(self):
        p1 = compact(2, seed=0)
        rep = rigidity_perturbation_check(p1.config, seed=0)
        assert rep.passed
        assert rep.m_original == pytest.approx(math.sqrt(2), abs=1e-9)

    def test_ten_disks(self):
        for seed in range(5):
            rep = rigidity_perturbation_check(compact(10, seed=seed).config, seed=seed)
            assert rep.passed, rep.text()

    def test_needs_square(self):
        from diskpack.core import Circle
        cfg = Configuration(np.array([[0.0, 0.0]]), 1.0, Circle(3))
        with pytest.raises(ValueError):
            rigidity_perturbation_check(cfg)
