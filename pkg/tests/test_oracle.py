import math

import numpy as np
import pytest

from diskpack.core import from_unit_square_points, is_valid, m_from_side
from diskpack.errors import Unsupported
from diskpack.oracle import KNOWN_OPTIMA, analytic_optimum, brute_force_refine, min_distance


def test_closed_forms():
    assert analytic_optimum(4) == 1
    assert analytic_optimum(9) == 0.5
    assert analytic_optimum(2) == pytest.approx(1.4142135623730951, abs=1e-15)
    assert analytic_optimum(3) == pytest.approx(1.0352761804100830, abs=1e-15)
    assert analytic_optimum(5) == pytest.approx(0.7071067811865476, abs=1e-15)
    for k, n in ((3, 16), (4, 25), (5, 36)):
        assert analytic_optimum(n) == pytest.approx(1 / k, abs=1e-15)
        assert "lower bound" in KNOWN_OPTIMA[n].note


def test_unsupported():
    with pytest.raises(Unsupported):
        analytic_optimum(7)


def test_input_limits():
    with pytest.raises(ValueError):
        brute_force_refine(9)
    with pytest.raises(ValueError):
        brute_force_refine(4, grid_resolution=64)


def test_four_from_grid():
    out = brute_force_refine(4, grid_resolution=8)
    assert out.m == pytest.approx(1, abs=1e-12)


def test_two():
    assert brute_force_refine(2, grid_resolution=8).m >= math.sqrt(2) - 1e-9


def test_five():
    assert brute_force_refine(5, grid_resolution=16).m >= math.sqrt(2) / 2 - 1e-7


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_agrees_with_closed_form(n):
    # the oracle is a lower bound that also reaches each classical optimum
    m = brute_force_refine(n, grid_resolution=16).m
    assert m <= analytic_optimum(n) + 1e-9
    assert m >= analytic_optimum(n) - 1e-9


@pytest.mark.parametrize("n", [6, 7, 8])
def test_configurations_valid(n):
    out = brute_force_refine(n, grid_resolution=8)
    assert out.points.shape == (n, 2)
    assert np.all((out.points >= 0) & (out.points <= 1))
    assert min_distance(out.points) == out.m
    cfg = from_unit_square_points(out.points)
    assert is_valid(cfg)
    assert m_from_side(cfg.region.side, 1.0) == pytest.approx(out.m, rel=1e-12)


def test_deterministic():
    a, b = brute_force_refine(5, 8), brute_force_refine(5, 8)
    assert np.array_equal(a.points, b.points)
