import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bidshade.grid import (ParameterGrid, build_grid, format_snapshot, is_simplex,
                           parse_snapshot, sample_parameters, shannon_entropy,
                           uniform_distribution, validate_simplex)


def test_default_grid_shape_and_corners(default_grid):
    assert default_grid.size == 100
    pts = {tuple(p) for p in default_grid.points}
    assert (0.0, 0.0) in pts and (1.0, 3.0) in pts and (0.0, 3.0) in pts and (1.0, 0.0) in pts


def test_row_major_ordering(default_grid):
    # theta1 is the slow index
    assert default_grid.points[1][0] == 0.0 and default_grid.points[1][1] == pytest.approx(1 / 3)
    assert default_grid.points[10][0] == pytest.approx(1 / 9) and default_grid.points[10][1] == 0.0


def test_single_point_grid():
    g = build_grid((0, 0), (0, 0), 1, 1, 1.0)
    assert g.points.tolist() == [[0.0, 0.0]]
    assert g.cost.tolist() == [[0.0]]
    assert g.kernel.tolist() == [[1.0]]


def test_two_point_kernel_value():
    g = ParameterGrid([[0, 0], [1, 0]], 0.8)
    assert g.cost[0, 1] == 1.0
    # exp(-0.625) evaluated in 30-digit arithmetic
    assert g.kernel[0, 1] == pytest.approx(0.535261428518990241956622508022, rel=1e-15)


def test_cost_and_kernel_invariants(default_grid):
    c, k = default_grid.cost, default_grid.kernel
    assert np.array_equal(c, c.T) and np.all(np.diag(c) == 0)
    assert np.array_equal(k, k.T) and np.all(np.diag(k) == 1)
    assert np.all(k > 0) and np.all(k <= 1)
    i, j = 17, 83
    d = default_grid.points[i] - default_grid.points[j]
    assert c[i, j] == pytest.approx(d @ d, rel=1e-15)


def test_grid_is_read_only(default_grid):
    with pytest.raises(ValueError):
        default_grid.kernel[0, 0] = 2.0


@pytest.mark.parametrize("kwargs, match", [
    (dict(epsilon=0.0), "epsilon"),
    (dict(epsilon=-1.0), "epsilon"),
    (dict(theta1_range=(1, 0)), "inverted"),
    (dict(n1=0), "n1"),
])
def test_build_grid_rejects(kwargs, match):
    args = dict(theta1_range=(0, 1), theta2_range=(0, 3), n1=3, n2=3, epsilon=0.8)
    args.update(kwargs)
    with pytest.raises(ValueError, match=match):
        build_grid(**args)


def test_duplicate_points_rejected():
    with pytest.raises(ValueError, match="distinct"):
        ParameterGrid([[0, 0], [0, 0]], 1.0)


@settings(max_examples=40, deadline=None)
@given(n1=st.integers(1, 6), n2=st.integers(1, 6), eps=st.floats(0.05, 5.0))
def test_kernel_matches_cost(n1, n2, eps):
    g = build_grid((0, 1), (0, 3), n1, n2, eps)
    assert np.allclose(g.kernel, np.exp(-g.cost / (2 * eps)), rtol=0, atol=0)


@pytest.mark.parametrize("n, expected", [(100, 0.01), (1, 1.0), (4, 0.25)])
def test_uniform_distribution(n, expected):
    g = build_grid((0, 1), (0, 0 if n == 1 else 1), n if n < 100 else 10, 1 if n < 100 else 10, 1.0)
    mu = uniform_distribution(g)
    assert mu.size == n and np.all(mu == expected)
    validate_simplex(mu)


def test_validate_simplex():
    validate_simplex([0.5, 0.5])
    with pytest.raises(ValueError, match="negative"):
        validate_simplex([1.5, -0.5])
    with pytest.raises(ValueError, match="sums"):
        validate_simplex([0.5, 0.5 + 2e-12])
    assert is_simplex([0.5, 0.5 + 5e-13])


def test_sample_delta(rng, default_grid):
    mu = np.zeros(100)
    mu[7] = 1.0
    for _ in range(50):
        t1, t2, idx = sample_parameters(mu, default_grid, rng)
        assert idx == 7 and (t1, t2) == tuple(default_grid.points[7])


def test_sample_single_point(rng):
    g = build_grid((0, 0), (0, 0), 1, 1, 1.0)
    assert all(sample_parameters([1.0], g, rng)[2] == 0 for _ in range(10))


def test_sample_all_zero_rejected(rng, default_grid):
    with pytest.raises(ValueError, match="all-zero"):
        sample_parameters(np.zeros(100), default_grid, rng)


def test_sample_frequencies_two_points():
    g = ParameterGrid([[0, 0], [1, 0]], 0.8)
    rng = np.random.default_rng(2024)
    m = 100_000
    hits = sum(sample_parameters([0.5, 0.5], g, rng)[2] for _ in range(m))
    assert abs(hits / m - 0.5) <= 0.01


def test_sample_frequencies_within_four_sigma(default_grid):
    rng = np.random.default_rng(99)
    p = rng.dirichlet(np.ones(100))
    m = 50_000
    counts = np.bincount([sample_parameters(p, default_grid, rng)[2] for _ in range(m)],
                         minlength=100)
    band = 4 * np.sqrt(p * (1 - p) / m)
    assert np.all(np.abs(counts / m - p) <= band)


def test_sampling_is_deterministic(default_grid):
    mu = uniform_distribution(default_grid)
    a = [sample_parameters(mu, default_grid, np.random.default_rng(5))[2] for _ in range(3)]
    b = [sample_parameters(mu, default_grid, np.random.default_rng(5))[2] for _ in range(3)]
    assert a == b


def test_entropy():
    assert shannon_entropy([1.0, 0.0]) == 0.0
    assert shannon_entropy(np.full(100, 0.01)) == pytest.approx(math.log(100), rel=1e-14)


def test_snapshot_round_trip(default_grid, rng):
    mu = rng.dirichlet(np.ones(100))
    text = format_snapshot(mu, default_grid)
    assert text.splitlines()[0] == "index,theta1,theta2,weight"
    points, weights = parse_snapshot(text)
    assert np.array_equal(points, default_grid.points)
    assert np.array_equal(weights, mu)


def test_snapshot_rejects_truncated(default_grid):
    text = format_snapshot(uniform_distribution(default_grid), default_grid)
    broken = "\n".join(text.splitlines()[:5] + ["7,0.1,0.2,0.01"])
    with pytest.raises(ValueError):
        parse_snapshot(broken)
