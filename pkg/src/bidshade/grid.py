"""Discrete shading-parameter grid, simplex vectors and snapshot I/O."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ParameterGrid:
    """N points (theta1, theta2) with the squared-distance cost and Gibbs kernel.

    ``kernel = exp(-cost / (2 * epsilon))``. Arrays are made read-only so the
    grid can be shared between runs.
    """

    points: np.ndarray
    epsilon: float
    cost: np.ndarray = field(init=False, repr=False)
    kernel: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError("points must be an (N, 2) array with N >= 1")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("grid points must be pairwise distinct")
        diff = pts[:, None, :] - pts[None, :, :]
        cost = np.einsum("ijk,ijk->ij", diff, diff)
        kernel = np.exp(-cost / (2.0 * self.epsilon))
        for arr in (pts, cost, kernel):
            arr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "kernel", kernel)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def theta1(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def theta2(self) -> np.ndarray:
        return self.points[:, 1]


def _check_interval(name, interval):
    lo, hi = (float(v) for v in interval)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError(f"{name} bounds must be finite")
    if lo > hi:
        raise ValueError(f"{name} is inverted: lower {lo} > upper {hi}")
    return lo, hi


def build_grid(theta1_range, theta2_range, n1: int, n2: int, epsilon: float) -> ParameterGrid:
    """Uniform n1 x n2 grid over the closed rectangle, endpoints included.

    Ordering is row-major with theta1 as the slow index: point ``i * n2 + j``
    is ``(theta1[i], theta2[j])``.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("n1 and n2 must be >= 1")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    lo1, hi1 = _check_interval("theta1_range", theta1_range)
    lo2, hi2 = _check_interval("theta2_range", theta2_range)
    if (n1 > 1 and lo1 == hi1) or (n2 > 1 and lo2 == hi2):
        raise ValueError("a degenerate interval admits only one grid point")
    t1 = np.linspace(lo1, hi1, n1)
    t2 = np.linspace(lo2, hi2, n2)
    a, b = np.meshgrid(t1, t2, indexing="ij")
    return ParameterGrid(np.column_stack([a.ravel(), b.ravel()]), epsilon)


def validate_simplex(weights, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Return ``weights`` as a float array, raising if it is not a probability vector."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("a distribution must be a non-empty 1-d vector")
    if not np.isfinite(w).all():
        raise ValueError("distribution has non-finite entries")
    if (w < 0).any():
        raise ValueError(f"distribution has a negative entry (min {w.min():.3e})")
    err = abs(w.sum() - 1.0)
    if err > tol:
        raise ValueError(f"distribution sums to 1 {'+' if w.sum() > 1 else '-'} {err:.3e}")
    return w


def is_simplex(weights, tol: float = SIMPLEX_TOL) -> bool:
    try:
        validate_simplex(weights, tol)
    except ValueError:
        return False
    return True


def uniform_distribution(grid: ParameterGrid) -> np.ndarray:
    return np.full(grid.size, 1.0 / grid.size)


def sample_parameters(dist, grid: ParameterGrid, rng: np.random.Generator):
    """Draw one grid point with probability ``dist[j]``; returns (theta1, theta2, index)."""
    w = np.asarray(dist, dtype=float)
    if w.shape != (grid.size,):
        raise ValueError(f"distribution length {w.shape} does not match grid size {grid.size}")
    total = w.sum()
    if not total > 0:
        raise ValueError("cannot sample from an all-zero weight vector")
    # inverse-CDF on one uniform keeps the draw count per step fixed
    cdf = np.cumsum(w)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    idx = min(idx, grid.size - 1)
    while w[idx] <= 0:  # landed on a zero-mass tail entry through rounding
        idx -= 1
    return float(grid.points[idx, 0]), float(grid.points[idx, 1]), idx


def shannon_entropy(dist) -> float:
    """Entropy in nats with 0 log 0 = 0."""
    w = np.asarray(dist, dtype=float)
    nz = w[w > 0]
    return float(-(nz * np.log(nz)).sum())


SNAPSHOT_HEADER = ("index", "theta1", "theta2", "weight")


def format_snapshot(dist, grid: ParameterGrid) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SNAPSHOT_HEADER)
    for j, ((t1, t2), w) in enumerate(zip(grid.points, dist)):
        writer.writerow([j, repr(float(t1)), repr(float(t2)), repr(float(w))])
    return buf.getvalue()


def parse_snapshot(text: str):
    """Inverse of :func:`format_snapshot`; returns (points, weights)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != SNAPSHOT_HEADER:
        raise ValueError("snapshot header mismatch")
    body = rows[1:]
    if not body:
        raise ValueError("snapshot has no rows")
    for n, row in enumerate(body):
        if len(row) != 4 or int(row[0]) != n:
            raise ValueError(f"malformed snapshot row {n + 2}")
    points = np.array([[float(r[1]), float(r[2])] for r in body])
    weights = np.array([float(r[3]) for r in body])
    return points, weights
