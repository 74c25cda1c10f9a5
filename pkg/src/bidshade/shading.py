"""Parametric bid shading and the unshaded bid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

THETA2_SWITCH = 1e-9


@dataclass
class BidRequest:
    unshaded_bid: float
    attributes: np.ndarray = field(default_factory=lambda: np.zeros(5))

    def __post_init__(self):
        if not self.unshaded_bid >= 0:
            raise ValueError(f"unshaded bid must be >= 0, got {self.unshaded_bid}")
        self.attributes = np.asarray(self.attributes, dtype=float)


def _check_theta(theta1, theta2):
    if not 0.0 <= theta1 <= 1.0:
        raise ValueError(f"theta1 must lie in [0, 1], got {theta1}")
    if not theta2 >= 0.0:
        raise ValueError(f"theta2 must be >= 0, got {theta2}")


def shade_bid(theta1: float, theta2: float, request: BidRequest | float) -> float:
    """log(1 + theta1 theta2 b_u) / theta2, or theta1 b_u as theta2 -> 0."""
    b_u = request.unshaded_bid if isinstance(request, BidRequest) else float(request)
    _check_theta(theta1, theta2)
    if not b_u >= 0:
        raise ValueError(f"unshaded bid must be >= 0, got {b_u}")
    if theta2 <= THETA2_SWITCH:
        return theta1 * b_u
    return math.log1p(theta1 * theta2 * b_u) / theta2


def shade_bids(theta1, theta2, unshaded_bid: float) -> np.ndarray:
    """Vectorized :func:`shade_bid` over arrays of parameters."""
    t1 = np.asarray(theta1, dtype=float)
    t2 = np.asarray(theta2, dtype=float)
    if ((t1 < 0) | (t1 > 1)).any() or (t2 < 0).any():
        raise ValueError("theta1 must lie in [0, 1] and theta2 must be >= 0")
    if not unshaded_bid >= 0:
        raise ValueError(f"unshaded bid must be >= 0, got {unshaded_bid}")
    linear = t1 * unshaded_bid
    curved = t2 > THETA2_SWITCH
    out = linear.copy()
    out[curved] = np.log1p(t1[curved] * t2[curved] * unshaded_bid) / t2[curved]
    return out


def unshaded_bid(control: float, estimated_value: float) -> float:
    if not control > 0:
        raise ValueError(f"control signal must be positive, got {control}")
    if not estimated_value >= 0:
        raise ValueError(f"estimated value must be >= 0, got {estimated_value}")
    return control * estimated_value
