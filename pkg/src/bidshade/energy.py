"""Expected-surplus energy over the shading grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ParameterGrid
from .shading import shade_bids
from .winmodel import WinModel, predict_win

BID_FLOOR = 1e-6


@dataclass
class EnergyContext:
    attributes: np.ndarray
    estimated_value: float
    unshaded_bid: float
    win_model: WinModel

    def __post_init__(self):
        self.attributes = np.asarray(self.attributes, dtype=float)
        if self.attributes.shape != self.win_model.w.shape:
            raise ValueError("attribute length does not match the win model")
        if not self.estimated_value >= 0 or not self.unshaded_bid >= 0:
            raise ValueError("estimated value and unshaded bid must be >= 0")


def r_vector(ctx: EnergyContext, grid: ParameterGrid) -> np.ndarray:
    """Negative expected surplus per grid point: -p_win(b_j) * (v_hat - b_j).

    The minus sign makes the proximal step move mass toward high surplus.
    Zero bids are scored at ``BID_FLOOR`` so the log-bid feature stays finite.
    """
    bids = shade_bids(grid.theta1, grid.theta2, ctx.unshaded_bid)
    p_win = predict_win(ctx.win_model, ctx.attributes, np.maximum(bids, BID_FLOOR))
    return -p_win * (ctx.estimated_value - bids)


def energy_value(dist, r) -> float:
    dist = np.asarray(dist, dtype=float)
    r = np.asarray(r, dtype=float)
    if dist.shape != r.shape:
        raise ValueError(f"dimension mismatch: {dist.shape} vs {r.shape}")
    return float(dist @ r)


def realized_surplus(value: float, cost: float, won: int) -> float:
    if value < 0 or cost < 0:
        raise ValueError("value and cost must be >= 0")
    return float(won) * (value - cost)
