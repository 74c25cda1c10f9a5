"""Budget schedule, seasonality, valuation, plant spend and pacing control."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

U_MIN = 1e-4
U_MAX = 1e4

# (t_end hours, daily budget); the last segment runs to the horizon
DEFAULT_BREAKPOINTS = ((72.0, 135.0), (120.0, 300.0), (216.0, 80.0),
                       (288.0, 200.0), (384.0, 130.0), (408.0, 400.0))


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant daily budget on right-closed intervals (t_prev, t_end]."""

    breakpoints: tuple = DEFAULT_BREAKPOINTS
    steps_per_day: int = 720
    step_hours: float = 1.0 / 30.0
    horizon: float = 408.0

    def __post_init__(self):
        bps = tuple((float(t), float(b)) for t, b in self.breakpoints)
        if not bps:
            raise ValueError("schedule needs at least one breakpoint")
        ends = [t for t, _ in bps]
        if any(b <= a for a, b in zip(ends, ends[1:])) or ends[0] <= 0:
            raise ValueError("breakpoint end times must be positive and strictly increasing")
        if any(b < 0 for _, b in bps):
            raise ValueError("daily budgets must be >= 0")
        if ends[-1] < self.horizon:
            raise ValueError(f"breakpoints end at {ends[-1]} h, before the horizon {self.horizon} h")
        if self.steps_per_day < 1 or not self.step_hours > 0 or not self.horizon >= 0:
            raise ValueError("steps_per_day, step_hours must be positive and horizon >= 0")
        if abs(self.steps_per_day * self.step_hours - 24.0) > 1e-9:
            raise ValueError("steps_per_day * step_hours must equal 24 hours")
        object.__setattr__(self, "breakpoints", bps)

    @property
    def total_steps(self) -> int:
        return int(round(self.horizon / self.step_hours))

    def time_of(self, k: int) -> float:
        """Clock in hours at the end of step k (steps count from 1).

        Computed from whole days so day boundaries land exactly on breakpoints.
        """
        return 24.0 * k / self.steps_per_day


def budget_at(schedule: Schedule, t: float) -> float:
    if not 0 <= t <= schedule.horizon:
        raise ValueError(f"t = {t} h is outside [0, {schedule.horizon}]")
    for t_end, budget in schedule.breakpoints:
        if t <= t_end:
            return budget
    return schedule.breakpoints[-1][1]  # unreachable: constructor checks coverage


def seasonality(t_step, steps_per_day: int = 720):
    if steps_per_day <= 0:
        raise ValueError("steps_per_day must be positive")
    x = 2.0 * np.pi * np.asarray(t_step, dtype=float) / steps_per_day
    out = np.sin(x - 1.6) + 0.32 * np.sin(2.0 * x - 1.5)
    return float(out) if out.ndim == 0 else out


def estimate_value(control: float, rng: np.random.Generator | None, noise_std: float = 0.1) -> float:
    """max(0, u + N(0, noise_std^2)). ``rng=None`` means zero noise."""
    if not control > 0:
        raise ValueError("control must be positive")
    noise = 0.0 if rng is None else rng.normal(0.0, noise_std)
    return max(0.0, control + noise)


def plant_spend(bid: float, won: int, t_step: int, steps_per_day: int,
                rng: np.random.Generator | None, noise_std: float = 0.1) -> float:
    """(1 + h(t)) * bid * won * (1 + w), floored at zero.

    The noise draw happens whether or not the auction was won so the plant
    stream stays aligned with the step count. ``rng=None`` means w = 0.
    """
    if not bid >= 0:
        raise ValueError("bid must be >= 0")
    w = 0.0 if rng is None else rng.normal(0.0, noise_std)
    w = max(w, -1.0)
    spend = (1.0 + seasonality(t_step, steps_per_day)) * bid * won * (1.0 + w)
    return max(0.0, spend)


@dataclass(frozen=True)
class CampaignState:
    control: float = 1.0
    clock: int = 0
    cumulative_spend: float = 0.0
    cumulative_target: float = 0.0
    spend_ema: float = 0.0

    def __post_init__(self):
        if not U_MIN <= self.control <= U_MAX:
            raise ValueError(f"control must lie in [{U_MIN}, {U_MAX}]")


def pace_control(state: CampaignState, observed_spend: float, setpoint: float,
                 gain: float = 0.1, ema_alpha: float = 0.01) -> CampaignState:
    """Multiplicative integral pacing on an EMA of per-step spend."""
    if not setpoint > 0:
        raise ValueError("setpoint must be positive")
    ema = (1.0 - ema_alpha) * state.spend_ema + ema_alpha * observed_spend
    u = state.control * math.exp(gain * (setpoint - ema) / setpoint)
    u = min(max(u, U_MIN), U_MAX)
    return replace(
        state,
        control=u,
        clock=state.clock + 1,
        cumulative_spend=state.cumulative_spend + observed_spend,
        cumulative_target=state.cumulative_target + setpoint,
        spend_ema=ema,
    )
