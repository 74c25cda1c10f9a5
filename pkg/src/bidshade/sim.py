"""Market oracle and the closed-loop campaign run."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import campaign as cp
from .config import RunConfig
from .energy import BID_FLOOR, EnergyContext, energy_value, r_vector, realized_surplus
from .grid import build_grid, sample_parameters, shannon_entropy, uniform_distribution, validate_simplex
from .shading import shade_bid, unshaded_bid
from .winmodel import Observation, WinModel, predict_win, update_model
from .wprox import ProximalConfig, proximal_update

log = logging.getLogger(__name__)

STREAMS = ("attributes", "sampling", "valuation", "market", "plant")
RUN_SIMPLEX_TOL = 1e-10


class SimulationError(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        self.step = step
        super().__init__(f"step {step}: {cause}")


def true_win_prob(bid):
    """Standard normal CDF of sin(bid)."""
    bid = np.asarray(bid, dtype=float)
    if (bid < 0).any():
        raise ValueError("bid must be >= 0")
    p = ndtr(np.sin(bid))
    return float(p) if p.ndim == 0 else p


def observe(bid: float, rng: np.random.Generator | None = None, draw: float | None = None) -> int:
    """1 if a uniform draw falls below the true win probability. ``draw`` forces the uniform."""
    u = rng.random() if draw is None else draw
    return int(u < true_win_prob(bid))


def make_streams(seed: int) -> dict:
    """Independent generators per named component, all derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


@dataclass
class AuctionRecord:
    k: int
    t_hours: float
    attributes: np.ndarray
    theta1: float
    theta2: float
    index: int
    v_hat: float
    b_u: float
    bid: float
    f_hat: float
    outcome: int
    spend: float
    surplus: float
    u: float
    energy: float

    def row(self):
        return (self.k, self.t_hours, self.theta1, self.theta2, self.v_hat, self.b_u, self.bid,
                self.f_hat, self.outcome, self.spend, self.surplus, self.u, self.energy)


@dataclass
class RunResult:
    config: RunConfig
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)  # step -> weights
    model_snapshots: dict = field(default_factory=dict)  # step -> checkpoint line
    final_distribution: np.ndarray | None = None
    final_state: cp.CampaignState | None = None
    model: WinModel | None = None
    grid: object = None

    @property
    def summary(self) -> dict:
        n = len(self.records)
        return {
            "total_spend": float(sum(r.spend for r in self.records)),
            "total_surplus": float(sum(r.surplus for r in self.records)),
            "win_rate": float(np.mean([r.outcome for r in self.records])) if n else float("nan"),
            "final_entropy": shannon_entropy(self.final_distribution),
            "steps": n,
        }

    def entropies(self) -> dict:
        return {k: shannon_entropy(w) for k, w in self.snapshots.items()}


def run_campaign(config: RunConfig, on_step=None) -> RunResult:
    """Run the closed loop for ``config.total_steps`` auctions.

    Per step: sample shading parameters from the current distribution, bid,
    observe the market, update the win model, rebuild the surplus energy and
    take one proximal step; then account spend and adjust pacing.
    ``on_step(k, mu)`` is called after every distribution update.
    """
    grid = build_grid((config.theta1_min, config.theta1_max),
                      (config.theta2_min, config.theta2_max), config.n1, config.n2, config.epsilon)
    prox = ProximalConfig(config.step_size, config.epsilon)
    schedule = config.schedule()
    streams = make_streams(config.seed)
    model = WinModel.initial(config.n_attributes)
    state = cp.CampaignState(control=config.initial_control)
    mu = uniform_distribution(grid)
    attributes = streams["attributes"].uniform(0.0, 1.0, config.n_attributes)
    result = RunResult(config=config, grid=grid)
    result.snapshots[0] = mu.copy()
    result.model_snapshots[0] = model.checkpoint_line()

    for k in range(1, config.total_steps + 1):
        try:
            t = schedule.time_of(k)
            if config.redraw_attributes:
                attributes = streams["attributes"].uniform(0.0, 1.0, config.n_attributes)
            theta1, theta2, idx = sample_parameters(mu, grid, streams["sampling"])
            u = state.control
            v_hat = cp.estimate_value(u, streams["valuation"], config.value_noise)
            b_u = unshaded_bid(u, v_hat)
            bid = shade_bid(theta1, theta2, b_u)
            f_hat = predict_win(model, attributes, max(bid, BID_FLOOR))
            won = observe(bid, streams["market"])
            spend = cp.plant_spend(bid, won, k, config.steps_per_day, streams["plant"],
                                   config.plant_noise)
            surplus = realized_surplus(v_hat, bid, won)
            if bid > 0:  # a zero bid has no log-bid feature to learn from
                update_model(model, Observation(attributes, bid, won, k),
                             config.lr, config.forget, config.l2)
            r = r_vector(EnergyContext(attributes, v_hat, b_u, model), grid)
            mu = proximal_update(mu, r, grid, prox)
            validate_simplex(mu, RUN_SIMPLEX_TOL)
            setpoint = cp.budget_at(schedule, t) / config.steps_per_day
            if setpoint > 0:
                state = cp.pace_control(state, spend, setpoint, config.gain, config.ema_alpha)
            else:
                state = cp.CampaignState(u, state.clock + 1, state.cumulative_spend + spend,
                                         state.cumulative_target, state.spend_ema)
        except Exception as exc:
            raise SimulationError(k, exc) from exc
        result.records.append(AuctionRecord(
            k, t, attributes, theta1, theta2, idx, v_hat, b_u, bid, f_hat, won, spend,
            surplus, u, energy_value(mu, r)))
        if k % config.snapshot_every == 0 or k == config.total_steps:
            result.snapshots[k] = mu.copy()
            result.model_snapshots[k] = model.checkpoint_line()
        if on_step is not None:
            on_step(k, mu)
        if k % (config.steps_per_day * 4) == 0:
            log.debug("step %d: u=%.4f entropy=%.4f", k, state.control, shannon_entropy(mu))

    result.final_distribution = mu
    result.final_state = state
    result.model = model
    return result
