"""Bid shading via entropy-regularized Wasserstein-proximal updates, with a
closed-loop first-price auction campaign simulator."""

from .config import RunConfig, load_config
from .energy import EnergyContext, energy_value, r_vector, realized_surplus
from .grid import ParameterGrid, build_grid, sample_parameters, uniform_distribution
from .shading import BidRequest, shade_bid, unshaded_bid
from .sim import observe, run_campaign, true_win_prob
from .winmodel import Observation, WinModel, batch_refit, predict_win, update_model
from .wprox import ProximalConfig, dual_residual, entropic_distance, oracle_minimize, proximal_update

__version__ = "0.1.0"
