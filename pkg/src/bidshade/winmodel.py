"""Logistic win-probability model in (attributes, log bid), trained online."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

BETA_MIN = 1e-6
ADAM_B1 = 0.9
ADAM_B2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Observation:
    attributes: np.ndarray
    bid: float
    outcome: int
    step: int = 0

    def __post_init__(self):
        if not self.bid > 0:
            raise ValueError(f"observation bid must be > 0, got {self.bid}")
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome}")
        self.attributes = np.asarray(self.attributes, dtype=float)


@dataclass
class WinModel:
    """sigma(w0 + <w, a> + beta log b) with Adam moment state.

    Parameters are packed as ``theta = [w0, w_1..w_A, beta]`` for the optimizer.
    """

    w0: float = 0.0
    w: np.ndarray = field(default_factory=lambda: np.zeros(5))
    beta: float = 1.0
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    m_norm: float = 0.0
    v_norm: float = 0.0
    steps: int = 0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        size = self.w.size + 2
        if self.m is None:
            self.m = np.zeros(size)
        if self.v is None:
            self.v = np.zeros(size)
        if self.beta < BETA_MIN:
            raise ValueError(f"beta must be >= {BETA_MIN}")

    @classmethod
    def initial(cls, n_attributes: int = 5) -> "WinModel":
        return cls(w=np.zeros(n_attributes))

    @property
    def n_attributes(self) -> int:
        return self.w.size

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([[self.w0], self.w, [self.beta]])

    def set_params(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        self.w0 = float(theta[0])
        self.w = theta[1:-1].copy()
        self.beta = float(theta[-1])

    def logit(self, attributes, bid):
        return self.w0 + np.dot(self.w, attributes) + self.beta * np.log(bid)

    def copy(self) -> "WinModel":
        return copy.deepcopy(self)

    def checkpoint_line(self) -> str:
        """``w0,beta,w_1,...,w_A`` at full precision."""
        return ",".join(repr(float(x)) for x in [self.w0, self.beta, *self.w])

    @classmethod
    def from_checkpoint_line(cls, line: str) -> "WinModel":
        vals = [float(x) for x in line.strip().split(",")]
        if len(vals) < 2:
            raise ValueError("checkpoint line needs at least w0 and beta")
        return cls(w0=vals[0], beta=vals[1], w=np.array(vals[2:]))


def predict_win(model: WinModel, attributes, bid):
    """Win probability; accepts a scalar or an array of bids."""
    bid = np.asarray(bid, dtype=float)
    if (bid <= 0).any():
        raise ValueError("bid must be > 0 for the log-bid feature")
    attributes = np.asarray(attributes, dtype=float)
    if attributes.shape != model.w.shape:
        raise ValueError(
            f"attribute length {attributes.shape} does not match model {model.w.shape}")
    p = expit(model.logit(attributes, bid))
    return float(p) if p.ndim == 0 else p


def _design(observations):
    a = np.array([o.attributes for o in observations], dtype=float)
    logb = np.log([o.bid for o in observations])
    y = np.array([o.outcome for o in observations], dtype=float)
    x = np.column_stack([np.ones(len(observations)), a, logb])
    return x, y


def weighted_loss_grad(theta, observations, weights, l2: float):
    """Weighted l2-regularized log-loss and its gradient in packed parameters.

    loss = sum_k w_k [-y log p - (1 - y) log(1 - p)] + l2 ||theta||^2
    """
    theta = np.asarray(theta, dtype=float)
    x, y = _design(observations)
    wts = np.asarray(weights, dtype=float)
    z = x @ theta
    # log(1 + e^z) - y z is the stable form of the log-loss
    loss = wts @ (np.logaddexp(0.0, z) - y * z) + l2 * theta @ theta
    grad = x.T @ (wts * (expit(z) - y)) + 2.0 * l2 * theta
    return float(loss), grad


def update_model(model: WinModel, obs: Observation, lr: float = 1e-3,
                 decay: float = 0.999, l2: float = 1e-4) -> WinModel:
    """One Adam step on the newest observation, in place; returns ``model``.

    Older gradient information is forgotten geometrically: both moment
    accumulators (and their bias-correction normalizers) are multiplied by
    ``decay`` on top of the usual Adam rates before the new gradient enters.
    """
    if not lr > 0:
        raise ValueError("lr must be positive")
    if not 0 < decay <= 1:
        raise ValueError("decay must lie in (0, 1]")
    if not l2 >= 0:
        raise ValueError("l2 must be >= 0")
    theta = model.params
    _, grad = weighted_loss_grad(theta, [obs], [1.0], l2)
    if not np.isfinite(grad).all():
        raise FloatingPointError("non-finite win-model gradient")
    b1, b2 = decay * ADAM_B1, decay * ADAM_B2
    model.m = b1 * model.m + (1 - ADAM_B1) * grad
    model.v = b2 * model.v + (1 - ADAM_B2) * grad**2
    model.m_norm = b1 * model.m_norm + (1 - ADAM_B1)
    model.v_norm = b2 * model.v_norm + (1 - ADAM_B2)
    m_hat = model.m / model.m_norm
    v_hat = model.v / model.v_norm
    theta = theta - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    theta[-1] = max(theta[-1], BETA_MIN)
    model.set_params(theta)
    model.steps += 1
    return model


def batch_refit(history, decay: float = 0.999, l2: float = 1e-4, iters: int = 1_000,
                lr: float = 1.0, tol: float = 1e-8, model: WinModel | None = None) -> WinModel:
    """Offline fit of the exponentially weighted loss (weights decay^(K - k)).

    Full-batch Newton descent with an Armijo backtracking line search
    started at step ``lr``, until the projected gradient max-norm falls
    below ``tol``. This is the reference the online updater is checked against.
    """
    if not history:
        raise ValueError("history is empty")
    n_attr = history[0].attributes.size
    model = WinModel.initial(n_attr) if model is None else model.copy()
    weights = decay ** np.arange(len(history) - 1, -1, -1, dtype=float)
    x, y = _design(history)
    theta = model.params

    def projected(theta, grad):
        g = grad.copy()
        if theta[-1] <= BETA_MIN and g[-1] > 0:
            g[-1] = 0.0  # bound is active
        return g

    loss, grad = weighted_loss_grad(theta, history, weights, l2)
    for _ in range(iters):
        pg = projected(theta, grad)
        if np.abs(pg).max() < tol:
            model.set_params(theta)
            return model
        # Newton on the free coordinates; beta drops out while its bound is active
        free = np.ones(theta.size, dtype=bool)
        free[-1] = not (theta[-1] <= BETA_MIN and grad[-1] > 0)
        p = expit(x @ theta)
        hess = (x.T * (weights * p * (1 - p))) @ x + 2.0 * l2 * np.eye(theta.size)
        direction = np.zeros_like(theta)
        try:
            direction[free] = -np.linalg.solve(hess[np.ix_(free, free)], pg[free])
        except np.linalg.LinAlgError:
            direction = -pg
        if not direction @ pg < 0:
            direction = -pg
        t = lr
        while True:
            trial = theta + t * direction
            trial[-1] = max(trial[-1], BETA_MIN)
            loss_t, grad_t = weighted_loss_grad(trial, history, weights, l2)
            if loss_t <= loss + 1e-4 * (pg @ (trial - theta)) or t < 1e-16:
                break
            t *= 0.5
        if t < 1e-16:
            break
        theta, loss, grad = trial, loss_t, grad_t
    raise RuntimeError(f"batch_refit did not converge (gradient {np.abs(pg).max():.3e})")
