"""Entropy-regularized Wasserstein-proximal step for linear energies.

For an energy ``Phi(mu) = <r, mu>`` on a discrete grid the proximal step

    argmin_mu  min_{M in Pi(mu, mu_prev)} <C/2 + eps log M, M> + h <r, mu>

has the closed form ``e * (K.T @ (mu_prev / (K @ e)))`` with
``e = exp(-h r / eps)`` and ``K = exp(-C / (2 eps))``. Two independent checks
live here too: a brute-force solver of the variational problem and the
dual-variable certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .grid import ParameterGrid, validate_simplex

SCALING_MAX_ITER = 100_000
OUTER_MAX_ITER = 10_000
NEWTON_MAX_ITER = 100
ORACLE_MAX_N = 16


class ConvergenceError(RuntimeError):
    pass


class UnderflowError(FloatingPointError):
    pass


@dataclass(frozen=True)
class ProximalConfig:
    step_size: float = 1.0
    epsilon: float = 0.8

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def _check_inputs(mu_prev, r, grid: ParameterGrid, cfg: ProximalConfig):
    mu = np.asarray(mu_prev, dtype=float)
    r = np.asarray(r, dtype=float)
    if mu.shape != (grid.size,) or r.shape != (grid.size,):
        raise ValueError(
            f"dimension mismatch: mu {mu.shape}, r {r.shape}, grid size {grid.size}")
    if not np.isfinite(r).all():
        raise ValueError("r has non-finite entries")
    if cfg.epsilon != grid.epsilon:
        raise ValueError(
            f"config epsilon {cfg.epsilon} differs from grid kernel epsilon {grid.epsilon}")
    return mu, r


def _tilt(r, cfg: ProximalConfig) -> np.ndarray:
    # shifting r by a constant leaves the update unchanged; anchor max entry at 1
    return np.exp(-cfg.step_size * (r - r.min()) / cfg.epsilon)


def proximal_update(mu_prev, r, grid: ParameterGrid, cfg: ProximalConfig) -> np.ndarray:
    """One closed-form proximal step. O(N^2), two matrix-vector products."""
    mu, r = _check_inputs(mu_prev, r, grid, cfg)
    e = _tilt(r, cfg)
    denom = grid.kernel @ e
    if (denom == 0).any():
        raise UnderflowError(
            "K @ exp(-h r / eps) underflowed to zero; reduce h * spread(r) / eps")
    return e * (grid.kernel.T @ (mu / denom))


def dual_residual(mu_next, mu_prev, r, grid: ParameterGrid, cfg: ProximalConfig) -> float:
    """Max-norm residual of the optimality system with lambda1 = -r.

    Recovers ``exp(h lambda0 / eps)`` from the first marginal equation, then
    measures how far ``mu_next`` is from ``exp(h lambda1/eps) * (K^T exp(h lambda0/eps))``.
    """
    mu_prev, r = _check_inputs(mu_prev, r, grid, cfg)
    mu_next = np.asarray(mu_next, dtype=float)
    if mu_next.shape != mu_prev.shape:
        raise ValueError("mu_next and mu_prev lengths differ")
    x1 = _tilt(r, cfg)  # exp(h lambda1 / eps) up to a positive constant
    kx1 = np.exp(-grid.cost / (2 * cfg.epsilon)) @ x1
    if (kx1 == 0).any():
        raise UnderflowError("kernel product underflowed to zero")
    x0 = mu_prev / kx1
    marginal = np.abs(x0 * kx1 - mu_prev).max()
    rebuilt = x1 * (np.exp(-grid.cost.T / (2 * cfg.epsilon)) @ x0)
    return float(max(marginal, np.abs(mu_next - rebuilt).max()))


def _sinkhorn_potentials(log_p, log_q, half_cost, eps, g=None, tol=1e-12):
    """Dual potentials of min <half_cost + eps log M, M> over couplings of (p, q).

    ``M = exp((f_i + g_j - half_cost_ij) / eps)``. A few log-domain Sinkhorn
    sweeps get close, then damped Newton on the marginal equations finishes;
    plain scaling crawls when half_cost / eps has a wide spread. ``tol`` is
    on the relative marginal error, so tiny masses get accurate potentials.
    """
    n, m = half_cost.shape
    g = np.zeros(m) if g is None else g.copy()
    neg = -half_cost / eps
    p, q = np.exp(log_p), np.exp(log_q)
    f = eps * (log_p - logsumexp(neg + g[None, :] / eps, axis=1))
    for _ in range(200):
        g = eps * (log_q - logsumexp(neg + f[:, None] / eps, axis=0))
        f = eps * (log_p - logsumexp(neg + g[None, :] / eps, axis=1))
        coupling = np.exp(neg + (f[:, None] + g[None, :]) / eps)
        if np.abs(coupling.sum(axis=0) - q).max() < 1e-6:
            break

    def residual(f, g):
        coupling = np.exp(neg + (f[:, None] + g[None, :]) / eps)
        rows, cols = coupling.sum(axis=1), coupling.sum(axis=0)
        return coupling, rows, cols, np.concatenate([p - rows, q - cols])

    scale = np.concatenate([p, q])
    coupling, rows, cols, res = residual(f, g)
    for _ in range(NEWTON_MAX_ITER):
        err = np.abs(res / scale).max()
        if err < tol:
            return f - f[0], g + f[0]
        # gauge g[0] = 0 removes the constant null direction of the Jacobian
        jac = np.block([[np.diag(rows), coupling[:, 1:]],
                        [coupling[:, 1:].T, np.diag(cols[1:])]]) / eps
        try:
            step = np.linalg.solve(jac, np.concatenate([res[:n], res[n + 1:]]))
        except np.linalg.LinAlgError:
            break
        df, dg = step[:n], np.concatenate([[0.0], step[n:]])
        norm, t = np.linalg.norm(res), 1.0
        while t > 1e-10:
            trial = residual(f + t * df, g + t * dg)
            if np.linalg.norm(trial[3]) < (1 - 1e-4 * t) * norm:
                break
            t *= 0.5
        else:
            break
        f, g = f + t * df, g + t * dg
        coupling, rows, cols, res = trial
    if err < 1e3 * tol:  # stalled at the rounding floor
        return f - f[0], g + f[0]
    raise ConvergenceError(f"transport potentials did not converge (marginal error {err:.3e})")


def _potential_jacobian(f, g, half_cost, eps):
    """d f / d p for the transport potentials at fixed q (gauge g[0] = 0).

    Differentiates the marginal equations ``M 1 = p, M^T 1 = q``; the result
    is the Hessian of the optimal transport value in its free marginal.
    """
    n = len(f)
    coupling = np.exp(-half_cost / eps + (f[:, None] + g[None, :]) / eps)
    jac = np.block([[np.diag(coupling.sum(axis=1)), coupling[:, 1:]],
                    [coupling[:, 1:].T, np.diag(coupling.sum(axis=0)[1:])]]) / eps
    return np.linalg.inv(jac)[:n, :n]


def oracle_minimize(mu_prev, r, grid: ParameterGrid, cfg: ProximalConfig,
                    tol: float = 1e-10) -> np.ndarray:
    """Solve the proximal problem by direct iterative minimization (validation only).

    The inner transport problem is solved for its dual potentials (Sinkhorn
    then Newton). The gradient of its optimal value in the free marginal is
    the potential ``f``, and its Hessian follows from implicit
    differentiation, so the outer problem over the simplex is minimized by
    damped Newton steps on the affine hull with a positivity-preserving
    Armijo line search. Convergence: ``max_i mu_i |grad_i - <mu, grad>| < tol``.
    """
    mu_prev, r = _check_inputs(mu_prev, r, grid, cfg)
    n = grid.size
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle is limited to N <= {ORACLE_MAX_N}, got {n}")
    if n == 1:
        return np.ones(1)
    keep = mu_prev > 0  # zero-mass source points drop out of the transport problem
    eps, h = cfg.epsilon, cfg.step_size
    half_cost = grid.cost[:, keep] / 2.0
    q = mu_prev[keep]
    log_q = np.log(q)

    def solve(mu, g_warm):
        f, g = _sinkhorn_potentials(np.log(mu), log_q, half_cost, eps, g_warm)
        return f, g, f @ mu + g @ q + h * (r @ mu)

    mu = np.full(n, 1.0 / n)
    f, g, value = solve(mu, None)
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, n] = kkt[n, :n] = 1.0
    for _ in range(OUTER_MAX_ITER):
        grad = f + h * r
        gap = np.abs(mu * (grad - mu @ grad)).max()
        if gap < tol:
            return mu
        kkt[:n, :n] = _potential_jacobian(f, g, half_cost, eps)
        rhs = np.concatenate([-grad, [0.0]])
        direction = np.linalg.solve(kkt, rhs)[:n]
        slope = grad @ direction
        if not slope < 0:
            # fall back to an entropic mirror step
            logits = np.log(mu) - (grad - grad.min()) / eps
            direction = np.exp(logits - logsumexp(logits)) - mu
            slope = grad @ direction
        shrinking = direction < 0
        t = min(1.0, 0.99 * np.min(-mu[shrinking] / direction[shrinking])) if shrinking.any() else 1.0
        while True:
            trial = mu + t * direction
            trial = trial / trial.sum()
            f_t, g_t, value_t = solve(trial, g)
            if value_t <= value + 1e-4 * t * slope or t < 1e-14:
                break
            t *= 0.5
        if t < 1e-14 and gap < 1e3 * tol:
            return mu  # rounding floor of the objective
        mu, f, g, value = trial, f_t, g_t, value_t
    raise ConvergenceError(f"outer descent stalled at stationarity gap {gap:.3e}")


def proximal_objective(mu, mu_prev, r, grid: ParameterGrid, cfg: ProximalConfig) -> float:
    """Value of the proximal objective at a strictly positive ``mu``."""
    mu = validate_simplex(mu, 1e-9)
    mu_prev = np.asarray(mu_prev, dtype=float)
    keep = mu_prev > 0
    half_cost = grid.cost[:, keep] / 2.0
    f, g = _sinkhorn_potentials(np.log(mu), np.log(mu_prev[keep]), half_cost, cfg.epsilon)
    return float(f @ mu + g @ mu_prev[keep] + cfg.step_size * np.dot(r, mu))


def entropic_distance(p, q, grid: ParameterGrid, epsilon: float, tol: float = 1e-10) -> float:
    """Entropy-regularized squared Wasserstein distance between two grid distributions.

    ``min_M <C, M> + eps * KL(M | p q^T)`` over couplings of ``p`` and ``q``,
    using the full squared-distance cost.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    p = validate_simplex(p)
    q = validate_simplex(q)
    if p.shape != (grid.size,) or q.shape != (grid.size,):
        raise ValueError("distribution length does not match grid")
    if (p <= 0).any() or (q <= 0).any():
        raise ValueError("entropic_distance needs strictly positive distributions")
    f, g = _sinkhorn_potentials(np.log(p), np.log(q), grid.cost, epsilon, tol=tol)
    log_m = (f[:, None] + g[None, :] - grid.cost) / epsilon
    m = np.exp(log_m)
    kl = np.sum(m * (log_m - np.log(p)[:, None] - np.log(q)[None, :]))
    return float(np.sum(m * grid.cost) + epsilon * kl)
