"""Acceptance gate. Each test prints one PASS/FAIL line; run with ``pytest -s`` to see them inline."""
import math
import time

import numpy as np
import pytest

from bidshade.campaign import budget_at
from bidshade.cli import main
from bidshade.config import RunConfig
from bidshade.grid import ParameterGrid, shannon_entropy, validate_simplex
from bidshade.sim import observe, run_campaign
from bidshade.winmodel import WinModel, update_model, weighted_loss_grad
from bidshade.wprox import ProximalConfig, dual_residual, oracle_minimize, proximal_update

from test_winmodel import central_difference, logit_correlation, random_observations, synthetic_stream

# Regression bounds pinned from the first seed-0 baseline of the default scenario:
# final entropy 3.8641, worst non-exempt daily tracking error 0.208, cumulative error 0.043.
ENTROPY_BOUND = 3.92
TRACKING_BAND = 0.25
BURN_IN_DAYS = 2


def report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def random_instance(rng, n, eps, h):
    grid = ParameterGrid(rng.uniform(0.0, 1.5, (n, 2)), eps)
    mu = rng.dirichlet(np.ones(n))
    r = rng.uniform(-2, 2, n)
    return grid, mu, r, ProximalConfig(step_size=h, epsilon=eps)


@pytest.fixture(scope="module")
def default_run():
    worst = [0.0]

    def check(k, mu):
        validate_simplex(mu, 1e-10)
        worst[0] = max(worst[0], abs(mu.sum() - 1.0))

    start = time.perf_counter()
    result = run_campaign(RunConfig(), on_step=check)
    return result, time.perf_counter() - start, worst[0]


def test_closed_form_matches_oracle(capsys):
    rng = np.random.default_rng(20240501)
    start = time.perf_counter()
    gap = resid = 0.0
    for i in range(50):
        grid, mu, r, cfg = random_instance(rng, 2 + i % 4, [0.4, 0.8, 1.6][i % 3],
                                           [0.5, 1.0, 2.0][(i // 12) % 3])
        closed = proximal_update(mu, r, grid, cfg)
        gap = max(gap, float(np.abs(closed - oracle_minimize(mu, r, grid, cfg)).max()))
        resid = max(resid, dual_residual(closed, mu, r, grid, cfg))
    elapsed = time.perf_counter() - start
    report(capsys, "closed form vs oracle", gap <= 1e-6 and resid <= 1e-10 and elapsed < 60,
           f"max gap {gap:.2e}, max dual residual {resid:.2e}, {elapsed:.1f}s")


def test_simplex_preserved_over_default_run(capsys, default_run):
    result, elapsed, worst = default_run
    ok = len(result.records) == 12240 and result.grid.size == 100 and elapsed < 120
    report(capsys, "simplex preservation", ok,
           f"{len(result.records)} steps, max |sum-1| {worst:.1e}, {elapsed:.1f}s")


def test_shift_invariance(capsys):
    rng = np.random.default_rng(77)
    worst = 0.0
    for i in range(20):
        grid, mu, r, cfg = random_instance(rng, 2 + i % 4, 0.8, 1.0)
        base = proximal_update(mu, r, grid, cfg)
        for c in (-1e3, -1.0, 1.0, 1e3):
            worst = max(worst, float(np.abs(proximal_update(mu, r + c, grid, cfg) - base).max()))
    report(capsys, "shift invariance", worst <= 1e-12, f"max deviation {worst:.1e}")


def test_concentration(capsys, default_run):
    result = default_run[0]
    h0, h1 = shannon_entropy(result.snapshots[0]), shannon_entropy(result.final_distribution)
    ok = math.isclose(h0, math.log(100), rel_tol=1e-12) and h1 < math.log(100) and h1 <= ENTROPY_BOUND
    report(capsys, "concentration", ok, f"entropy {h0:.4f} -> {h1:.4f} (bound {ENTROPY_BOUND})")


def daily_tracking(result):
    cfg = result.config
    schedule = cfg.schedule()
    per_day = cfg.steps_per_day
    days = len(result.records) // per_day
    # a breakpoint at the end of day d exempts day d + 1
    exempt = {math.floor(t / 24) + 1 for t, _ in schedule.breakpoints[:-1]}
    errors = {}
    for d in range(BURN_IN_DAYS + 1, days + 1):
        if d in exempt:
            continue
        chunk = result.records[(d - 1) * per_day:d * per_day]
        actual = sum(r.spend for r in chunk)
        target = sum(budget_at(schedule, r.t_hours) for r in chunk) / per_day
        errors[d] = abs(actual - target) / target
    return errors


def test_budget_tracking(capsys, default_run):
    result = default_run[0]
    errors = daily_tracking(result)
    state = result.final_state
    cumulative = abs(state.cumulative_spend - state.cumulative_target) / state.cumulative_target
    worst_day = max(errors, key=errors.get)
    ok = sorted(errors) == [3, 5, 7, 8, 9, 11, 12, 14, 15, 16] and \
        errors[worst_day] < TRACKING_BAND and cumulative < TRACKING_BAND
    report(capsys, "budget tracking", ok,
           f"worst day {worst_day} error {errors[worst_day]:.3f}, cumulative {cumulative:.3f} "
           f"(band {TRACKING_BAND})")


def test_win_model_gradient_and_recovery(capsys):
    rng = np.random.default_rng(2718)
    worst = 0.0
    for _ in range(20):
        obs = random_observations(rng, 20)
        theta = rng.normal(0, 1, 7)
        theta[-1] = abs(theta[-1]) + 0.1
        weights = 0.999 ** np.arange(19, -1, -1)
        grad = weighted_loss_grad(theta, obs, weights, 1e-4)[1]
        fd = central_difference(theta, obs, weights, 1e-4)
        worst = max(worst, float(np.abs(grad - fd).max() / np.abs(fd).max()))
    rng = np.random.default_rng(31)
    truth = np.array([-0.3, 1.2, -0.8, 0.5, 0.0, -0.6, 1.8])
    model = WinModel.initial()
    for o in synthetic_stream(rng, truth, 10_000):
        update_model(model, o, lr=1e-3, decay=0.999, l2=1e-4)
    corr = logit_correlation(model, truth, rng)
    report(capsys, "win-model gradient and recovery", worst < 1e-5 and corr > 0.95,
           f"max relative gradient error {worst:.1e}, logit correlation {corr:.4f}")


def test_market_calibration(capsys):
    rng = np.random.default_rng(8413)
    rate = sum(observe(math.pi / 2, rng) for _ in range(100_000)) / 100_000
    report(capsys, "market calibration", abs(rate - 0.8413) <= 0.005, f"win rate {rate:.4f}")


def test_byte_identical_reruns(capsys, tmp_path):
    cfg = tmp_path / "default.txt"
    cfg.write_text("")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(a)]) == 0
    assert main(["run", str(cfg), "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    same = names == sorted(p.name for p in b.iterdir()) and \
        all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    report(capsys, "determinism", same, f"{len(names)} files compared")
