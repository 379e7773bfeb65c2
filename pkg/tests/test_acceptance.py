"""Whole-system checks: solver exactness, regret growth, queue stability,
delay and learning trends, privacy calibration, and runtime scaling.

These run the shipped configurations end to end and pin the headline
behaviors; module-level edge cases live in the per-module test files.
"""

import itertools
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

import oracles
from fedsched import fl, harness, privacy
from fedsched.harness import ExperimentConfig, compute_regret, run_experiment
from fedsched.matching import (
    brute_force_optimal,
    gmba_step,
    greedy_with_order,
    min_matched_edge,
    optimal_matching,
)


def _softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def test_c1_bottleneck_solver_matches_brute_force_on_500_matrices():
    rng = np.random.default_rng(20260301)
    start = time.perf_counter()
    checked = 0
    while checked < 500:
        u = int(rng.integers(2, 8))
        n = int(rng.integers(2, min(u, 4) + 1))
        matrix = rng.uniform(0.0, 1.0, size=(u, n))
        got = min_matched_edge(matrix, optimal_matching(matrix))
        _, want = brute_force_optimal(matrix)
        assert got == want, f"instance {checked}: OM {got!r} != oracle {want!r}"
        checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"500 instances took {elapsed:.1f}s"


def test_c2_some_greedy_order_attains_the_optimum():
    rng = np.random.default_rng(20260302)
    orders = list(itertools.permutations(range(5)))
    assert len(orders) == 120
    hits = 0
    for _ in range(200):
        matrix = rng.uniform(0.0, 1.0, size=(5, 3))
        _, want = brute_force_optimal(matrix)
        values = {
            min_matched_edge(matrix, greedy_with_order(matrix, order))
            for order in orders
        }
        hits += want in values
    assert hits == 200, f"optimum reachable by greedy in only {hits}/200 cases"


def test_c3_greedy_improvement_converges_on_frozen_matrices():
    converged = 0
    monotone = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        matrix = rng.uniform(0.0, 1.0, size=(4, 3))
        _, want = brute_force_optimal(matrix)
        current = None
        values = []
        for _ in range(200):
            current = gmba_step(matrix, current, rng)
            values.append(min_matched_edge(matrix, current))
            if values[-1] == want:
                break
        converged += values[-1] == want
        monotone += all(b >= a for a, b in zip(values, values[1:]))
    assert converged >= 95, f"converged in {converged}/100 instances"
    assert monotone == 100, f"value decreased in {100 - monotone} instances"


def test_c4_regret_stays_under_bound_and_grows_logarithmically():
    start = time.perf_counter()
    ratio_cap = math.log(20_000) / math.log(2_000) * 1.5
    for seed in range(10):
        cfg = ExperimentConfig(
            num_clients=10, num_channels=4, rounds=20_000, seed=seed,
            policy="mamab-om", env_mode="oracle-stationary",
            betas_override=[0.0] * 10, tradeoff_v=1.0, train_model=False,
        )
        report = compute_regret(run_experiment(cfg))
        assert report.delta_min > 0
        total = report.cumulative[-1]
        if report.bound is not None:
            assert total <= report.bound, (
                f"seed {seed}: regret {total:.1f} exceeds bound "
                f"{report.bound:.1f}"
            )
        ratio = total / report.cumulative[1999]
        assert ratio <= ratio_cap, (
            f"seed {seed}: growth ratio {ratio:.3f} > {ratio_cap:.3f}"
        )
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, f"10 regret runs took {elapsed:.0f}s"


def test_c5_selection_fractions_and_queues_stay_stable():
    cfg = ExperimentConfig(rounds=5_000, seed=0, tradeoff_v=1.0,
                           train_model=False)
    res = run_experiment(cfg)
    final = res.metrics[-1]
    slack = final.sel_frac - (res.betas - 0.05)
    assert slack.min() >= 0.0, (
        f"client {slack.argmin()} under quota: sel_frac "
        f"{final.sel_frac[slack.argmin()]:.4f} vs beta "
        f"{res.betas[slack.argmin()]:.4f}"
    )
    tail = np.array([m.queues.max() for m in res.metrics[-2_500:]])
    slope = np.polyfit(np.arange(len(tail)), tail, 1)[0]
    assert slope <= 1e-3, f"max-queue trend {slope:.2e}/round"


def _mean_final_cum_delay(policy, rounds, seeds, **kw):
    totals = []
    for seed in seeds:
        cfg = ExperimentConfig(policy=policy, rounds=rounds, seed=seed,
                               train_model=False, **kw)
        totals.append(run_experiment(cfg).metrics[-1].cum_delay_s)
    return float(np.mean(totals))


def test_c6_learned_schedules_beat_random_on_delay():
    seeds = range(5)
    rnd = _mean_final_cum_delay("random", 1_000, seeds)
    om = _mean_final_cum_delay("mamab-om", 1_000, seeds)
    gmba = _mean_final_cum_delay("mamab-gmba", 1_000, seeds)
    assert om <= 0.90 * rnd, f"om/random = {om / rnd:.3f} > 0.90"
    assert gmba <= 0.95 * rnd, f"gmba/random = {gmba / rnd:.3f} > 0.95"


def test_c7_larger_tradeoff_v_lowers_delay_but_not_quota_hits():
    seeds = range(5)
    delays = {}
    satisfaction = {}
    for v in (1.0, 10.0, 100.0):
        totals, sats = [], []
        for seed in seeds:
            cfg = ExperimentConfig(rounds=2_000, seed=seed, tradeoff_v=v,
                                   train_model=False)
            res = run_experiment(cfg)
            totals.append(res.metrics[-1].cum_delay_s)
            ok = res.metrics[-1].sel_frac >= res.betas - 0.05
            sats.append(ok.mean())
        delays[v] = float(np.mean(totals))
        satisfaction[v] = float(np.mean(sats))
    assert delays[100.0] <= delays[10.0] <= delays[1.0], f"delays {delays}"
    assert satisfaction[1.0] >= satisfaction[10.0], f"satisfaction {satisfaction}"
    assert satisfaction[1.0] >= satisfaction[100.0], f"satisfaction {satisfaction}"


def test_c8_privacy_calibration_matches_high_precision_oracle():
    rng = np.random.default_rng(20260308)
    for _ in range(100):
        eps = float(rng.uniform(0.1, 50.0))
        delta = float(rng.uniform(1e-5, 0.01))
        eta = float(rng.uniform(0.01, 0.5))
        clip = float(rng.uniform(0.1, 5.0))
        tau = int(rng.integers(1, 20))
        batch = int(rng.integers(1, 100))
        uploads = int(rng.integers(0, 2000))
        got = privacy.noise_std(eps, delta, eta, clip, tau, batch)
        want = oracles.noise_std(eps, delta, eta, clip, tau, batch)
        assert abs(got - want) <= 1e-9 * want
        got = privacy.compose_leakage(eps, delta, uploads)
        want = oracles.compose_leakage(eps, delta, uploads)
        assert abs(got - want) <= 1e-9 * max(want, 1e-300)
        m = int(rng.integers(2, 6))
        p = rng.dirichlet(np.ones(m))
        q = rng.dirichlet(np.ones(m))
        lam = float(rng.uniform(0.0, 0.99 / eta))
        ratio = float(rng.uniform(0.01, 1.0))
        inputs = privacy.DivergenceInputs(
            local_iters=tau, learning_rate=eta, clip_bound=clip,
            smoothness=lam, class_ratios=p, global_ratios=q,
            sample_ratio=ratio, batch_size=batch, epsilon=eps, delta=delta,
        )
        got = privacy.divergence_bound(inputs)
        want = oracles.divergence_bound(
            local_iters=tau, learning_rate=eta, clip_bound=clip,
            smoothness=lam, class_ratios=p, global_ratios=q,
            sample_ratio=ratio, batch_size=batch, epsilon=eps, delta=delta,
        )
        assert abs(got - want) <= 1e-9 * want
        k = int(rng.integers(2, 12))
        thetas = rng.uniform(1e-4, 10.0, size=k)
        n = int(rng.integers(1, k + 1))
        got = privacy.participating_ratios(thetas, n)
        want = oracles.participating_ratios(thetas, n)
        assert np.abs(got - want).max() <= 1e-9
    leak = privacy.compose_leakage(0.8, 0.001, 250)
    assert leak == pytest.approx(12.06, abs=0.02), f"E=250 leakage {leak:.4f}"


def test_c9_learning_trends_across_policies_and_budgets():
    seeds = range(5)

    def mean_final_accuracy(policy, epsilon):
        finals = []
        for seed in seeds:
            cfg = ExperimentConfig(
                policy=policy, rounds=300, seed=seed, train_model=True,
                data_profile="uniform", dominant_fraction=0.8,
                dp_preset="uniform", epsilon=epsilon,
            )
            finals.append(run_experiment(cfg).metrics[-1].accuracy)
        return float(np.mean(finals))

    om = mean_final_accuracy("mamab-om", 25.0)
    rnd = mean_final_accuracy("random", 25.0)
    assert om >= rnd - 0.01, f"om {om:.4f} vs random {rnd:.4f}"
    by_eps = [mean_final_accuracy("mamab-om", e) for e in (0.5, 5.0, 50.0)]
    assert by_eps[0] <= by_eps[1] <= by_eps[2], f"accuracy vs eps: {by_eps}"


def test_c10_numerical_core_properties():
    rng = np.random.default_rng(20260310)
    # gradients against central differences, 20 random points
    eta, h = 0.5, 1e-5

    def ce(w, b, x, y):
        probs = _softmax(x @ w.T + b)
        return -np.mean(np.log(probs[np.arange(len(y)), y]))

    for _ in range(20):
        model = fl.init_model(3, 4, rng)
        x = rng.normal(size=(12, 4))
        y = np.asarray(rng.integers(0, 3, 12))
        cfg = fl.TrainConfig(local_iters=1, learning_rate=eta,
                             clip_bound=1e9, batch_size=12)
        out = fl.local_train(model, x, y, cfg, np.random.default_rng(0))
        grad = (model.weights - out.weights) / eta
        scale = max(np.abs(grad).max(), 1.0)
        k, j = rng.integers(0, 3), rng.integers(0, 4)
        wp, wm = model.weights.copy(), model.weights.copy()
        wp[k, j] += h
        wm[k, j] -= h
        fd = (ce(wp, model.bias, x, y) - ce(wm, model.bias, x, y)) / (2 * h)
        assert abs(grad[k, j] - fd) <= 1e-5 * scale
    # clipping cap on 10^4 samples
    n, clip = 10_000, 0.05
    x = rng.normal(size=(n, 6)) * 3.0
    y = np.asarray(rng.integers(0, 4, n))
    model = fl.init_model(4, 6, rng)
    g = _softmax(x @ model.weights.T + model.bias)
    g[np.arange(n), y] -= 1.0
    norms = np.sqrt((g**2).sum(axis=1) * ((x**2).sum(axis=1) + 1.0))
    clipped = norms * np.minimum(1.0, clip / np.maximum(norms, 1e-300))
    assert (clipped <= clip + 1e-9).all()
    # aggregation fixed point and convexity, 100 random inputs
    for _ in range(100):
        k = int(rng.integers(1, 6))
        weights = rng.uniform(0.1, 10.0, size=k)
        base = fl.Model(rng.normal(size=(3, 4)), rng.normal(size=3))
        same = fl.aggregate([base] * k, weights)
        assert np.abs(same.weights - base.weights).max() <= 1e-13
        models = [fl.Model(rng.normal(size=(3, 4)), rng.normal(size=3))
                  for _ in range(k)]
        out = fl.aggregate(models, weights)
        stack = np.stack([m.weights for m in models])
        assert (out.weights >= stack.min(axis=0) - 1e-12).all()
        assert (out.weights <= stack.max(axis=0) + 1e-12).all()


_TIMING_SCRIPT = """
import json, time
import numpy as np
from fedsched.matching import gmba_step, optimal_matching

sizes = [10, 20, 40, 80]
out = {"U": sizes, "gmba": [], "om": []}
rng = np.random.default_rng(0)
for u in sizes:
    matrix = rng.uniform(0.0, 1.0, size=(u, 4))
    prev = gmba_step(matrix, None, rng)  # warm-up
    optimal_matching(matrix)
    reps = 200
    t0 = time.perf_counter()
    for _ in range(reps):
        prev = gmba_step(matrix, prev, rng)
    out["gmba"].append((time.perf_counter() - t0) / reps)
    reps = 30
    t0 = time.perf_counter()
    for _ in range(reps):
        optimal_matching(matrix)
    out["om"].append((time.perf_counter() - t0) / reps)
print(json.dumps(out))
"""


def test_c11_per_round_cost_scales_gently_in_client_count():
    # Timed in a fresh interpreter with the portable backend so the
    # numbers reflect the algorithms, not the compiled kernels.
    env = dict(os.environ, FEDSCHED_PURE_PY="1")
    proc = subprocess.run(
        [sys.executable, "-c", _TIMING_SCRIPT],
        capture_output=True, text=True, env=env, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    data = json.loads(proc.stdout)
    log_u = np.log(data["U"])
    exponent = np.polyfit(log_u, np.log(data["gmba"]), 1)[0]
    assert exponent <= 2.5, f"greedy per-round exponent {exponent:.2f}"
    ratio = data["om"][-1] / data["gmba"][-1]
    assert ratio > 1.0, f"om/gmba time ratio at U=80 is {ratio:.2f}"
