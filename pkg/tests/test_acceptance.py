"""Acceptance gate: the ten reproduction criteria at their stated tolerances.

Each test prints one ``criterion k: PASS|FAIL`` line (also collected in the terminal
summary) and fails when its criterion is not met. Experiments run through the same
drivers as the command-line tool, with default seeds.
"""

import time

import numpy as np

from poincare import (
    GaussianKernelConfig,
    estimate_poincare_exact,
    estimate_poincare_rf,
    featurize,
    featurize_grad,
    learn_reaction_coordinate,
    sample_features,
)
from poincare import kernel
from poincare.config import resolve
from poincare.experiments import (
    run_estimate,
    run_langevin_check,
    run_learn_rc,
    run_mixture_growth,
    run_oracle,
    run_sweep_n,
)
from poincare.hermite import build_model, regularized_poincare
from poincare.sampling import three_gaussians
from poincare.stiefel import euclid_grad_A, objective_F, random_stiefel, stiefel_defect

from conftest import ACCEPTANCE_LINES
from oracles import fd_gradient, rel_err, representer_rayleigh_max

C_GRID = "0.01,0.1,1,10,100"


def report(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_01_gaussian_unit_constant():
    t0 = time.perf_counter()
    cfg = resolve("estimate", None, {"n": 500, "reps": 20, "c_lambda": C_GRID, "oracle": 1.0})
    rows, extra = run_estimate(cfg)
    elapsed = time.perf_counter() - t0
    mean = extra["selected"]["mean"]
    c = extra["selected"]["point"]["c_lambda"]
    report(1, 0.8 <= mean <= 1.2 and elapsed < 60,
           f"mean over 20 reps {mean:.4f} at tuned C={c:g}, target [0.8, 1.2]; {elapsed:.1f}s < 60s")


def test_criterion_02_convergence_trend():
    t0 = time.perf_counter()
    cfg = resolve("sweep-n", None, {"n_grid": "50,200,800", "reps": 20, "c_lambda": C_GRID, "oracle": 1.0})
    rows, _ = run_sweep_n(cfg)
    elapsed = time.perf_counter() - t0
    errs = []
    for n in (50, 200, 800):
        stats = {r.params["stat"]: r.estimate for r in rows
                 if r.status == "summary" and r.n == n and r.method == "exact"}
        errs.append(stats["mean_abs_err"])
    ok = errs[0] > errs[1] > errs[2] and elapsed < 600
    report(2, ok, "mean |estimate - 1| at n=50, 200, 800: " + ", ".join(f"{e:.4f}" for e in errs)
           + f"; {elapsed:.1f}s < 600s")


def test_criterion_03_covariance_scaling():
    cfg = resolve("estimate", None, {"n": 800, "variances": "0.25,1"})
    rows, extra = run_estimate(cfg)
    value = extra["selected"]["mean"]
    report(3, abs(value - 1.0) <= 0.25, f"estimate {value:.4f} for N(0, diag(0.25, 1)), target 1 +- 25%")


def test_criterion_04_exponential_measure():
    cfg = resolve("estimate", None, {"distribution": "exponential", "n": 1000, "c_lambda": "1,2,5",
                                     "lambda_decades": "-2,-1,0,1,2", "oracle": 4.0})
    rows, extra = run_estimate(cfg)
    value = extra["selected"]["mean"]
    point = extra["selected"]["point"]
    report(4, abs(value - 4.0) <= 1.0,
           f"estimate {value:.4f} at lambda={point['lambda']:.3g}, target 4 +- 25%")


def test_criterion_05_hermite_sandwich():
    t0 = time.perf_counter()
    model = build_model(0.25, 1.0, 60)
    values = [regularized_poincare(model, k) for k in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1.0 for v in values) and values[-1] > 0.98 and elapsed < 1.0
    report(5, ok, "P_kappa = " + ", ".join(f"{v:.5f}" for v in values) + f"; {elapsed:.3f}s < 1s")


def test_criterion_06_keystone_cross_oracle():
    t0 = time.perf_counter()
    cfg = resolve("oracle", None, {"n_check": 2000, "check_kappas": "0.01,0.001"})
    rows, extra = run_oracle(cfg)
    elapsed = time.perf_counter() - t0
    checks = extra["checks"]
    ok = all(rel <= 0.10 for _, _, _, rel in checks) and elapsed < 300
    detail = "; ".join(f"kappa={k:g}: estimate {e:.4f} vs oracle {extra['table'][k]:.4f} ({100 * r:.1f}%)"
                       for k, _, e, r in checks)
    report(6, ok, detail + f"; {elapsed:.1f}s < 300s")


def test_criterion_07_mixture_growth():
    cfg = resolve("mixture-growth", None, {})
    rows, extra = run_mixture_growth(cfg)
    r2 = extra["fit"]["r2"]
    report(7, r2 > 0.9, f"R^2 of log-estimate vs a: {r2:.4f} (slope {extra['fit']['slope']:.3f}), target > 0.9")


def test_criterion_08_reaction_coordinate():
    t0 = time.perf_counter()
    cfg = resolve("learn-rc", None, {})
    rows, extra = run_learn_rc(cfg)
    elapsed = time.perf_counter() - t0
    angle = extra["angle_deg"]
    dist = abs((angle - 45.0 + 90.0) % 180.0 - 90.0)
    grid_step = 180.0 / cfg["sweep_points"]
    sweep_dist = abs((extra["sweep_argmax_deg"] - 45.0 + 90.0) % 180.0 - 90.0)
    ok = dist <= 5.0 and sweep_dist <= grid_step and elapsed < 300
    report(8, ok, f"learned angle {angle:.2f} deg (|err| {dist:.2f} <= 5); sweep argmax "
                  f"{extra['sweep_argmax_deg']:.1f} deg (|err| {sweep_dist:.1f} <= {grid_step:g}); {elapsed:.1f}s < 300s")


def test_criterion_09_ou_variance_decay():
    cfg = resolve("langevin-check", None, {"potential": "ou"})
    rows, extra = run_langevin_check(cfg)
    z = [(r.estimate - r.params["theory"]) / r.params["se"] if r.params["se"] > 0 else 0.0 for r in rows]
    ok = len(rows) == 10 and all(abs(v) < 3 for v in z)
    report(9, ok, f"{len(rows)} times on [0, 2], max |z| = {max(abs(v) for v in z):.2f} < 3")


def test_criterion_10_property_suites():
    failures = []

    # (a) monotone in lambda on 10 random datasets
    lams = np.logspace(-4, 1, 10)
    for seed in range(10):
        X = np.random.default_rng(seed).normal(size=(60, 1 + seed % 2))
        vals = [estimate_poincare_exact(X, GaussianKernelConfig(), lam).value for lam in lams]
        if not all(b <= a * (1 + 1e-10) for a, b in zip(vals, vals[1:])):
            failures.append(f"monotonicity seed {seed}")

    # (b) reduced n x n formula vs dense representer-basis maximization
    worst = 0.0
    for seed in range(8):
        rng = np.random.default_rng(100 + seed)
        n, d = int(rng.integers(3, 11)), int(rng.integers(1, 3))
        gamma, lam = float(rng.uniform(0.3, 2)), float(10 ** rng.uniform(-3, 0))
        X = rng.normal(size=(n, d))
        worst = max(worst, abs(estimate_poincare_exact(X, GaussianKernelConfig(gamma), lam).value
                               / representer_rayleigh_max(X, gamma, lam) - 1))
    if worst > 1e-8:
        failures.append(f"reduced vs dense rel err {worst:.2e}")

    # (c) random features vs exact
    X = np.random.default_rng(7).normal(size=(200, 1))
    exact = estimate_poincare_exact(X, GaussianKernelConfig(), 1 / 200).value
    rf = estimate_poincare_rf(X, sample_features(1, 2000, 1.0, seed=11), 1 / 200).value
    rf_err = abs(rf / exact - 1)
    if rf_err > 0.05:
        failures.append(f"RF vs exact {rf_err:.3f}")

    # (d) Stiefel feasibility at every iterate
    defects = []
    learn_reaction_coordinate(three_gaussians(100, seed=3), M=50, steps=30, restarts=3, seed=2,
                              callback=lambda r, t, A, v: defects.append(stiefel_defect(A)))
    Y = np.random.default_rng(4).normal(size=(80, 4))
    learn_reaction_coordinate(Y, p=2, M=30, steps=20, restarts=2, seed=5,
                              callback=lambda r, t, A, v: defects.append(stiefel_defect(A)))
    if max(defects) >= 1e-10:
        failures.append(f"Stiefel defect {max(defects):.2e}")

    # (e) analytic vs finite-difference gradients
    grad_errs = []
    rng = np.random.default_rng(9)
    cfg = GaussianKernelConfig(0.7)
    x, y = rng.normal(size=2), rng.normal(size=2)
    grad_errs.append(rel_err(kernel.grad_y(x, y, cfg),
                             fd_gradient(lambda z: kernel.eval(x, z, cfg), y)))
    grad_errs.append(rel_err(kernel.cross_hessian(x, y, cfg),
                             np.array([fd_gradient(lambda z: kernel.grad_y(z, y, cfg)[j], x) for j in range(2)])))
    fmap = sample_features(2, 15, 0.8, seed=1)
    Z = rng.normal(size=(5, 2))
    for i in range(5):
        grad_errs.append(rel_err(featurize_grad(fmap, Z[i:i + 1])[0],
                                 np.array([fd_gradient(lambda z: featurize(fmap, z[None, :])[0, m], Z[i])
                                           for m in range(15)])))
    for p, d in [(1, 2), (2, 3), (2, 5)]:
        Xs = rng.normal(size=(40, d))
        fm = sample_features(p, 20, 1.0, seed=p + d)
        A = random_stiefel(p, d, rng)
        v = rng.normal(size=20)
        grad_errs.append(rel_err(euclid_grad_A(A, v, Xs, fm, 0.1),
                                 fd_gradient(lambda B: objective_F(B, v, Xs, fm, 0.1), A)))
    if max(grad_errs) >= 1e-4:
        failures.append(f"gradient rel err {max(grad_errs):.2e}")

    report(10, not failures,
           f"monotone 10/10 datasets; reduced vs dense {worst:.1e}; RF vs exact {100 * rf_err:.2f}%; "
           f"max Stiefel defect {max(defects):.1e} over {len(defects)} iterates; max gradient rel err "
           f"{max(grad_errs):.1e}" + (f"; failures: {failures}" if failures else ""))
