"""Experiment drivers behind the command-line interface.

Each ``run_*`` function takes a resolved config (see :mod:`poincare.config`) and returns
``(rows, extra)`` where ``rows`` are :class:`~poincare.results.ResultRow` in canonical
(parameter, repetition) order. Failures inside a repetition become flagged rows.
"""

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import sampling
from .diffusion_maps import DiffusionMapConfig, estimate_poincare_dm
from .errors import InputError, NumericalError
from .estimator import estimate_poincare_exact
from .hermite import build_model, regularized_poincare
from .kernel import GaussianKernelConfig
from .random_features import estimate_poincare_rf, sample_features
from .results import ResultRow
from .stiefel import learn_reaction_coordinate, recovered_angle, sweep_angle_1d, whiten

METHOD_LABELS = {"exact": "exact", "rf": "random_features", "dm": "diffusion_maps"}


def data_seed(seed, rep):
    """Seed of dataset ``rep``; shared by every command so runs are comparable."""
    return int(np.random.SeedSequence([int(seed), int(rep)]).generate_state(1)[0])


def load_csv_samples(path):
    try:
        X = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read samples from {path}: {exc}") from exc
    return X


def make_data(cfg, n, seed):
    dist = cfg["distribution"]
    if dist == "gaussian":
        v = np.asarray(cfg["variances"], dtype=float)
        return sampling.sample_gaussian(np.zeros(len(v)), np.diag(v), n, seed)
    if dist == "mixture":
        return sampling.two_gaussians(cfg["mixture_a"], cfg["mixture_sigma"], n, seed)
    if dist == "exponential":
        return sampling.sample_exponential(n, seed)
    if dist == "three_gaussians":
        return sampling.three_gaussians(n, cfg.get("mixture_sigma", 0.1), seed)
    if dist == "file":
        return load_csv_samples(cfg["data"])
    raise InputError(f"unknown distribution {dist!r}")


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _timed_row(experiment, method, n, params, rep, fn, record_timing):
    t0 = time.perf_counter()
    try:
        value, status, note = float(fn()), "ok", ""
    except (NumericalError, InputError, np.linalg.LinAlgError) as exc:
        value, status, note = float("nan"), "error", f"{type(exc).__name__}: {exc}".replace("\n", " ")
    wall = time.perf_counter() - t0 if record_timing else None
    return ResultRow(experiment, method, n, params, value, rep, wall, status, note)


def kernel_value(X, method, gamma, lam, M=2000, rf_seed=0):
    if method == "exact":
        return estimate_poincare_exact(X, GaussianKernelConfig(gamma), lam).value
    if method == "rf":
        fmap = sample_features(X.shape[1], M, gamma, seed=rf_seed)
        return estimate_poincare_rf(X, fmap, lam).value
    raise InputError(f"method {method!r} is not a kernel estimator")


def _summaries(rows, experiment, method, n, params, oracle=None):
    vals = np.array([r.estimate for r in rows if r.status == "ok"])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return []
    stats = {"mean": vals.mean(), "std": vals.std(ddof=1) if vals.size > 1 else 0.0, "median": np.median(vals)}
    if oracle is not None:
        stats["mean_abs_err"] = np.abs(vals - oracle).mean()
    return [ResultRow(experiment, method, n, {**params, "stat": k}, float(v), -1, None, "summary")
            for k, v in stats.items()]


def _mean_abs_err(rows, oracle):
    vals = np.array([r.estimate for r in rows if r.status == "ok"])
    vals = vals[np.isfinite(vals)]
    return np.abs(vals - oracle).mean() if vals.size else np.inf


def run_estimate(cfg):
    method = cfg["method"]
    if method not in METHOD_LABELS:
        raise InputError(f"unknown method {method!r}")
    label = METHOD_LABELS[method]
    datasets = []
    for rep in range(cfg["reps"]):
        X = make_data(cfg, cfg["n"], data_seed(cfg["seed"], rep))
        datasets.append(X)
    n = datasets[0].shape[0]

    if method == "dm":
        points = [{"c_eps": c, "eps": c / n**0.25} for c in cfg["c_eps"]]

        def task(item):
            point, rep = item
            return _timed_row("estimate", label, n, point, rep,
                              lambda: estimate_poincare_dm(datasets[rep], DiffusionMapConfig(point["eps"])).value,
                              cfg["record_timing"])
    else:
        points = [{"gamma": cfg["gamma"], "c_lambda": c, "k": k,
                   "lambda": c * 10.0**k / n ** cfg["lambda_exponent"]}
                  for c in cfg["c_lambda"] for k in cfg["lambda_decades"]]

        def task(item):
            point, rep = item
            return _timed_row("estimate", label, n, point, rep,
                              lambda: kernel_value(datasets[rep], method, cfg["gamma"], point["lambda"], cfg["M"],
                                                   cfg["rf_seed"]),
                              cfg["record_timing"])

    items = [(p, rep) for p in points for rep in range(cfg["reps"])]
    rows = _map(task, items, cfg["threads"])
    reps = cfg["reps"]
    by_point = [rows[i * reps:(i + 1) * reps] for i in range(len(points))]

    oracle = cfg["oracle"]
    if oracle is not None:
        selected = int(np.argmin([_mean_abs_err(r, oracle) for r in by_point]))
    elif len(points) == 1:
        selected = 0
    else:
        selected = None
    summary = []
    for i, (point, prow) in enumerate(zip(points, by_point)):
        summary += _summaries(prow, "estimate", label, n, {**point, "selected": int(i == selected)}, oracle)
    best = None
    if selected is not None:
        ok = [r.estimate for r in by_point[selected] if r.status == "ok"]
        best = {"point": points[selected], "mean": float(np.mean(ok)) if ok else float("nan"),
                "median": float(np.median(ok)) if ok else float("nan")}
    return rows + summary, {"selected": best, "failed": sum(r.status == "error" for r in rows)}


def run_sweep_n(cfg):
    method = cfg["method"]
    if method not in ("exact", "rf"):
        raise InputError("sweep-n compares a kernel estimator (exact | rf) with diffusion maps")
    oracle = cfg["oracle"]
    rows, summary, tuned = [], [], {}
    for n in cfg["n_grid"]:
        datasets = [make_data(cfg, n, data_seed(cfg["seed"], rep)) for rep in range(cfg["reps"])]
        blocks = []
        for c in cfg["c_lambda"]:
            lam = c / n ** cfg["lambda_exponent"]
            point = {"gamma": cfg["gamma"], "c_lambda": c, "lambda": lam}
            blocks.append(("kernel", point, _map(
                lambda rep, lam=lam, point=point: _timed_row(
                    "sweep-n", METHOD_LABELS[method], n, point, rep,
                    lambda: kernel_value(datasets[rep], method, cfg["gamma"], lam, cfg["M"], cfg["rf_seed"]),
                    cfg["record_timing"]),
                range(cfg["reps"]), cfg["threads"])))
        for c in cfg["c_eps"]:
            eps = c / n**0.25
            point = {"c_eps": c, "eps": eps}
            blocks.append(("dm", point, _map(
                lambda rep, eps=eps, point=point: _timed_row(
                    "sweep-n", "diffusion_maps", n, point, rep,
                    lambda: estimate_poincare_dm(datasets[rep], DiffusionMapConfig(eps)).value,
                    cfg["record_timing"]),
                range(cfg["reps"]), cfg["threads"])))
        for family in ("kernel", "dm"):
            fam = [(p, r) for f, p, r in blocks if f == family]
            for _, r in fam:
                rows += r
            if oracle is not None:
                i = int(np.argmin([_mean_abs_err(r, oracle) for _, r in fam]))
            else:
                i = 0
            point, prow = fam[i]
            label = prow[0].method
            tuned[(n, label)] = point
            summary += _summaries(prow, "sweep-n", label, n, {**point, "tuned": 1}, oracle)
    return rows + summary, {"tuned": tuned}


def run_mixture_growth(cfg):
    method = cfg["method"]
    if method not in ("exact", "rf"):
        raise InputError("mixture-growth supports exact | rf")
    n = cfg["n"]
    lam = cfg["c_lambda"] / n ** cfg["lambda_exponent"]
    rows, medians = [], []
    for a in cfg["a_grid"]:
        def task(rep, a=a):
            X = sampling.two_gaussians(a, cfg["sigma"], n, data_seed(cfg["seed"], rep))
            return _timed_row("mixture-growth", METHOD_LABELS[method], n,
                              {"a": a, "sigma": cfg["sigma"], "gamma": cfg["gamma"], "lambda": lam}, rep,
                              lambda: kernel_value(X, method, cfg["gamma"], lam, cfg["M"], cfg["rf_seed"]),
                              cfg["record_timing"])
        arows = _map(task, range(cfg["reps"]), cfg["threads"])
        rows += arows
        ok = [r.estimate for r in arows if r.status == "ok"]
        med = float(np.median(ok)) if ok else float("nan")
        medians.append(med)
        rows.append(ResultRow("mixture-growth", METHOD_LABELS[method], n, {"a": a, "stat": "median"}, med, -1, None,
                              "summary"))
    fit = log_linear_fit(cfg["a_grid"], medians)
    for k in ("slope", "intercept", "r2"):
        rows.append(ResultRow("mixture-growth", METHOD_LABELS[method], n, {"stat": f"fit_{k}"}, fit[k], -1, None,
                              "summary"))
    return rows, {"medians": medians, "fit": fit}


def log_linear_fit(x, y):
    """Least-squares line through ``(x, log y)`` with its coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y) & (y > 0)
    x, ly = x[ok], np.log(y[ok])
    if x.size < 2:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan")}
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = ((ly - ly.mean()) ** 2).sum()
    r2 = 1.0 - (resid**2).sum() / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": float(r2)}


def make_rc_data(cfg):
    seed = data_seed(cfg["seed"], 0)
    n, s = cfg["n"], cfg["sigma"]
    kind = cfg["dataset"]
    if kind == "three_gaussians":
        return sampling.three_gaussians(n, s, seed)
    if kind == "two_gaussians":
        return sampling.sample_gaussian_mixture([0.5, 0.5], [[-1, 0], [1, 0]], s**2, n, seed)
    if kind == "isotropic":
        return sampling.sample_gaussian(np.zeros(2), np.eye(2), n, seed)
    if kind == "file":
        return load_csv_samples(cfg["data"])
    raise InputError(f"unknown dataset {kind!r}")


def run_learn_rc(cfg):
    if cfg["method"] != "rf":
        raise InputError("learn-rc uses the random-feature estimator (method = rf)")
    X = make_rc_data(cfg)
    n, d = X.shape
    lam = cfg["c_lambda"] / n
    seeds = np.random.SeedSequence([cfg["seed"], 1]).generate_state(2)
    model = learn_reaction_coordinate(
        X, p=cfg["p"], M=cfg["M"], lam=lam, steps=cfg["steps"], step_size=cfg["step_size"],
        restarts=cfg["restarts"], seed=int(seeds[0]), gamma=cfg["gamma"], backtracking=cfg["backtracking"])
    label = "random_features"
    rows = [ResultRow("learn-rc", label, n, {"stat": "restart_objective", "restart": r}, float(v), r)
            for r, v in enumerate(model.restart_values)]
    rows += [ResultRow("learn-rc", label, n, {"stat": "objective", "iteration": t}, float(v), model.best_restart)
             for t, v in model.objective_trace]
    rows += [ResultRow("learn-rc", label, n, {"stat": "A", "i": i, "j": j}, float(model.A[i, j]), model.best_restart)
             for i in range(model.A.shape[0]) for j in range(model.A.shape[1])]
    extra = {"model": model}
    if model.A.shape == (1, 2):
        angle = np.degrees(model.angle)
        rows.append(ResultRow("learn-rc", label, n, {"stat": "angle_deg"}, float(angle), model.best_restart))
        extra["angle_deg"] = float(angle)
    if cfg["sweep"] and d == 2 and cfg["p"] == 1:
        Xw, _ = whiten(X)
        thetas = np.pi * np.arange(cfg["sweep_points"]) / cfg["sweep_points"]
        curve = sweep_angle_1d(Xw, thetas, M=cfg["M"], lam=lam, seed=int(seeds[1]), gamma=cfg["gamma"])
        rows += [ResultRow("learn-rc", label, n, {"stat": "sweep", "theta": t}, v, 0) for t, v in curve]
        vals = np.array([v for _, v in curve])
        arg = float(np.degrees(thetas[int(np.argmax(vals))]))
        ratio = float(vals.max() / vals.min()) if vals.min() > 0 else float("inf")
        rows.append(ResultRow("learn-rc", label, n, {"stat": "sweep_argmax_deg"}, arg, 0, None, "summary"))
        rows.append(ResultRow("learn-rc", label, n, {"stat": "sweep_max_min_ratio"}, ratio, 0, None, "summary"))
        extra.update(sweep=curve, sweep_argmax_deg=arg, sweep_ratio=ratio)
    return rows, extra


def model_to_dict(model):
    out = {
        "A": model.A.tolist(),
        "lambda": model.lam,
        "objective_trace": [[t, v] for t, v in model.objective_trace],
        "restart_values": model.restart_values,
        "best_restart": model.best_restart,
        "v": model.v.tolist(),
        "features": {"W": model.fmap.W.tolist(), "b": model.fmap.b.tolist(), "gamma": model.fmap.gamma},
        "config": model.config,
    }
    if model.whitening is not None:
        out["whitening"] = {"mean": model.whitening.mean.tolist(),
                            "half_inv_cov": model.whitening.half_inv_cov.tolist()}
    if model.A.shape == (1, 2):
        out["angle_rad"] = recovered_angle(model.A)
    return out


def run_oracle(cfg):
    a, b = cfg["a"], cfg["b"]
    model = build_model(a, b, cfg["m"])
    rows = []
    table = {}
    for kappa in cfg["kappas"] + [k for k in cfg["check_kappas"] if k not in cfg["kappas"]]:
        value = regularized_poincare(model, kappa)
        table[kappa] = value
        if kappa in cfg["kappas"]:
            rows.append(ResultRow("oracle", "hermite_oracle", 0, {"a": a, "b": b, "m": cfg["m"], "kappa": kappa}, value))
    method = cfg["method"]
    variance = 1.0 / (4.0 * a)
    checks = []
    for kappa in cfg["check_kappas"]:
        for rep in range(cfg["reps"]):
            X = sampling.sample_gaussian([0.0], [[variance]], cfg["n_check"], data_seed(cfg["seed"], rep))
            est = kernel_value(X, method, b, kappa, cfg["M"], cfg["rf_seed"])
            rel = abs(est - table[kappa]) / table[kappa]
            checks.append((kappa, rep, est, rel))
            rows.append(ResultRow("oracle", METHOD_LABELS[method], cfg["n_check"],
                                  {"kappa": kappa, "oracle": table[kappa], "rel_err": rel}, est, rep))
    return rows, {"table": table, "checks": checks, "limit": 1.0 / (4.0 * a)}


def run_langevin_check(cfg):
    kind = cfg["potential"]
    if kind == "ou":
        v = cfg["variance"]
        pot = sampling.PotentialSpec.quadratic(v)

        def sampler(n, s):
            return sampling.sample_gaussian([0.0], [[v]], n, s)
        exact_constant = v
    elif kind == "double_well":
        a, s_ = cfg["mixture_a"], cfg["mixture_sigma"]
        pot = sampling.PotentialSpec.gaussian_mixture([0.5, 0.5], [[-a / 2], [a / 2]], s_**2)

        def sampler(n, s):
            return sampling.two_gaussians(a, s_, n, s)
        exact_constant = None
    else:
        raise InputError(f"unknown potential {kind!r}")

    seeds = np.random.SeedSequence([cfg["seed"], 2]).generate_state(2)
    n_est = cfg["n_estimate"]
    Xest = sampler(n_est, int(seeds[0]))
    p_hat = kernel_value(Xest, cfg["method"], cfg["gamma"], cfg["c_lambda"] / n_est, cfg["M"], cfg["rf_seed"])

    if cfg["t_points"] < 2:
        raise InputError("t_points must be at least 2")
    t_grid = np.linspace(0.0, cfg["t_max"], cfg["t_points"])
    dt = grid_step(t_grid[1] - t_grid[0], cfg["dt"])
    curve = sampling.variance_decay_experiment(pot, lambda x: x[:, 0], t_grid, cfg["n_outer"], cfg["n_inner"],
                                               dt, int(seeds[1]), sampler=sampler)
    var0 = curve.variances[0]
    rows = []
    for t, var, se in curve.rows():
        params = {"potential": kind, "t": t, "dt": dt, "se": se, "bound": float(var0 * np.exp(-2 * t / p_hat)),
                  "p_hat": p_hat}
        if exact_constant is not None:
            params["theory"] = float(exact_constant * np.exp(-2 * t / exact_constant))
        rows.append(ResultRow("langevin-check", "simulation", cfg["n_outer"], params, var))
    return rows, {"curve": curve, "p_hat": p_hat, "clamped": curve.clamped, "dt": dt}


def grid_step(spacing, dt_max):
    """Largest step not above ``dt_max`` that divides the time-grid spacing."""
    if dt_max <= 0 or spacing <= 0:
        raise InputError("dt and the time-grid spacing must be positive")
    return spacing / np.ceil(spacing / dt_max * (1 - 1e-12))


RUNNERS = {
    "estimate": run_estimate,
    "sweep-n": run_sweep_n,
    "mixture-growth": run_mixture_growth,
    "learn-rc": run_learn_rc,
    "oracle": run_oracle,
    "langevin-check": run_langevin_check,
}

# commands whose repetitions are a parameter sweep; failures there never change the exit code
SWEEPS = ("sweep-n", "mixture-growth")
