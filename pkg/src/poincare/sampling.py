"""Benchmark samplers and overdamped Langevin simulation.

The Langevin diffusion ``dX = -grad V(X) dt + sqrt(2) dB`` has the Gibbs measure
``exp(-V)`` as its stationary law; it is discretized by Euler-Maruyama.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import InputError, NumericalError

# any |state| beyond this aborts a simulation
BLOW_UP = 1e8
# Gaussian increments are drawn this many steps at a time
NOISE_BLOCK = 4096


@dataclass
class PotentialSpec:
    """Potential ``V`` through its gradient.

    ``gradient`` maps an ``(B, d)`` batch of states to the ``(B, d)`` batch of gradients.
    """

    kind: str
    dim: int
    gradient: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.gradient(x[None, :])[0]
        return self.gradient(x)

    @classmethod
    def quadratic(cls, variance=1.0, dim=1):
        """``V(x) = |x|^2 / (2 variance)``, the Ornstein-Uhlenbeck potential of ``N(0, variance I)``."""
        if not variance > 0:
            raise InputError("variance must be positive")
        return cls("quadratic", dim, lambda x: x / variance, {"variance": float(variance)})

    @classmethod
    def gaussian_mixture(cls, weights, means, covs):
        """``V = -log sum_k w_k N(x; m_k, S_k)``."""
        weights, means, covs = _check_mixture(weights, means, covs)
        precisions = np.linalg.inv(covs)
        log_norm = np.log(weights) - 0.5 * np.linalg.slogdet(covs)[1]

        def gradient(x):
            diff = x[:, None, :] - means[None, :, :]  # (B, K, d)
            pdiff = np.einsum("kij,bkj->bki", precisions, diff)
            logp = log_norm[None, :] - 0.5 * np.einsum("bki,bki->bk", diff, pdiff)
            resp = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
            return np.einsum("bk,bki->bi", resp, pdiff)

        return cls("gaussian_mixture_neglog", means.shape[1], gradient,
                   {"weights": weights, "means": means, "covs": covs})

    @classmethod
    def custom(cls, gradient, dim):
        return cls("custom", dim, gradient)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float
    seed: int


def _check_cov(cov, d):
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (d, d) or not np.allclose(cov, cov.T):
        raise InputError("covariance must be a symmetric d x d matrix")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise InputError("covariance is not positive definite") from exc


def _check_mixture(weights, means, covs):
    weights = np.asarray(weights, dtype=float).ravel()
    means = np.asarray(means, dtype=float)
    if means.ndim == 1:
        means = means[:, None]
    K, d = means.shape
    covs = np.asarray(covs, dtype=float)
    if covs.ndim == 0:
        covs = np.broadcast_to(covs * np.eye(d), (K, d, d))
    elif covs.ndim == 1:
        covs = np.stack([c * np.eye(d) for c in covs])
    elif covs.ndim == 2:
        covs = np.broadcast_to(covs, (K, d, d))
    covs = np.array(covs)
    if weights.shape != (K,) or covs.shape != (K, d, d):
        raise InputError("weights, means and covariances disagree on the number of components")
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
        raise InputError("mixture weights must be nonnegative and sum to one")
    for c in covs:
        _check_cov(c, d)
    return weights, means, covs


def sample_gaussian(mean, cov, n, seed=0) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    L = _check_cov(cov, mean.shape[0])
    rng = np.random.default_rng(seed)
    return mean + rng.standard_normal((n, mean.shape[0])) @ L.T


def sample_gaussian_mixture(weights, means, covs, n, seed=0) -> np.ndarray:
    """I.i.d. draws of a Gaussian mixture.

    ``covs`` may be a scalar variance, one variance per component, one shared matrix or a
    stack of matrices. A single component is drawn exactly as :func:`sample_gaussian`.
    """
    weights, means, covs = _check_mixture(weights, means, covs)
    if len(weights) == 1:
        return sample_gaussian(means[0], covs[0], n, seed)
    rng = np.random.default_rng(seed)
    labels = rng.choice(len(weights), size=n, p=weights)
    z = rng.standard_normal((n, means.shape[1]))
    chols = np.linalg.cholesky(covs)
    return means[labels] + np.einsum("nij,nj->ni", chols[labels], z)


def two_gaussians(a, sigma=0.1, n=500, seed=0) -> np.ndarray:
    """Equal mixture of ``N(-a/2, sigma^2)`` and ``N(a/2, sigma^2)`` on the line."""
    return sample_gaussian_mixture([0.5, 0.5], [[-a / 2], [a / 2]], sigma**2, n, seed)


def three_gaussians(n=200, sigma=0.1, seed=0) -> np.ndarray:
    """Equal mixture with means (0, 0), (1, 1), (2, 2) and covariance ``sigma^2 I``."""
    w = np.full(3, 1 / 3)
    return sample_gaussian_mixture(w, [[0, 0], [1, 1], [2, 2]], sigma**2, n, seed)


def sample_exponential(n, seed=0) -> np.ndarray:
    return np.random.default_rng(seed).exponential(size=(n, 1))


def _check_block(states, offset):
    bad = ~np.isfinite(states).all(axis=1) | (np.abs(states).max(axis=1) > BLOW_UP)
    if bad.any():
        _check_state(states[int(np.argmax(bad))], offset + int(np.argmax(bad)) + 1)


def _check_state(x, k):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOW_UP:
        raise NumericalError(f"Langevin state blew up at step {k}", residual=float(k))


def langevin_euler_maruyama(pot: PotentialSpec, x0, dt, steps, seed=0, noise_on=True) -> Trajectory:
    """Single Euler-Maruyama path ``X_{k+1} = X_k - grad V(X_k) dt + sqrt(2 dt) xi_k``."""
    if not dt > 0:
        raise InputError("dt must be positive")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    states = np.empty((steps + 1, x.shape[0]))
    states[0] = x
    rng = np.random.default_rng(seed) if noise_on else None
    sq = np.sqrt(2.0 * dt)
    grad = pot.gradient
    x = x[None, :]
    for start in range(0, steps, NOISE_BLOCK):
        stop = min(start + NOISE_BLOCK, steps)
        # one block draw yields the same stream as per-step draws
        noise = sq * rng.standard_normal((stop - start, x.shape[1])) if noise_on else None
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(start, stop):
                x = x - grad(x) * dt
                if noise_on:
                    x = x + noise[k - start]
                states[k + 1] = x[0]
        _check_block(states[start + 1:stop + 1], start)
    return Trajectory(times=dt * np.arange(steps + 1), states=states, dt=float(dt), seed=seed)


def simulate_ensemble(pot: PotentialSpec, X0, dt, steps, seed=0, record_steps=None, noise_on=True):
    """Advance a batch of independent paths.

    The noise of path ``j`` at step ``k`` is entry ``j`` of a draw seeded by ``(seed, k)``,
    so it does not depend on how the batch is processed.

    Returns a dict mapping each recorded step to the ``(B, d)`` states (default: last step).
    """
    if not dt > 0:
        raise InputError("dt must be positive")
    X = np.array(X0, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    record = {steps} if record_steps is None else set(int(s) for s in record_steps)
    out = {}
    if 0 in record:
        out[0] = X.copy()
    sq = np.sqrt(2.0 * dt)
    for k in range(steps):
        X = X - pot.grad(X) * dt
        if noise_on:
            X += sq * np.random.default_rng([seed, k]).standard_normal(X.shape)
        _check_state(X, k + 1)
        if k + 1 in record:
            out[k + 1] = X.copy()
    return out


def langevin_sample(pot: PotentialSpec, n, dt=1e-2, seed=0, burn_in=10_000, thin=10, x0=None) -> np.ndarray:
    """Approximate draws from ``exp(-V)`` by one long thinned Langevin chain."""
    x0 = np.zeros(pot.dim) if x0 is None else x0
    traj = langevin_euler_maruyama(pot, x0, dt, burn_in + n * thin, seed)
    return traj.states[burn_in + thin::thin][:n]


@dataclass
class DecayCurve:
    times: np.ndarray
    variances: np.ndarray
    std_errors: np.ndarray
    clamped: int

    def rows(self):
        return list(zip(self.times.tolist(), self.variances.tolist(), self.std_errors.tolist()))


def variance_decay_experiment(pot, f, t_grid, n_outer, n_inner, dt, seed=0, sampler: Optional[Callable] = None,
                              burn_in=10_000, thin=10) -> DecayCurve:
    """Nested Monte Carlo estimate of ``Var_mu(P_t f)`` on a time grid.

    Starts ``x0 ~ mu`` come from ``sampler(n, seed)`` or, without one, from a long Langevin
    chain. For each start ``n_inner`` paths estimate ``P_t f(x0)``; the variance of those
    inner means is biased upward by the inner noise, so the mean inner sample variance
    divided by ``n_inner`` is subtracted. Negative corrected values are clamped to zero.
    """
    if n_outer < 2 or n_inner < 1:
        raise InputError("need n_outer >= 2 and n_inner >= 1")
    ss = np.random.SeedSequence(seed)
    start_seed, path_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    if sampler is not None:
        starts = np.asarray(sampler(n_outer, start_seed), dtype=float)
    else:
        starts = langevin_sample(pot, n_outer, dt, start_seed, burn_in, thin)
    if starts.ndim == 1:
        starts = starts[:, None]

    t_grid = np.asarray(t_grid, dtype=float)
    step_idx = np.rint(t_grid / dt).astype(int)
    if np.any(np.abs(step_idx * dt - t_grid) > 1e-9 * np.maximum(1.0, t_grid)):
        raise InputError("every time on the grid must be a multiple of dt")
    paths = np.repeat(starts, n_inner, axis=0)
    states = simulate_ensemble(pot, paths, dt, int(step_idx.max()), path_seed, record_steps=step_idx)

    variances, errors = [], []
    clamped = 0
    for k in step_idx:
        vals = np.asarray(f(states[k]), dtype=float).reshape(n_outer, n_inner)
        means = vals.mean(axis=1)
        inner_var = vals.var(axis=1, ddof=1) if n_inner > 1 else np.zeros(n_outer)
        per_start = (means - means.mean()) ** 2 * n_outer / (n_outer - 1) - inner_var / n_inner
        est = per_start.mean()
        if est < 0:
            clamped += 1
            est = 0.0
        variances.append(est)
        errors.append(per_start.std(ddof=1) / np.sqrt(n_outer))
    return DecayCurve(times=t_grid, variances=np.array(variances), std_errors=np.array(errors), clamped=clamped)
