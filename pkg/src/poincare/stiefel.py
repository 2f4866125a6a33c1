"""Linear reaction coordinates by ascent on the Stiefel manifold.

A reaction coordinate ``xi(x) = A x`` with ``A A^T = I_p`` is scored by the random-feature
Poincaré estimate of the projected samples,

    F(A, v) = v^T C_A v / v^T (D_A + lam I) v,

and learned by alternating an exact maximization in ``v`` (generalized eigenproblem) with
one retracted Riemannian gradient step in ``A``.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InputError, NumericalError
from .estimator import lambda_schedule
from .random_features import (
    RandomFeatureMap,
    estimate_poincare_rf,
    generalized_eig_max,
    rf_problem,
    sample_features,
)
from .samples import as_samples

logger = logging.getLogger(__name__)


@dataclass
class WhitenTransform:
    mean: np.ndarray
    half_inv_cov: np.ndarray

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        return (X - self.mean) @ self.half_inv_cov.T


@dataclass
class ReactionCoordinateModel:
    """Result of :func:`learn_reaction_coordinate`.

    ``A`` acts on whitened samples; ``whitening`` maps raw samples to that space.
    """

    A: np.ndarray
    objective_trace: List[Tuple[int, float]]
    v: np.ndarray
    fmap: RandomFeatureMap
    lam: float
    whitening: Optional[WhitenTransform] = None
    restart_values: List[float] = field(default_factory=list)
    best_restart: int = 0
    config: dict = field(default_factory=dict)

    @property
    def value(self):
        return self.objective_trace[-1][1]

    @property
    def angle(self):
        """Direction angle in ``[0, pi)`` for a single row in the plane."""
        if self.A.shape != (1, 2):
            raise InputError("angle is defined for p = 1, d = 2 only")
        return recovered_angle(self.A)

    def transform(self, X):
        """Reaction coordinate values of raw samples."""
        if self.whitening is not None:
            X = self.whitening.apply(X)
        return np.asarray(X, dtype=float) @ self.A.T


def recovered_angle(A):
    return float(np.mod(np.arctan2(A[0, 1], A[0, 0]), np.pi))


def whiten(X) -> Tuple[np.ndarray, WhitenTransform]:
    """Center and rescale to identity covariance (``1/n`` normalization).

    Uses the symmetric inverse square root, so principal directions are kept.
    """
    X = as_samples(X)
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / X.shape[0]
    w, V = np.linalg.eigh(cov)
    if w[0] <= 1e-12 * w[-1]:
        raise InputError(
            "sample covariance is singular; reduce dimension (e.g. drop constant "
            "directions with PCA) before whitening"
        )
    half_inv = (V / np.sqrt(w)) @ V.T
    half_inv = 0.5 * (half_inv + half_inv.T)
    T = WhitenTransform(mean=mean, half_inv_cov=half_inv)
    return T.apply(X), T


def _check_stiefel(A, d=None):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InputError("A must be a 2-D array")
    if d is not None and A.shape[1] != d:
        raise InputError(f"A has {A.shape[1]} columns, samples have {d}")
    return A


def project_samples(X, A) -> np.ndarray:
    X = as_samples(X, min_rows=1)
    A = _check_stiefel(A, X.shape[1])
    return X @ A.T


def random_stiefel(p, d, rng) -> np.ndarray:
    """Uniform point on the Stiefel manifold from an orthonormalized Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((d, p)))
    Q = Q * np.sign(np.diag(R))
    return Q.T


def _check_v(v):
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise InputError("v must be nonzero")
    return v


def objective_F(A, v, X, fmap, lam) -> float:
    v = _check_v(v)
    C, B = rf_problem(project_samples(X, A), fmap, lam)
    return float((v @ C @ v) / (v @ B @ v))


def inner_solve(A, X, fmap, lam):
    """``(max_v F(A, v), argmax)``."""
    C, B = rf_problem(project_samples(X, A), fmap, lam)
    return generalized_eig_max(C, B)


def inner_solve_v(A, X, fmap, lam) -> np.ndarray:
    return inner_solve(A, X, fmap, lam)[1]


def euclid_grad_A(A, v, X, fmap: RandomFeatureMap, lam) -> np.ndarray:
    """Euclidean gradient of ``F(A, v)`` in ``A`` at fixed ``v``.

    With ``f(y) = sum_m v_m phi_m(y)`` evaluated at ``y_i = A x_i``, the chain rule gives
    ``d f(y_i)/dA = grad f(y_i) x_i^T`` and ``d |grad f(y_i)|^2 / dA = 2 Hess f(y_i) grad f(y_i) x_i^T``.
    """
    v = _check_v(v)
    X = as_samples(X, min_rows=1)
    A = _check_stiefel(A, X.shape[1])
    n = X.shape[0]
    W, s = fmap.W, fmap.scale
    theta = X @ A.T @ W.T + fmap.b  # (n, M)
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    f = s * cos_t @ v  # (n,)
    grads = -s * (sin_t * v) @ W  # (n, p)
    fc = f - f.mean()

    num = fc @ fc / n
    den = np.einsum("ip,ip->", grads, grads) / n + lam * (v @ v)

    dnum = 2.0 / n * (fc[:, None] * grads).T @ X
    # Hess f(y_i) grad f(y_i) = -s sum_m v_m cos(theta_im) (w_m . grad_i) w_m
    coef = -s * cos_t * v * (grads @ W.T)  # (n, M)
    hg = coef @ W  # (n, p)
    dden = 2.0 / n * hg.T @ X

    F = num / den
    return (dnum - F * dden) / den


def tangent_project(A, G) -> np.ndarray:
    """Projection onto the tangent space ``{xi : xi A^T + A xi^T = 0}``."""
    A = np.asarray(A, dtype=float)
    G = np.asarray(G, dtype=float)
    if A.shape != G.shape:
        raise InputError(f"shape mismatch {A.shape} vs {G.shape}")
    S = G @ A.T
    return G - 0.5 * (S + S.T) @ A


def retract(A, xi, step=1.0) -> np.ndarray:
    """QR retraction of ``A + step * xi`` back onto the manifold (positive-diagonal ``R``)."""
    A = np.asarray(A, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if step == 0 or not np.any(xi):
        return A.copy()
    Y = A + step * xi
    Q, R = np.linalg.qr(Y.T)
    diag = np.diag(R)
    if np.min(np.abs(diag)) <= 1e-12 * max(np.max(np.abs(diag)), 1e-300):
        raise NumericalError("A + step * xi is rank deficient; use a smaller step")
    return (Q * np.sign(diag)).T


def stiefel_defect(A) -> float:
    A = np.asarray(A, dtype=float)
    return float(np.linalg.norm(A @ A.T - np.eye(A.shape[0])))


def _ascend(X, A, fmap, lam, steps, step_size, backtracking, max_halvings=20, callback=None):
    value, v = inner_solve(A, X, fmap, lam)
    trace = [(0, value)]
    if callback is not None:
        callback(0, A, value)
    for t in range(1, steps + 1):
        xi = tangent_project(A, euclid_grad_A(A, v, X, fmap, lam))
        eta = step_size
        moved = False
        for _ in range(max_halvings + 1):
            try:
                A_new = retract(A, xi, eta)
            except NumericalError:
                eta *= 0.5
                continue
            new_value, new_v = inner_solve(A_new, X, fmap, lam)
            if not backtracking or new_value >= value:
                A, value, v = A_new, new_value, new_v
                moved = True
                break
            eta *= 0.5
        trace.append((t, value))
        if callback is not None:
            callback(t, A, value)
        if not moved:
            logger.debug("no ascent after %d halvings at iteration %d", max_halvings, t)
    return A, v, trace


def learn_reaction_coordinate(
    X,
    p=1,
    M=200,
    lam=None,
    steps=100,
    step_size=0.1,
    restarts=5,
    seed=0,
    gamma=1.0,
    backtracking=True,
    whiten_data=True,
    callback=None,
) -> ReactionCoordinateModel:
    """Find ``A`` on the Stiefel manifold maximizing the estimated constant of ``A x``.

    Each restart draws its own antithetic feature map over ``R^p`` and a random starting
    point, both held fixed across its iterations. The restart with the largest final
    objective wins (lowest index on ties within 1e-12).

    ``callback(restart, iteration, A, value)``, if given, is called on every iterate.
    """
    X = as_samples(X)
    n, d = X.shape
    if not 1 <= p < d:
        raise InputError(f"need 1 <= p < d, got p={p}, d={d}")
    transform = None
    if whiten_data:
        X, transform = whiten(X)
    if lam is None:
        lam = lambda_schedule(n)
    config = dict(p=p, M=M, lam=lam, steps=steps, step_size=step_size, restarts=restarts, seed=seed, gamma=gamma,
                  backtracking=backtracking)

    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    finals = []
    for r, child in enumerate(children):
        feat_seed, start_seed = child.spawn(2)
        fmap = sample_features(p, M, gamma, seed=feat_seed, antithetic=True)
        A0 = random_stiefel(p, d, np.random.default_rng(start_seed))
        hook = None if callback is None else (lambda t, A_t, val, r=r: callback(r, t, A_t, val))
        A, v, trace = _ascend(X, A0, fmap, lam, steps, step_size, backtracking, callback=hook)
        final = trace[-1][1]
        finals.append(final)
        logger.info("restart %d: objective %.6g", r, final)
        if best is None or final > best[0] + 1e-12:
            best = (final, r, A, v, trace, fmap)
    _, r, A, v, trace, fmap = best
    return ReactionCoordinateModel(A=A, objective_trace=trace, v=v, fmap=fmap, lam=float(lam), whitening=transform,
                                   restart_values=finals, best_restart=r, config=config)


def sweep_angle_1d(X, thetas, M=200, lam=None, seed=0, gamma=1.0):
    """RF estimate of the samples projected on ``(cos t, sin t)`` for each angle ``t``.

    One antithetic feature map is shared by all angles, so values at ``t`` and ``t + pi``
    coincide.
    """
    X = as_samples(X)
    if X.shape[1] != 2:
        raise InputError("angle sweep needs two-dimensional samples")
    if lam is None:
        lam = lambda_schedule(X.shape[0])
    fmap = sample_features(1, M, gamma, seed=seed, antithetic=True)
    out = []
    for t in thetas:
        A = np.array([[np.cos(t), np.sin(t)]])
        out.append((float(t), estimate_poincare_rf(X @ A.T, fmap, lam).value))
    return out
