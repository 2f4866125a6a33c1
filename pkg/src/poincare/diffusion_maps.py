"""Diffusion-maps baseline for the Poincaré constant.

Affinities ``exp(-|x_j - x_k|^2 / (4 eps))`` are density-normalized with exponent ``alpha``
and row-normalized into a Markov matrix ``P``. ``(I - P) / eps`` approximates
``-(Laplacian + 2 (1 - alpha) grad log q . grad)`` for sampling density ``q``; with
``alpha = 1/2`` that is the negative Langevin generator of ``q``, whose spectral gap is the
inverse Poincaré constant.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import pdist, squareform

from .errors import InputError
from .estimator import PoincareEstimate
from .samples import as_samples

# lambda_2 this close to one means the graph is disconnected at working precision
DISCONNECTED_TOL = 1e-12


@dataclass(frozen=True)
class DiffusionMapConfig:
    epsilon: float
    alpha: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InputError("epsilon must be positive")
        if not 0 <= self.alpha <= 1:
            raise InputError("alpha must lie in [0, 1]")

    @classmethod
    def from_constant(cls, c_eps, n, alpha=0.5):
        """Bandwidth ``c_eps / n**(1/4)``."""
        return cls(epsilon=c_eps / n**0.25, alpha=alpha)


def markov_spectrum(X, cfg: DiffusionMapConfig, k=2):
    """Top ``k`` eigenvalues (descending) and right eigenvectors of the normalized operator."""
    X = as_samples(X)
    W = np.exp(-squareform(pdist(X, "sqeuclidean")) / (4.0 * cfg.epsilon))
    q = W.sum(axis=1)
    if cfg.alpha:
        qa = q**cfg.alpha
        W = W / qa[:, None] / qa[None, :]
    deg = W.sum(axis=1)
    s = 1.0 / np.sqrt(deg)
    S = s[:, None] * W * s[None, :]
    S = 0.5 * (S + S.T)
    n = S.shape[0]
    w, V = scipy.linalg.eigh(S, subset_by_index=[n - k, n - 1])
    w, V = w[::-1], V[:, ::-1]
    psi = s[:, None] * V
    psi /= np.linalg.norm(psi, axis=0)
    return w, psi


def estimate_poincare_dm(X, cfg: DiffusionMapConfig) -> PoincareEstimate:
    X = as_samples(X, min_rows=3)
    w, psi = markov_spectrum(X, cfg, k=2)
    lam2 = float(w[1])
    diagnostics = {"epsilon": cfg.epsilon, "alpha": cfg.alpha, "lambda_1": float(w[0]), "lambda_2": lam2}
    if lam2 >= 1.0 - DISCONNECTED_TOL:
        diagnostics["disconnected"] = 1.0
        value = np.inf
    else:
        gap = (1.0 - lam2) / cfg.epsilon
        diagnostics["spectral_gap"] = gap
        value = 1.0 / gap
    return PoincareEstimate(value=value, lam=0.0, method="diffusion_maps", eigvec=psi[:, 1], diagnostics=diagnostics)


def _max_curvature(x, y):
    if len(x) < 3:
        return 0
    dy = np.gradient(y, x)
    d2y = np.gradient(dy, x)
    curv = np.abs(d2y) / (1.0 + dy**2) ** 1.5
    return int(np.argmax(curv))


def bandwidth_grid_search(X, c_grid, oracle_value=None, alpha=0.5):
    """Pick ``c_eps`` for ``eps = c_eps / n**(1/4)``.

    With ``oracle_value`` the estimate closest to it wins. Without one, the point of
    maximal curvature of log-estimate against log-c is used; this is a heuristic.

    Returns ``(best_c, [(c, estimate), ...])``.
    """
    c_grid = [float(c) for c in c_grid]
    if not c_grid:
        raise InputError("empty bandwidth grid")
    X = as_samples(X, min_rows=3)
    n = X.shape[0]
    curve = [(c, estimate_poincare_dm(X, DiffusionMapConfig.from_constant(c, n, alpha)).value) for c in c_grid]
    if len(curve) == 1:
        return curve[0][0], curve
    finite = [(c, e) for c, e in curve if np.isfinite(e) and e > 0]
    if not finite:
        return curve[0][0], curve
    if oracle_value is not None:
        return min(finite, key=lambda t: abs(t[1] - oracle_value))[0], curve
    order = sorted(finite)
    idx = _max_curvature(np.log([c for c, _ in order]), np.log([e for _, e in order]))
    return order[idx][0], curve
