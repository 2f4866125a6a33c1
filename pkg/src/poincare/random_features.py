"""Random Fourier features for the Gaussian kernel and the feature-space estimator.

For ``K(x, y) = exp(-gamma |x - y|^2)`` the spectral measure is ``N(0, 2 gamma I)``, so with
``w_m ~ N(0, 2 gamma I)`` and ``b_m ~ U[0, 2 pi)`` the features
``phi_m(x) = sqrt(2/M) cos(w_m^T x + b_m)`` satisfy ``phi(x)^T phi(y) ~ K(x, y)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError
from .estimator import PoincareEstimate, lambda_schedule
from .samples import as_samples


@dataclass(frozen=True)
class RandomFeatureMap:
    """Frozen frequencies ``W`` (M x dim) and phases ``b`` (M,)."""

    W: np.ndarray
    b: np.ndarray
    gamma: float

    @property
    def M(self):
        return self.W.shape[0]

    @property
    def dim(self):
        return self.W.shape[1]

    @property
    def scale(self):
        return np.sqrt(2.0 / self.M)


@dataclass
class FeatureMatrices:
    C: np.ndarray
    D: np.ndarray


def sample_features(dim, M, gamma=1.0, seed=0, antithetic=False) -> RandomFeatureMap:
    """Draw a feature map.

    With ``antithetic=True`` the frequencies come in pairs ``(w, b), (-w, b)``; the feature
    set is then mapped onto itself by ``x -> -x``, which makes every downstream quantity
    exactly invariant under a sign flip of the input. ``M`` must be even in that case.
    """
    if dim < 1 or M < 1:
        raise InputError("dim and M must be positive")
    if not gamma > 0:
        raise InputError("gamma must be positive")
    rng = np.random.default_rng(seed)
    std = np.sqrt(2.0 * gamma)
    if antithetic:
        if M % 2:
            raise InputError("antithetic sampling needs an even number of features")
        half = std * rng.standard_normal((M // 2, dim))
        b_half = rng.uniform(0.0, 2 * np.pi, size=M // 2)
        W = np.concatenate([half, -half])
        b = np.concatenate([b_half, b_half])
    else:
        W = std * rng.standard_normal((M, dim))
        b = rng.uniform(0.0, 2 * np.pi, size=M)
    return RandomFeatureMap(W=W, b=b, gamma=float(gamma))


def _check_dims(fmap, X):
    X = as_samples(X, min_rows=1)
    if X.shape[1] != fmap.dim:
        raise InputError(f"samples have {X.shape[1]} columns, feature map expects {fmap.dim}")
    return X


def _phases(fmap, X):
    return X @ fmap.W.T + fmap.b


def featurize(fmap: RandomFeatureMap, X) -> np.ndarray:
    X = _check_dims(fmap, X)
    return fmap.scale * np.cos(_phases(fmap, X))


def featurize_grad(fmap: RandomFeatureMap, X) -> np.ndarray:
    """Input gradients of the features, shape ``(n, M, dim)``."""
    X = _check_dims(fmap, X)
    s = -fmap.scale * np.sin(_phases(fmap, X))
    return s[:, :, None] * fmap.W[None, :, :]


def build_feature_matrices(Phi, Gamma) -> FeatureMatrices:
    """Centered feature covariance ``C`` and Dirichlet matrix ``D``.

    ``C = Phi^T Phi / n - mean mean^T`` and ``D = (1/n) sum_i sum_l Gamma[i, :, l] Gamma[i, :, l]^T``.
    """
    Phi = np.asarray(Phi, dtype=float)
    Gamma = np.asarray(Gamma, dtype=float)
    if Phi.ndim != 2 or Gamma.ndim != 3 or Gamma.shape[:2] != Phi.shape:
        raise InputError(f"inconsistent shapes {Phi.shape} and {Gamma.shape}")
    n = Phi.shape[0]
    Pc = Phi - Phi.mean(axis=0)
    C = Pc.T @ Pc / n
    G2 = Gamma.transpose(0, 2, 1).reshape(-1, Gamma.shape[1])
    D = G2.T @ G2 / n
    return FeatureMatrices(C=0.5 * (C + C.T), D=0.5 * (D + D.T))


def generalized_eig_max(Anum, Bden):
    """Maximize ``v^T A v / v^T B v`` for symmetric ``A`` and SPD ``B``.

    Returns the maximal ratio and a maximizer normalized so that ``v^T B v = 1``.
    """
    A = np.asarray(Anum, dtype=float)
    B = np.asarray(Bden, dtype=float)
    try:
        L = scipy.linalg.cholesky(B, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"denominator matrix is not positive definite: {exc}") from exc
    tmp = scipy.linalg.solve_triangular(L, A, lower=True)
    At = scipy.linalg.solve_triangular(L, tmp.T, lower=True)
    At = 0.5 * (At + At.T)
    m = At.shape[0]
    w, Y = scipy.linalg.eigh(At, subset_by_index=[m - 1, m - 1])
    v = scipy.linalg.solve_triangular(L.T, Y[:, 0], lower=False)
    return float(w[0]), v


def rf_problem(X, fmap, lam):
    """Matrices of the feature-space Rayleigh quotient: ``(C, D + lam I)``."""
    mats = build_feature_matrices(featurize(fmap, X), featurize_grad(fmap, X))
    B = mats.D.copy()
    B[np.diag_indices_from(B)] += lam
    return mats.C, B


def estimate_poincare_rf(X, fmap: RandomFeatureMap, lam=None) -> PoincareEstimate:
    X = _check_dims(fmap, X)
    if lam is None:
        lam = lambda_schedule(X.shape[0])
    if not lam > 0:
        raise InputError("lambda must be positive")
    C, B = rf_problem(X, fmap, lam)
    value, v = generalized_eig_max(C, B)
    diagnostics = {"n": float(X.shape[0]), "M": float(fmap.M), "gamma": fmap.gamma}
    if value < 0:
        diagnostics["clamped"] = 1.0
        value = 0.0
    nv = np.linalg.norm(v)
    eigvec = v / nv if nv > 0 else v
    return PoincareEstimate(value=value, lam=float(lam), method="random_features", eigvec=eigvec, diagnostics=diagnostics)
