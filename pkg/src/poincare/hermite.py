"""Closed-form regularized Poincaré constant of a 1-D Gaussian under a Gaussian kernel.

The target is ``N(0, 1/(4a))`` and the kernel ``exp(-b (x - y)^2)``. In the basis

    f_i(x) = (c/a)^{1/4} (2^i i!)^{-1/2} exp(-(c - a) x^2) H_i(sqrt(2c) x),   c = sqrt(a^2 + 2ab),

which is orthonormal in ``L^2(mu)`` and orthogonal in the RKHS with ``|f_i|_H^2 = 1/lambda_i``,
variance, Dirichlet energy and RKHS norm are all explicit quadratic forms. The regularized
constant ``P_kappa`` solves

    1/P_kappa = inf_alpha alpha^T (M^T M + kappa Diag(lambda)^{-1}) alpha / alpha^T (I - eta eta^T) alpha

over the first ``2m + 2`` coefficients.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError

# inverse eigenvalues of the kernel operator beyond this are capped
PENALTY_CAP = 1e300


def gaussian_params(variance, gamma):
    """Map a target variance and kernel bandwidth to ``(a, b)``.

    A unit-variance target is ``a = 1/4``; the kernel exponent ``b`` is ``gamma``.
    """
    if not (variance > 0 and gamma > 0):
        raise InputError("variance and gamma must be positive")
    return 1.0 / (4.0 * variance), float(gamma)


@dataclass
class HermiteModel:
    a: float
    b: float
    c: float
    u: float
    m: int
    lambda_vec: np.ndarray
    eta: np.ndarray
    mtm: np.ndarray

    @property
    def size(self):
        return 2 * self.m + 2

    @property
    def log_lambda(self):
        i = np.arange(self.size)
        return 0.5 * np.log(2 * self.a / (self.a + self.b + self.c)) + i * np.log(self.u)


@dataclass
class TruncatedNu:
    nu: np.ndarray


def _ratio_sequence(first, u, m, offset):
    """``first * prod_{j<k} u sqrt((2j+1+offset)(2j+2+offset)) / (2(j+1))`` for k = 0..m."""
    k = np.arange(m)
    log_steps = np.log(u) + 0.5 * (np.log(2 * k + 1 + offset) + np.log(2 * k + 2 + offset)) - np.log(2 * (k + 1))
    return first * np.exp(np.concatenate([[0.0], np.cumsum(log_steps)]))


def build_model(a, b, m=60) -> HermiteModel:
    if not (a > 0 and b > 0):
        raise InputError("a and b must be positive")
    if int(m) != m or m < 2:
        raise InputError("m must be an integer >= 2")
    m = int(m)
    c = np.sqrt(a * a + 2 * a * b)
    u = b / (a + b + c)
    size = 2 * m + 2
    i = np.arange(size)

    lambda_vec = np.sqrt(2 * a / (a + b + c)) * u**i

    eta = np.zeros(size)
    eta0 = (c / a) ** 0.25 * np.sqrt(2 * a / (a + c))
    eta[0::2] = _ratio_sequence(eta0, u, m, offset=0)

    mtm = np.diag((2 * i * (a * a + c * c) + (a - c) ** 2) / c)
    off = (a * a - c * c) * np.sqrt((i[:-2] + 1) * (i[:-2] + 2)) / c
    mtm[i[:-2], i[:-2] + 2] = off
    mtm[i[:-2] + 2, i[:-2]] = off
    return HermiteModel(a=float(a), b=float(b), c=float(c), u=float(u), m=m, lambda_vec=lambda_vec, eta=eta, mtm=mtm)


def truncated_nu(model: HermiteModel) -> TruncatedNu:
    """Coefficients of ``f(x) = x`` in the basis, truncated at index ``2m + 1``."""
    a, c = model.a, model.c
    nu = np.zeros(model.size)
    nu1 = (c / a) ** 0.25 * np.sqrt(a) / (2 * c) * (2 * c / (a + c)) ** 1.5
    nu[1::2] = _ratio_sequence(nu1, model.u, model.m, offset=1)
    return TruncatedNu(nu=nu)


def _numerator(model, kappa):
    with np.errstate(over="ignore"):
        penalty = kappa * np.exp(-model.log_lambda)
    if np.any(~np.isfinite(penalty) | (penalty > PENALTY_CAP)):
        warnings.warn("kappa / lambda_i overflows; capping penalties, reduce m", RuntimeWarning, stacklevel=3)
        penalty = np.minimum(np.nan_to_num(penalty, posinf=PENALTY_CAP), PENALTY_CAP)
    N = model.mtm.copy()
    N[np.diag_indices_from(N)] += penalty
    return N


def regularized_poincare(model: HermiteModel, kappa) -> float:
    """Regularized Poincaré constant ``P_kappa`` in the truncated basis.

    The direction of ``eta`` (the constant function) is removed by a Householder
    reflection and its coefficient is eliminated exactly via the Schur complement, so
    the denominator is the identity on the remaining coordinates. ``P_kappa`` is then
    the largest eigenvalue of the inverse Schur complement, read off from its Cholesky
    factor so that the huge penalties on high-order coefficients do not swamp it.
    """
    if not kappa > 0:
        raise InputError("kappa must be positive")
    N = _numerator(model, kappa)

    eta_hat = model.eta / np.linalg.norm(model.eta)
    v = eta_hat.copy()
    v[0] += np.copysign(1.0, v[0])
    v /= np.linalg.norm(v)
    # H = I - 2 v v^T maps eta_hat to -sign(eta_0) e_0
    Nv = N @ v
    HNH = N - 2 * np.outer(v, Nv) - 2 * np.outer(Nv, v) + 4 * (v @ Nv) * np.outer(v, v)
    n00 = HNH[0, 0]
    S = HNH[1:, 1:] - np.outer(HNH[1:, 0], HNH[0, 1:]) / n00
    S = 0.5 * (S + S.T)
    try:
        L = scipy.linalg.cholesky(S, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Schur complement is not positive definite: {exc}") from exc
    Linv = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    p_kappa = float(np.linalg.norm(Linv, 2) ** 2)

    nu = truncated_nu(model).nu
    bound = (nu @ N @ nu) / (nu @ nu)
    if 1.0 / p_kappa > bound * (1 + 1e-8):
        raise NumericalError(
            f"minimum ratio {1 / p_kappa:.6g} exceeds its value at the truncated optimum {bound:.6g}",
            residual=1.0 / p_kappa - bound,
        )
    return p_kappa
