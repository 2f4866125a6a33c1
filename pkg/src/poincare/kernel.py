"""Gaussian kernel ``K(x, y) = exp(-gamma * |x - y|^2)`` and its derivative Gram blocks.

Flat indices of ``n * d`` sized objects are sample-major: the entry for sample ``j`` and
coordinate ``i`` sits at ``j * d + i``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .samples import as_samples


@dataclass(frozen=True)
class GaussianKernelConfig:
    gamma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InputError(f"gamma must be a positive finite real, got {self.gamma!r}")


@dataclass
class GramBlocks:
    """Gram blocks of the kernel sections and their partial derivatives, scaled by ``1/n``.

    Attributes
    ----------
    kk : ndarray, shape (n, n)
        ``K(x_j, x_k) / n``.
    kg : ndarray, shape (n, n*d)
        ``d/dy^i K(x_j, x_k) / n`` at row ``j``, column ``k*d + i``.
    gg : ndarray, shape (n*d, n*d)
        ``d/dx^i d/dy^i' K(x_j, x_k) / n`` at row ``j*d + i``, column ``k*d + i'``.
    """

    kk: np.ndarray
    kg: np.ndarray
    gg: np.ndarray


def _pair(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return x, y


def eval(x, y, cfg=GaussianKernelConfig()) -> float:  # noqa: A001
    x, y = _pair(x, y)
    diff = x - y
    return float(np.exp(-cfg.gamma * (diff @ diff)))


def grad_y(x, y, cfg=GaussianKernelConfig()) -> np.ndarray:
    """Gradient of ``K(x, y)`` in its second argument: ``2 gamma (x - y) K(x, y)``."""
    x, y = _pair(x, y)
    diff = x - y
    return 2.0 * cfg.gamma * diff * np.exp(-cfg.gamma * (diff @ diff))


def cross_hessian(x, y, cfg=GaussianKernelConfig()) -> np.ndarray:
    """Mixed second derivatives ``d^2 K / dx^i dy^j``."""
    x, y = _pair(x, y)
    g = cfg.gamma
    diff = x - y
    k = np.exp(-g * (diff @ diff))
    return (2.0 * g * np.eye(x.shape[0]) - 4.0 * g * g * np.outer(diff, diff)) * k


def assemble_gram_blocks(X, cfg=GaussianKernelConfig()) -> GramBlocks:
    X = as_samples(X)
    n, d = X.shape
    g = cfg.gamma
    # diff[j, k] = x_j - x_k
    diff = X[:, None, :] - X[None, :, :]
    K = np.exp(-g * np.einsum("jkl,jkl->jk", diff, diff))

    kk = K / n
    kg = (2.0 * g * diff * K[:, :, None]).reshape(n, n * d) / n
    outer = diff[:, :, :, None] * diff[:, :, None, :]
    hess = (2.0 * g * np.eye(d)[None, None] - 4.0 * g * g * outer) * K[:, :, None, None]
    # (j, k, i, i') -> (j, i, k, i')
    gg = hess.transpose(0, 2, 1, 3).reshape(n * d, n * d) / n

    kk = 0.5 * (kk + kk.T)
    gg = 0.5 * (gg + gg.T)
    return GramBlocks(kk=kk, kg=kg, gg=gg)
