"""Validation of sample tables.

A sample set is an ``(n, d)`` float array whose rows are i.i.d. draws; one-dimensional
input is read as ``n`` scalar draws.
"""

import numpy as np

from .errors import InputError


def as_samples(X, min_rows=2) -> np.ndarray:
    """Return ``X`` as a finite 2-D float array with at least ``min_rows`` rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"samples must be a 2-D array, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise InputError(f"need at least {min_rows} samples, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise InputError("samples must have at least one column")
    if not np.all(np.isfinite(X)):
        raise InputError("samples contain non-finite entries")
    return X
