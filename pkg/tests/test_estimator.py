import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poincare import GaussianKernelConfig, estimate_poincare_exact, largest_eigenvalue_sym, lambda_schedule
from poincare.errors import InputError, NumericalError
from poincare.estimator import PoincareEstimate, center, lambda_grid, tune_lambda

from oracles import representer_rayleigh_max


def _data(seed, n, d):
    return np.random.default_rng(seed).normal(size=(n, d))


# frozen regression values; both agree with the dense representer oracle below
def test_frozen_uniform_grid():
    est = estimate_poincare_exact(np.linspace(-1, 1, 7), GaussianKernelConfig(1.0), 1e-2)
    assert est.value == pytest.approx(0.5414572833760127, rel=1e-10)
    assert est.method == "exact" and est.lam == 1e-2
    assert representer_rayleigh_max(np.linspace(-1, 1, 7)[:, None], 1.0, 1e-2) == pytest.approx(est.value, rel=1e-10)


def test_frozen_gaussian_2d():
    est = estimate_poincare_exact(_data(0, 20, 2), GaussianKernelConfig(0.5), 0.05)
    assert est.value == pytest.approx(0.7659484136993908, rel=1e-10)


@pytest.mark.parametrize("n,d,gamma,lam", [(3, 1, 1.0, 0.1), (6, 1, 0.3, 1e-3), (8, 2, 1.0, 1e-2),
                                           (10, 2, 2.0, 0.5), (10, 1, 1.0, 1e-4)])
def test_matches_dense_representer_basis(n, d, gamma, lam):
    X = _data(n * 10 + d, n, d)
    exact = estimate_poincare_exact(X, GaussianKernelConfig(gamma), lam).value
    assert exact == pytest.approx(representer_rayleigh_max(X, gamma, lam), rel=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_monotone_in_lambda(seed):
    X = _data(seed, 40, 1 + seed % 2)
    lams = np.logspace(-4, 1, 12)
    vals = [estimate_poincare_exact(X, GaussianKernelConfig(), lam).value for lam in lams]
    assert all(b <= a * (1 + 1e-10) for a, b in zip(vals, vals[1:]))


@given(st.integers(0, 10_000), st.floats(0.3, 3.0))
@settings(max_examples=15, deadline=None)
def test_rescaling(seed, c):
    # x -> c x with gamma -> gamma / c^2 and lambda -> lambda c^2 multiplies the estimate by c^2
    X = _data(seed, 12, 2)
    base = estimate_poincare_exact(X, GaussianKernelConfig(1.0), 0.1 * c**2).value
    scaled = estimate_poincare_exact(c * X, GaussianKernelConfig(1.0 / c**2), 0.1).value
    assert scaled == pytest.approx(c**2 * base, rel=1e-7)


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_permutation_translation_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 2))
    ref = estimate_poincare_exact(X, GaussianKernelConfig(), 0.05).value
    t = rng.uniform(0, 2 * np.pi)
    R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    for Y in (X[rng.permutation(15)], X + rng.normal(size=2) * 5, X @ R.T):
        assert estimate_poincare_exact(Y, GaussianKernelConfig(), 0.05).value == pytest.approx(ref, rel=1e-8)


def test_identical_samples_give_zero():
    est = estimate_poincare_exact(np.ones((5, 2)), GaussianKernelConfig(), 0.1)
    assert est.value == pytest.approx(0.0, abs=1e-12)


def test_default_lambda_is_schedule():
    X = _data(1, 30, 1)
    assert estimate_poincare_exact(X).lam == lambda_schedule(30) == pytest.approx(1 / 30)


def test_power_path_agrees_with_dense():
    X = _data(3, 120, 1)
    dense = estimate_poincare_exact(X, lam=1e-2, eig_method="dense").value
    power = estimate_poincare_exact(X, lam=1e-2, eig_method="power").value
    assert power == pytest.approx(dense, rel=1e-8)


def test_eigvec_is_top_direction():
    X = _data(4, 25, 1)
    est = estimate_poincare_exact(X, lam=1e-2)
    assert np.linalg.norm(est.eigvec) == pytest.approx(1.0)
    assert est.diagnostics["residual"] < 1e-10


@pytest.mark.parametrize("lam", [0.0, -1.0, np.nan, np.inf])
def test_bad_lambda(lam):
    with pytest.raises(InputError):
        estimate_poincare_exact(_data(0, 5, 1), lam=lam)


def test_nonfinite_samples_rejected():
    X = _data(0, 5, 1)
    X[2, 0] = np.inf
    with pytest.raises(InputError):
        estimate_poincare_exact(X)


def test_estimate_validation():
    with pytest.raises(InputError):
        PoincareEstimate(value=-1.0, lam=0.1, method="exact", eigvec=np.zeros(1))
    with pytest.raises(InputError):
        PoincareEstimate(value=1.0, lam=0.1, method="magic", eigvec=np.zeros(1))


class TestLargestEigenvalue:
    def test_diagonal(self):
        lam, v = largest_eigenvalue_sym(np.diag([3.0, 1.0, 2.0]))
        assert lam == 3.0 and abs(v[0]) == pytest.approx(1.0)

    def test_zero_matrix(self):
        lam, v = largest_eigenvalue_sym(np.zeros((4, 4)))
        assert lam == 0.0 and np.linalg.norm(v) == 1.0

    def test_negative_dominant_spectrum_with_power(self):
        M = np.diag([-5.0, -1.0, 0.5])
        lam, _ = largest_eigenvalue_sym(M, method="power")
        assert lam == pytest.approx(0.5, abs=1e-8)

    def test_random_symmetric(self, rng):
        A = rng.normal(size=(30, 30))
        M = A + A.T
        lam, v = largest_eigenvalue_sym(M, method="power", tol=1e-12, max_iter=100_000)
        assert lam == pytest.approx(np.linalg.eigvalsh(M)[-1], rel=1e-8)
        assert np.linalg.norm(M @ v - lam * v) < 1e-6

    def test_nonconvergence_raises(self):
        # equal-magnitude eigenvalues of opposite sign: plain power iteration oscillates
        M = np.diag([1.0, -1.0])
        with pytest.raises(NumericalError):
            largest_eigenvalue_sym(M, method="power", max_iter=50, tol=1e-14)

    def test_asymmetric_rejected(self):
        with pytest.raises(InputError):
            largest_eigenvalue_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_nonsquare_rejected(self):
        with pytest.raises(InputError):
            largest_eigenvalue_sym(np.ones((2, 3)))


def test_center_removes_row_means(rng):
    M = rng.normal(size=(4, 4))
    assert np.allclose(center(M).mean(axis=1), 0)


def test_lambda_helpers():
    assert lambda_grid(100) == pytest.approx([1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    assert lambda_schedule(16, c=2, exponent=0.25) == pytest.approx(1.0)
    with pytest.raises(InputError):
        lambda_schedule(10, exponent=2)


def test_tune_lambda_prefers_oracle():
    best, curve = tune_lambda(lambda lam: 1.0 / lam, [1.0, 0.5, 0.25], oracle=2.2)
    assert best == 0.5 and len(curve) == 3
    best, _ = tune_lambda(lambda lam: 1.0 / lam, [1.0, 0.5, 0.25])
    assert best == 0.25
