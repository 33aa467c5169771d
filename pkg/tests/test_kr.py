import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempered.errors import SingularMatrix
from tempered.kr import (KernelSpec, kernel_matrix, kr_fit, kr_predict, make_sphere_dataset,
                         sample_sphere, solve_symmetric, test_mse)

KERNELS = [KernelSpec("gaussian", 1.0), KernelSpec("laplace", 1.0)]


def test_sphere_points_have_unit_norm():
    x = sample_sphere(1, 4, 0)
    assert x.shape == (4, 2)
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-12)


def test_sphere_mean_is_small():
    x = sample_sphere(4, 10_000, 1)
    # each coordinate has variance 1/(d+1); the mean vector norm is ~ sqrt(1/n)
    assert np.linalg.norm(x.mean(axis=0)) <= 0.05


def test_sphere_second_moment():
    x = sample_sphere(2, 10_000, 2)
    assert abs(np.mean(x[:, 0] ** 2) - 1 / 3) <= 0.02


def test_sampling_rejects_bad_sizes():
    with pytest.raises(ValueError):
        sample_sphere(0, 5)
    with pytest.raises(ValueError):
        KernelSpec("cauchy", 1.0)
    with pytest.raises(ValueError):
        KernelSpec("gaussian", 0.0)


@pytest.mark.parametrize("ridge", [0.0, 0.3])
def test_single_point_closed_form(ridge):
    k = KernelSpec("gaussian", 0.7)
    x1 = np.array([[1.0, 0.0, 0.0]])
    fit = kr_fit(k, x1, [2.5], ridge)
    assert fit.coef[0] == pytest.approx(2.5 / (1 + ridge))
    t = np.array([[0.0, 1.0, 0.0]])
    expect = math.exp(-2.0 / 0.49) * 2.5 / (1 + ridge)
    assert kr_predict(fit, k, t)[0] == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("ridge", [0.0, 0.1])
def test_two_point_midpoint(kernel, ridge):
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    mid = np.array([[math.sqrt(0.5), math.sqrt(0.5)]])
    y = 1.7
    fit = kr_fit(kernel, x, [y, y], ridge)
    k12 = kernel(x[0], x[1])
    km = kernel(mid[0], x[0])
    # hand solve: coef = y / (1 + ridge + k12) each, prediction = 2 km coef
    assert kr_predict(fit, kernel, mid)[0] == pytest.approx(2 * km * y / (1 + k12 + ridge),
                                                            rel=1e-12)
    if km == pytest.approx(k12):
        assert kr_predict(fit, kernel, mid)[0] == pytest.approx(2 * k12 * y / (1 + k12 + ridge))


@pytest.mark.property
@pytest.mark.parametrize("kernel", KERNELS)
def test_interpolates_at_zero_ridge(kernel):
    ds = make_sphere_dataset(3, 60, 1.0, 3)
    fit = kr_fit(kernel, ds.points, ds.targets)
    assert fit.condition < 1e12
    resid = kr_predict(fit, kernel, ds.points) - ds.targets
    assert np.max(np.abs(resid)) <= 1e-6 * np.max(np.abs(ds.targets))
    # a test point equal to a training point returns its target
    assert kr_predict(fit, kernel, ds.points[7:8])[0] == pytest.approx(ds.targets[7], rel=1e-6)


def test_duplicate_points_are_singular():
    x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(SingularMatrix):
        kr_fit(KERNELS[0], x, [1.0, 2.0, 3.0])
    # a ridge makes the same system solvable
    assert kr_fit(KERNELS[0], x, [1.0, 2.0, 3.0], 0.1).method == "cholesky"


def test_far_test_points_decay_to_zero():
    k = KernelSpec("gaussian", 0.1)
    x = sample_sphere(2, 20, 4)
    fit = kr_fit(k, x, np.ones(20))
    far = np.full((1, 3), 10.0)
    assert abs(kr_predict(fit, k, far)[0]) < 1e-100


@pytest.mark.property
@pytest.mark.parametrize("kernel", KERNELS)
def test_kernel_symmetric_unit_diagonal(kernel):
    x = sample_sphere(3, 40, 5)
    K = kernel_matrix(kernel, x)
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 1.0)
    cross = kernel_matrix(kernel, x, x)
    np.testing.assert_allclose(cross, K, atol=1e-12)
    assert kernel(x[0], x[1]) == pytest.approx(kernel(x[1], x[0]))


@pytest.mark.property
@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("d", [1, 2, 5])
def test_psd_smoke(kernel, d):
    K = kernel_matrix(kernel, sample_sphere(d, 64, d))
    assert np.linalg.eigvalsh(K).min() >= -1e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_training_mse_nondecreasing_in_ridge(seed, r1, r2):
    lo, hi = sorted((r1, r2))
    ds = make_sphere_dataset(2, 30, 1.0, seed)
    k = KernelSpec("laplace", 1.0)
    if lo == 0 and len(np.unique(ds.points, axis=0)) < 30:
        return
    m = [test_mse(kr_predict(kr_fit(k, ds.points, ds.targets, r), k, ds.points), ds.targets)
         for r in (lo, hi)]
    assert m[0] <= m[1] + 1e-10


def test_indefinite_system_uses_bunch_kaufman():
    A = np.asfortranarray(np.array([[1.0, 2.0], [2.0, 1.0]]))
    x, rcond, method = solve_symmetric(A, np.array([3.0, 3.0]))
    assert method == "bunch-kaufman"
    np.testing.assert_allclose(x, [1.0, 1.0])
    assert 0 < rcond <= 1


def test_multiple_right_hand_sides():
    ds = make_sphere_dataset(2, 25, 1.0, 6)
    Y = np.column_stack([ds.targets, 2 * ds.targets])
    fit = kr_fit(KERNELS[1], ds.points, Y, 0.01)
    np.testing.assert_allclose(fit.coef[:, 1], 2 * fit.coef[:, 0], rtol=1e-12)


def test_mse_examples():
    t = np.array([0.5, -1.0, 2.0])
    assert test_mse(t, t) == 0.0
    assert test_mse(t + 0.3, t) == pytest.approx(0.09)
    rng = np.random.default_rng(7)
    p, q = rng.standard_normal(1000), rng.standard_normal(1000)
    two_pass = math.fsum((a - b) ** 2 for a, b in zip(p, q)) / 1000
    assert test_mse(p, q) == pytest.approx(two_pass, rel=1e-12)
    with pytest.raises(ValueError):
        test_mse(p, q[:10])


def test_zero_target_fn_gives_pure_noise():
    ds = make_sphere_dataset(2, 100, 0.25, 8)
    assert np.all(ds.clean == 0)
    assert 0.1 < np.var(ds.targets) < 0.5
