"""Kernel regression with exactly known spectra, plus the Laplace-on-sphere
dimension sweep.

Features are Gaussian random eigenfunctions: with ``F`` the (n, M) matrix of
i.i.d. N(0, 1) draws and ``lam`` the eigenvalues, the train kernel is
``F diag(lam) F^T`` and targets are ``F v + noise``.  The (n, n) kernel is
assembled directly so memory stays O(nM) even for M >> n.

Random draws happen in a fixed order (train features, test features in row
chunks, train noise, test noise), which is what lets the kernel path and the
linear-regression path share randomness exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularMatrix
from .kr import KernelSpec, as_generator, kernel_matrix, kr_fit, kr_predict, sample_sphere
from .kr import solve_symmetric
from .seeding import cell_rng
from .spectra import Powerlaw, Spectrum, TargetCoefficients, make_spectrum, powerlaw_coefficients

__all__ = [
    "SyntheticTask",
    "powerlaw_task",
    "run_synthetic_kr",
    "synthetic_kr_detail",
    "equivalent_linear_regression",
    "laplace_excess",
    "LaplaceCell",
    "laplace_dimension_sweep",
]

TEST_CHUNK = 512


@dataclass(frozen=True)
class SyntheticTask:
    """One synthetic draw.

    With ``clean_test`` the test targets carry no noise and ``noise`` is added
    to the returned MSE analytically, which removes test-noise variance.
    """

    spectrum: Spectrum
    coeffs: TargetCoefficients
    noise: float
    n: int
    n_test: int = 3000
    seed: object = 0
    clean_test: bool = False

    def __post_init__(self):
        if len(self.coeffs.values) != self.spectrum.M:
            raise ValueError("coefficients and spectrum differ in length")
        if self.n < 1 or self.n_test < 1:
            raise ValueError("need n >= 1 and n_test >= 1")
        if self.noise < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.spectrum.total_ridge == 0 and self.n >= self.spectrum.M:
            raise ValueError(f"ridgeless interpolation needs n < M (n={self.n}, M={self.spectrum.M})")


def powerlaw_task(alpha: float, n: int, M: int = 10_000, budget: float = 10.0,
                  coef_exponent: float = 2.0, noise: float = 1.0, n_test: int = 3000,
                  seed=0, ridge: float = 0.0, clean_test: bool = False) -> SyntheticTask:
    spec = make_spectrum(Powerlaw(alpha), M, ridge=ridge)
    return SyntheticTask(spec, powerlaw_coefficients(M, coef_exponent, budget),
                         noise, n, n_test, seed, clean_test)


def _simulate(task: SyntheticTask, prepare, on_test_chunk):
    """Draw everything for ``task`` in the canonical order.

    ``prepare(F)`` runs once on train features; ``on_test_chunk(state, Ft)``
    runs per test chunk and its results are returned as a list.
    """
    rng = as_generator(task.seed)
    M = task.spectrum.M
    F = rng.standard_normal((task.n, M))
    state = prepare(F)
    parts = []
    for start in range(0, task.n_test, TEST_CHUNK):
        rows = min(TEST_CHUNK, task.n_test - start)
        parts.append(on_test_chunk(state, rng.standard_normal((rows, M))))
    sd = np.sqrt(task.noise)
    eta = sd * rng.standard_normal(task.n)
    eta_test = sd * rng.standard_normal(task.n_test)
    return F, state, parts, eta, eta_test


def _score(task, clean_test_targets, predictions, eta_test) -> float:
    if task.clean_test:
        return float(np.mean((clean_test_targets - predictions) ** 2)) + task.noise
    y_test = clean_test_targets + eta_test
    return float(np.mean((y_test - predictions) ** 2))


def synthetic_kr_detail(task: SyntheticTask) -> tuple:
    """Kernel-path test MSE and the condition estimate of the train system."""
    lam = task.spectrum.eigenvalues
    v = task.coeffs.values

    def prepare(F):
        return F * lam

    def chunk(W, Ft):
        return Ft @ W.T, Ft @ v

    F, W, parts, eta, eta_test = _simulate(task, prepare, chunk)
    K = W @ F.T
    K = 0.5 * (K + K.T)
    ridge = task.spectrum.total_ridge
    if ridge:
        K[np.diag_indices_from(K)] += ridge
    y = F @ v + eta
    coef, rcond, _ = solve_symmetric(np.asfortranarray(K), y)
    if not np.all(np.isfinite(coef)):
        raise SingularMatrix("non-finite solution of the train system")
    K_test = np.vstack([p[0] for p in parts])
    clean = np.concatenate([p[1] for p in parts])
    cond = np.inf if rcond <= 0 else 1.0 / rcond
    return _score(task, clean, K_test @ coef, eta_test), cond


def run_synthetic_kr(task: SyntheticTask) -> float:
    return synthetic_kr_detail(task)[0]


def equivalent_linear_regression(task: SyntheticTask) -> float:
    """Same draws, solved as least squares on features F diag(sqrt(lam)).

    Ridgeless tasks use the minimum-norm least-squares solution; ridged ones
    an augmented least-squares system.  Dense SVD of an (n, M) matrix, so
    meant for small instances.
    """
    root = np.sqrt(task.spectrum.eigenvalues)
    v = task.coeffs.values
    F, _, parts, eta, eta_test = _simulate(task, lambda F: None,
                                           lambda _, Ft: (Ft * root, Ft @ v))
    Z = F * root
    y = F @ v + eta
    ridge = task.spectrum.total_ridge
    if ridge:
        Z = np.vstack([Z, np.sqrt(ridge) * np.eye(task.spectrum.M)])
        y = np.concatenate([y, np.zeros(task.spectrum.M)])
    beta = np.linalg.lstsq(Z, y, rcond=None)[0]
    pred = np.concatenate([Zt @ beta for Zt, _ in parts])
    clean = np.concatenate([c for _, c in parts])
    return _score(task, clean, pred, eta_test)


def laplace_excess(d: int, n: int, seed, n_test: int = 1000, bandwidth: float = 1.0,
                   ridge: float = 0.0, noise: float = 1.0) -> tuple:
    """Pure-noise Laplace KR on the d-sphere against zero test targets.

    Returns (excess MSE, condition estimate).
    """
    rng = as_generator(seed)
    kernel = KernelSpec("laplace", bandwidth)
    X = sample_sphere(d, n, rng)
    y = np.sqrt(noise) * rng.standard_normal(n)
    X_test = sample_sphere(d, n_test, rng)
    fit = kr_fit(kernel, X, y, ridge)
    return float(np.mean(kr_predict(fit, kernel, X_test) ** 2)), fit.condition


@dataclass
class LaplaceCell:
    d: int
    n: int
    values: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def median(self) -> float:
        return float(np.median(self.values)) if self.values else float("nan")


def laplace_dimension_sweep(d_list, n_grid, seeds, root_seed: int = 0,
                            n_test: int = 1000, bandwidth: float = 1.0) -> list:
    """Median excess MSE of ridgeless Laplace KR per (d, n).

    ``seeds`` is a count or an iterable of seed indices; each (d, n, seed)
    cell gets its own stream derived from ``root_seed``.
    """
    seed_ids = range(seeds) if isinstance(seeds, int) else list(seeds)
    table = []
    for d in d_list:
        for n in n_grid:
            cell = LaplaceCell(int(d), int(n))
            for s in seed_ids:
                rng = cell_rng(root_seed, "laplace-sphere", d, n, s)
                try:
                    cell.values.append(laplace_excess(d, n, rng, n_test, bandwidth)[0])
                except SingularMatrix as exc:
                    cell.errors.append(f"seed {s}: {exc}")
            table.append(cell)
    return table
