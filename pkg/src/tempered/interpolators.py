"""Toy interpolators on [0, 1] and nearest-neighbour classifiers.

Covers a singular-kernel Nadaraya-Watson smoother, piecewise-linear and
full-degree polynomial interpolation, 1-NN and k-NN.  Together they give
cheap, analyzable examples of all three fitting regimes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .data import LabelFlip, inject_labels
from .errors import DuplicateX
from .kr import as_generator
from .records import CurveRecord
from .seeding import cell_rng

__all__ = [
    "SingularKernelSmoother",
    "PiecewiseLinear",
    "PolynomialInterp",
    "OneNN",
    "KNN",
    "fit_predict_1d",
    "knn_predict",
    "barycentric_weights",
    "toy_cell",
    "toy_risk_curve",
]


@dataclass(frozen=True)
class SingularKernelSmoother:
    """Weights |x - x_i|^-a.  a = 1 is the Hilbert kernel in one dimension."""

    a: float = 1.0

    def describe(self) -> str:
        return f"singular(a={self.a:g})"


@dataclass(frozen=True)
class PiecewiseLinear:
    def describe(self) -> str:
        return "piecewise-linear"


@dataclass(frozen=True)
class PolynomialInterp:
    def describe(self) -> str:
        return "polynomial"


@dataclass(frozen=True)
class OneNN:
    def describe(self) -> str:
        return "1nn"


@dataclass(frozen=True)
class KNN:
    """k-NN majority vote; ``k=None`` means k = max(1, round(ln n))."""

    k: int | None = None

    def k_for(self, n: int) -> int:
        if self.k is not None:
            return int(self.k)
        return max(1, int(round(math.log(n))))

    def describe(self) -> str:
        return "knn(logn)" if self.k is None else f"knn(k={self.k})"


CLASSIFIERS = (OneNN, KNN)


def _check_distinct(x: np.ndarray):
    s = np.sort(x)
    if np.any(s[1:] == s[:-1]):
        raise DuplicateX("repeated abscissae in training inputs")


def _singular_smoother(x, y, t, a):
    D = np.abs(t[:, None] - x[None, :])
    dmin = D.min(axis=1, keepdims=True)
    exact = dmin[:, 0] == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        W = (dmin / D) ** a                  # scaled to keep the largest weight at 1
    out = np.empty(len(t))
    ok = ~exact
    out[ok] = (W[ok] @ y) / W[ok].sum(axis=1)
    if exact.any():
        out[exact] = y[np.argmin(D[exact], axis=1)]
    return out


def barycentric_weights(x: np.ndarray) -> tuple:
    """log|w_j| and sign(w_j) for w_j = 1 / prod_{k != j} (x_j - x_k)."""
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    neg = np.count_nonzero(diff < 0, axis=1)
    return logw, np.where(neg % 2, -1.0, 1.0)


def _polynomial(x, y, t):
    """Modified Lagrange (first barycentric) form, accumulated in log space.

    p(t) = l(t) sum_j w_j y_j / (t - x_j) with l(t) = prod_i (t - x_i).  This
    form is backward stable for any node set; magnitudes beyond the double
    range come out as +-inf instead of being silently rescaled.
    """
    logw, sw = barycentric_weights(x)
    out = np.empty(len(t))
    diff = t[:, None] - x[None, :]
    hit = diff == 0
    rows = hit.any(axis=1)
    if rows.any():
        out[rows] = y[np.argmax(hit[rows], axis=1)]
    free = ~rows
    if free.any():
        d = diff[free]
        logd = np.log(np.abs(d))
        neg = d < 0
        a = logd.sum(axis=1, keepdims=True) - logd + logw      # log|l(t) w_j / (t - x_j)|
        parity = (neg.sum(axis=1, keepdims=True) - neg) % 2
        s = np.where(parity, -1.0, 1.0) * sw
        top = a.max(axis=1, keepdims=True)
        with np.errstate(over="ignore", invalid="ignore"):
            out[free] = np.exp(top[:, 0]) * np.sum(s * y * np.exp(a - top), axis=1)
    return out


def knn_predict(train_x, train_labels, test_x, k: int) -> np.ndarray:
    """Majority vote over the k nearest training points.

    Distance ties go to the lower training index; vote ties go to the tied
    class whose member is nearest.  Rows whose k-th distance is tied are
    recomputed by brute force with scaled norms, so ties that are artifacts
    of squared-distance underflow get resolved correctly.
    """
    X = np.asarray(train_x, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    T = np.asarray(test_x, dtype=float)
    T = T[:, None] if T.ndim == 1 else T
    labels = np.asarray(train_labels)
    n = len(X)
    k = min(int(k), n)
    kq = min(k + 1, n)
    dist, idx = cKDTree(X).query(T, k=kq)
    dist = dist.reshape(len(T), kq)
    idx = idx.reshape(len(T), kq)
    order = np.lexsort((idx, dist), axis=1)
    dist = np.take_along_axis(dist, order, 1)
    idx = np.take_along_axis(idx, order, 1)
    if kq > k:
        # a tie straddling the k-th slot may hide lower indices; redo exactly
        boundary = np.flatnonzero(dist[:, k - 1] == dist[:, k])
        for r in boundary:
            diff = X - T[r]
            scale = np.max(np.abs(diff), axis=1)
            safe = np.where(scale > 0, scale, 1.0)
            dr = scale * np.sqrt(np.sum((diff / safe[:, None]) ** 2, axis=1))
            best = np.lexsort((np.arange(n), dr))[:k]
            idx[r, :k] = best
    idx = idx[:, :k]
    votes = labels[idx]
    if k == 1:
        return votes[:, 0].copy()
    classes, inv = np.unique(votes, return_inverse=True)
    inv = inv.reshape(votes.shape)
    counts = np.zeros((len(T), len(classes)), dtype=int)
    np.add.at(counts, (np.arange(len(T))[:, None], inv), 1)
    top = counts.max(axis=1, keepdims=True)
    tied = counts[np.arange(len(T))[:, None], inv] == top
    first = np.argmax(tied, axis=1)          # nearest neighbour among tied classes
    return votes[np.arange(len(T)), first]


def fit_predict_1d(method, x, y, t) -> np.ndarray:
    """Fit ``method`` on (x, y) and predict at test inputs ``t``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if len(x) != len(y) or len(x) == 0:
        raise ValueError("need matching, nonempty x and y")
    _check_distinct(x)
    if isinstance(method, SingularKernelSmoother):
        return _singular_smoother(x, y.astype(float), t, method.a)
    if isinstance(method, PiecewiseLinear):
        order = np.argsort(x)
        return np.interp(t, x[order], y[order].astype(float))
    if isinstance(method, PolynomialInterp):
        return _polynomial(x, y.astype(float), t)
    if isinstance(method, OneNN):
        return knn_predict(x, y, t, 1)
    if isinstance(method, KNN):
        return knn_predict(x, y, t, method.k_for(len(x)))
    raise TypeError(f"unknown toy method {method!r}")


def toy_cell(method, n: int, noise: float, rng, n_test: int = 2000,
             test_labels: str = "clean") -> tuple:
    """One Monte-Carlo draw; returns (risk, metric name).

    Regression methods learn f* = 0 from N(0, noise) labels and report excess
    MSE.  Classifiers learn the constant class 1 from labels with an exact
    fraction ``noise`` flipped to class 0 and report classification error on
    clean test labels, or on test labels flipped the same way when
    ``test_labels == "noisy"``.
    """
    rng = as_generator(rng)
    x = rng.random(n)
    t = rng.random(n_test)
    if isinstance(method, CLASSIFIERS):
        y, _ = inject_labels(np.ones(n, dtype=int), LabelFlip(noise), rng, num_classes=2)
        truth = np.ones(n_test, dtype=int)
        if test_labels == "noisy":
            truth, _ = inject_labels(truth, LabelFlip(noise), rng, num_classes=2)
        elif test_labels != "clean":
            raise ValueError(f"test_labels must be 'clean' or 'noisy', not {test_labels!r}")
        pred = fit_predict_1d(method, x, y, t)
        return float(np.mean(pred != truth)), "ClassificationError"
    y = np.sqrt(noise) * rng.standard_normal(n)
    with np.errstate(over="ignore", invalid="ignore"):
        pred = fit_predict_1d(method, x, y, t)
        risk = float(np.mean(pred ** 2))
    if not np.isfinite(risk):
        risk = float("inf")
    return risk, "ExcessMSE"


def toy_risk_curve(method, n_grid, noise: float, seeds, root_seed: int = 0,
                   n_test: int = 2000, test_labels: str = "clean",
                   experiment_id: str = "toy1d") -> list:
    """CurveRecords for ``method`` over ``n_grid`` x seeds at one noise level."""
    seed_ids = range(seeds) if isinstance(seeds, int) else list(seeds)
    kind = "flip" if isinstance(method, CLASSIFIERS) else "gaussian"
    name = method.describe()
    out = []
    for n in n_grid:
        for s in seed_ids:
            rng = cell_rng(root_seed, experiment_id, name, n, float(noise), s)
            risk, metric = toy_cell(method, int(n), noise, rng, n_test, test_labels)
            out.append(CurveRecord(experiment_id, name, int(n), kind, float(noise), int(s),
                                   metric, risk))
    return out
