"""Expand a resolved config into cells, run them, collect CurveRecords.

Each cell is (method, noise level, n, seed) and owns an RNG stream keyed by
those four values under the config's root seed, so results do not depend on
execution order or worker count.  Set ``TEMPERED_WORKERS`` above 1 to fan
cells out over processes.
"""
from __future__ import annotations

import functools
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import interpolators as interp
from ..data import (EVEN_ODD, ClassificationDataset, LabelFlip, binarize, decode_predictions,
                    encode_targets, inject_labels, load_idx, subsample)
from ..eigenlearning import risk_estimate
from ..errors import TemperedError
from ..kr import KernelSpec, kr_fit, kr_predict, make_sphere_dataset, sample_sphere
from ..records import CurveRecord, sort_records
from ..seeding import cell_rng
from ..spectra import (Explicit, LogPowerlaw, Powerlaw, SuperPolynomial, TargetCoefficients,
                       make_spectrum, powerlaw_coefficients, zero_coefficients)
from ..synthetic import SyntheticTask, laplace_excess, synthetic_kr_detail

__all__ = ["run_experiment", "expand_cells", "theory_spectrum", "toy_method"]

FAMILIES = {"powerlaw": Powerlaw, "logpowerlaw": LogPowerlaw}


def theory_spectrum(method: dict):
    """(Spectrum, TargetCoefficients) described by a method table.

    Explicit tables list eigenvalues and, optionally, target coefficients
    (zeros when empty); the other families take M, a coefficient exponent
    and a budget (zero coefficients when the budget is 0).
    """
    kind = method["kind"]
    tailsum = method.get("tailsum", 0.0)
    if kind == "explicit":
        spec = make_spectrum(Explicit(method["values"]), ridge=method["ridge"], tailsum=tailsum)
        raw = method["coefficients"]
        if not raw:
            return spec, zero_coefficients(spec.M)
        if len(raw) != spec.M:
            raise ValueError("coefficients and values differ in length")
        v = np.asarray(raw, dtype=float)
        return spec, TargetCoefficients.normalized(v, float(v @ v))
    family = SuperPolynomial() if kind == "superpolynomial" else FAMILIES[kind](method["alpha"])
    M = int(method["M"])
    spec = make_spectrum(family, M, ridge=method["ridge"], tailsum=tailsum)
    if method["budget"] > 0:
        coeffs = powerlaw_coefficients(M, method["coef_exponent"], method["budget"])
    else:
        coeffs = zero_coefficients(M)
    return spec, coeffs


def toy_method(method: dict):
    kind = method["kind"]
    if kind == "singular":
        return interp.SingularKernelSmoother(method["a"])
    if kind == "piecewise-linear":
        return interp.PiecewiseLinear()
    if kind == "polynomial":
        return interp.PolynomialInterp()
    if kind == "1nn":
        return interp.OneNN()
    k = method["k"]
    return interp.KNN(None if k == "logn" else int(k))


def _noise_kind(cfg, method) -> str:
    if cfg["experiment"] in ("knn-profile", "kr-profile"):
        return "flip"
    if cfg["experiment"] == "toy1d" and method["kind"] in ("1nn", "knn"):
        return "flip"
    return "gaussian"


def _metric(cfg, method) -> str:
    if _noise_kind(cfg, method) == "flip":
        return "ClassificationError"
    if cfg["experiment"] in ("theory", "synthetic") and method["kind"] != "laplace-sphere":
        return "MSE"
    return "ExcessMSE"


@functools.lru_cache(maxsize=4)
def _idx_data(images, labels, test_images, test_labels, class_map):
    train = load_idx(images, labels)
    test = load_idx(test_images, test_labels, num_classes=train.num_classes)
    if class_map == "even-odd":
        train, test = binarize(train, EVEN_ODD), binarize(test, EVEN_ODD)
    return train, test


def _classification_data(data: dict, n: int, rng) -> tuple:
    """(train, test) datasets with clean labels for one cell."""
    if data["source"] == "idx":
        train, test = _idx_data(data["images"], data["labels"], data["test_images"],
                                data["test_labels"], data["class_map"])
        train = subsample(train, n, rng)
        if data["n_test"] < test.n:
            test = subsample(test, data["n_test"], rng)
        return train, test
    # constant-label synthetic task: every clean label is class 1
    if data["source"] == "sphere":
        xs, xt = sample_sphere(data["d"], n, rng), sample_sphere(data["d"], data["n_test"], rng)
    else:
        xs, xt = rng.random((n, 1)), rng.random((data["n_test"], 1))
    return (ClassificationDataset(xs, np.ones(n, dtype=np.int64), 2, data["source"]),
            ClassificationDataset(xt, np.ones(len(xt), dtype=np.int64), 2, data["source"]))


def _run_cell(cfg: dict, method: dict, noise: float, n: int, rng):
    """Risk and condition estimate (or None) for one cell."""
    exp = cfg["experiment"]
    kind = method["kind"]
    if exp == "theory":
        spec, coeffs = theory_spectrum(method)
        return risk_estimate(spec, coeffs, n, noise).predicted_mse, None
    if exp == "kr-sphere":
        kernel = KernelSpec(method["kernel"], method["bandwidth"])
        train = make_sphere_dataset(method["d"], n, noise, rng)
        fit = kr_fit(kernel, train.points, train.targets, method["ridge"])
        test = sample_sphere(method["d"], method["n_test"], rng)
        return float(np.mean(kr_predict(fit, kernel, test) ** 2)), fit.condition
    if exp == "synthetic":
        if kind == "laplace-sphere":
            return laplace_excess(method["d"], n, rng, method["n_test"], method["bandwidth"],
                                  noise=noise)
        spec, coeffs = theory_spectrum(method)
        task = SyntheticTask(spec, coeffs, noise, n, method["n_test"], rng,
                             method["clean_test"])
        return synthetic_kr_detail(task)
    if exp == "toy1d":
        risk, _ = interp.toy_cell(toy_method(method), n, noise, rng,
                                  method["n_test"], method.get("test_labels", "clean"))
        return risk, None
    train, test = _classification_data(cfg["data"], n, rng)
    K = train.num_classes
    y, _ = inject_labels(train.labels, LabelFlip(noise), rng, K)
    truth = test.labels
    if method.get("test_labels") == "noisy":
        truth, _ = inject_labels(truth, LabelFlip(noise), rng, K)
    if exp == "knn-profile":
        k = 1 if kind == "1nn" else toy_method(method).k_for(n)
        pred = interp.knn_predict(train.inputs, y, test.inputs, k)
        return float(np.mean(pred != truth)), None
    kernel = KernelSpec(method["kernel"], method["bandwidth"])
    fit = kr_fit(kernel, train.inputs, encode_targets(y, K), method["ridge"])
    pred = decode_predictions(kr_predict(fit, kernel, test.inputs))
    return float(np.mean(pred != truth)), fit.condition


def expand_cells(cfg: dict) -> list:
    """(method index, noise, n, seed) tuples in canonical order."""
    seeds = 1 if cfg["experiment"] == "theory" else cfg["seeds"]
    return [(i, noise, n, s)
            for i in range(len(cfg["methods"]))
            for noise in cfg["noise_levels"]
            for n in cfg["n_grid"]
            for s in range(seeds)]


def _cell_record(cfg: dict, cell) -> CurveRecord:
    i, noise, n, s = cell
    method = cfg["methods"][i]
    name = method["name"]
    rng = cell_rng(cfg["root_seed"], cfg["id"], name, n, noise, s)
    nk, metric = _noise_kind(cfg, method), _metric(cfg, method)
    t0 = time.perf_counter()
    try:
        risk, cond = _run_cell(cfg, method, noise, n, rng)
        if not np.isfinite(risk):
            risk = float("inf")
        wall = (time.perf_counter() - t0) * 1e3 if cfg["timing"] else 0.0
        cond = None if cond is None else float(cond)
        return CurveRecord(cfg["id"], name, n, nk, noise, s, metric, float(risk), cond, wall)
    except (TemperedError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        wall = (time.perf_counter() - t0) * 1e3 if cfg["timing"] else 0.0
        return CurveRecord.failed(cfg["id"], name, n, nk, noise, s, metric,
                                  type(exc).__name__, wall)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TEMPERED_WORKERS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: dict, workers: int | None = None) -> list:
    """Run every cell of a resolved config and return sorted CurveRecords.

    A cell that raises is kept as a failed record; the sweep carries on.
    """
    cells = expand_cells(cfg)
    workers = _workers() if workers is None else workers
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(functools.partial(_cell_record, cfg), cells))
    else:
        out = [_cell_record(cfg, c) for c in cells]
    return sort_records(out)
