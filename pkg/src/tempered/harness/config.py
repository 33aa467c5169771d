"""Experiment configuration: TOML in, fully-defaulted plain dict out.

Every default is filled in here, before any cell runs, so the resolved
config written next to the results documents the run completely.
"""
from __future__ import annotations

import copy
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..errors import ConfigError

EXPERIMENTS = ("theory", "kr-sphere", "synthetic", "toy1d", "knn-profile", "kr-profile")

TOP_DEFAULTS = {
    "id": None,
    "root_seed": 0,
    "seeds": 20,
    "noise_levels": [1.0],
    "timing": False,
    "checks": [],
}

# per experiment: method kind -> (required keys, defaults)
METHOD_SCHEMAS = {
    "theory": {
        "powerlaw": (("alpha",), {"M": 100_000, "ridge": 0.0, "tailsum": 0.0,
                                  "coef_exponent": 2.0, "budget": 0.0}),
        "logpowerlaw": (("alpha",), {"M": 100_000, "ridge": 0.0, "tailsum": 0.0,
                                     "coef_exponent": 2.0, "budget": 0.0}),
        "superpolynomial": ((), {"M": 100_000, "ridge": 0.0, "tailsum": 0.0,
                                 "coef_exponent": 2.0, "budget": 0.0}),
        "explicit": (("values",), {"ridge": 0.0, "tailsum": 0.0, "coefficients": []}),
    },
    "kr-sphere": {
        "kr": (("kernel", "d"), {"bandwidth": 1.0, "ridge": 0.0, "n_test": 1000}),
    },
    "synthetic": {
        "powerlaw": (("alpha",), {"M": 10_000, "budget": 10.0, "coef_exponent": 2.0,
                                  "ridge": 0.0, "n_test": 3000, "clean_test": False}),
        "explicit": (("values",), {"ridge": 0.0, "coefficients": [], "n_test": 3000,
                                   "clean_test": False}),
        "laplace-sphere": (("d",), {"bandwidth": 1.0, "n_test": 1000}),
    },
    "toy1d": {
        "singular": ((), {"a": 1.0, "n_test": 2000}),
        "piecewise-linear": ((), {"n_test": 2000}),
        "polynomial": ((), {"n_test": 2000}),
        "1nn": ((), {"n_test": 2000, "test_labels": "clean"}),
        "knn": ((), {"k": "logn", "n_test": 2000, "test_labels": "clean"}),
    },
    "knn-profile": {
        "1nn": ((), {"test_labels": "clean"}),
        "knn": ((), {"k": "logn", "test_labels": "clean"}),
    },
    "kr-profile": {
        # bandwidth 5 is our own default for flattened MNIST pixels
        "kr": (("kernel",), {"bandwidth": 5.0, "ridge": 0.0}),
    },
}

DATA_DEFAULTS = {
    "source": "uniform",            # uniform | sphere | idx
    "d": 2,
    "n_test": 4000,
    "images": None,
    "labels": None,
    "test_images": None,
    "test_labels": None,
    "class_map": None,              # None | "even-odd"
}


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _positive_int_list(name, value):
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a nonempty list")
    for v in value:
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{name} entries must be positive integers, got {v!r}")
    if any(b <= a for a, b in zip(value, value[1:])):
        raise ConfigError(f"{name} must be strictly increasing")
    return list(value)


def resolve(raw: dict, experiment: str | None = None, seeds: int | None = None) -> dict:
    """Validate ``raw`` and return a resolved copy; raises ConfigError."""
    cfg = copy.deepcopy(raw)
    exp = cfg.get("experiment", experiment)
    if experiment is not None and exp != experiment:
        raise ConfigError(f"config is for {exp!r}, not {experiment!r}")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; expected one of {EXPERIMENTS}")
    cfg["experiment"] = exp
    for k, v in TOP_DEFAULTS.items():
        cfg.setdefault(k, copy.deepcopy(v))
    if cfg["id"] is None:
        cfg["id"] = exp
    if seeds is not None:
        cfg["seeds"] = seeds
    if not isinstance(cfg["seeds"], int) or cfg["seeds"] < 1:
        raise ConfigError("seeds must be a positive integer")
    if not isinstance(cfg["root_seed"], int) or cfg["root_seed"] < 0:
        raise ConfigError("root_seed must be a nonnegative integer")
    cfg["n_grid"] = _positive_int_list("n_grid", cfg.get("n_grid"))
    levels = cfg["noise_levels"]
    if not isinstance(levels, list) or not levels or any(
            not isinstance(x, (int, float)) or x < 0 for x in levels):
        raise ConfigError("noise_levels must be a nonempty list of nonnegative numbers")
    cfg["noise_levels"] = [float(x) for x in levels]

    methods = cfg.get("methods")
    if not isinstance(methods, list) or not methods:
        raise ConfigError("at least one [[methods]] table is required")
    schemas = METHOD_SCHEMAS[exp]
    names = set()
    resolved = []
    for m in methods:
        m = dict(m)
        kind = m.get("kind", next(iter(schemas)) if len(schemas) == 1 else None)
        if kind not in schemas:
            raise ConfigError(f"unknown method kind {kind!r} for {exp}; "
                              f"expected one of {sorted(schemas)}")
        required, defaults = schemas[kind]
        for key in required:
            if key not in m:
                raise ConfigError(f"method {m.get('name', kind)!r} lacks {key!r}")
        unknown = set(m) - set(required) - set(defaults) - {"kind", "name"}
        if unknown:
            raise ConfigError(f"method {m.get('name', kind)!r}: unknown keys {sorted(unknown)}")
        out = {"kind": kind, **defaults, **m}
        out.setdefault("name", kind)
        if out["name"] in names:
            raise ConfigError(f"duplicate method name {out['name']!r}")
        names.add(out["name"])
        if out.get("kernel") is not None and out["kernel"] not in ("gaussian", "laplace"):
            raise ConfigError(f"unknown kernel {out['kernel']!r}")
        if out.get("test_labels", "clean") not in ("clean", "noisy"):
            raise ConfigError("test_labels must be 'clean' or 'noisy'")
        resolved.append(out)
    cfg["methods"] = resolved

    if exp in ("knn-profile", "kr-profile"):
        data = {**DATA_DEFAULTS, **cfg.get("data", {})}
        if data["source"] not in ("uniform", "sphere", "idx"):
            raise ConfigError(f"unknown data source {data['source']!r}")
        if data["source"] == "idx":
            for key in ("images", "labels", "test_images", "test_labels"):
                if not data[key]:
                    raise ConfigError(f"idx data needs {key!r}")
        if data["class_map"] not in (None, "even-odd"):
            raise ConfigError("class_map must be omitted or 'even-odd'")
        if any(not 0 <= p < 1 for p in cfg["noise_levels"]):
            raise ConfigError("flip probabilities must lie in [0, 1)")
        cfg["data"] = data
    if exp == "synthetic":
        cfg.setdefault("overlay", False)

    for chk in cfg["checks"]:
        if chk.get("kind") not in ("regime", "range", "overlay"):
            raise ConfigError(f"unknown check kind {chk.get('kind')!r}")
        if chk["kind"] in ("regime", "range") and chk.get("method") not in names:
            raise ConfigError(f"check refers to unknown method {chk.get('method')!r}")
    return cfg


def dump_json(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
