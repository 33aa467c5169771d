"""Command-line entry point.

    tempered <experiment> [--config PATH] [--out DIR] [--seeds N] [--check]
    tempered report RECORDS.csv [--out DIR] [--num-classes K] [--floor F]

Experiments: theory, kr-sphere, synthetic, toy1d, knn-profile, kr-profile.
Without ``--config`` the packaged default for the experiment is used.  The
output directory receives records.csv, config.json, profile.csv,
regimes.json and, where applicable, overlay.csv and checks.txt.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

from ..eigenlearning import classify_regime
from ..errors import TemperedError, Unclassified
from ..records import read_csv, write_csv
from . import config as config_mod
from .overlay import max_gap, overlay_csv_text, theory_overlay
from .profile import build_noise_profile, label_regime
from .runner import run_experiment, theory_spectrum

DEFAULT_CONFIGS = {
    "theory": "theory.toml",
    "kr-sphere": "kr_sphere.toml",
    "synthetic": "synthetic.toml",
    "toy1d": "toy1d.toml",
    "knn-profile": "knn_profile.toml",
    "kr-profile": "kr_profile.toml",
}


def packaged_config(experiment: str) -> dict:
    text = resources.files("tempered.configs").joinpath(DEFAULT_CONFIGS[experiment]).read_text()
    return config_mod.tomllib.loads(text)


def load_config(experiment: str, path=None, seeds=None) -> dict:
    raw = config_mod.load_toml(path) if path else packaged_config(experiment)
    return config_mod.resolve(raw, experiment, seeds)


def profile_rows(records) -> tuple:
    """(profile CSV text, {method: {noise: label dict}}) for a record set."""
    lines = ["method,noise_level,n,median,q25,q75,count,errors"]
    profiles = {}
    for name in sorted({r.method for r in records}):
        prof = build_noise_profile(records, name)
        profiles[name] = prof
        for noise, n, c in prof.rows():
            lines.append(f"{name},{noise!r},{n},{c.median!r},{c.q25!r},{c.q75!r},"
                         f"{c.count},{c.errors}")
    return "\n".join(lines) + "\n", profiles


def _label(prof, noise, floor=None, num_classes=None, tol=None) -> dict:
    reg = label_regime(prof, floor, num_classes, noise, tol)
    level = None if reg.level is None or not math.isfinite(reg.level) else reg.level
    return {"regime": reg.kind.value, "level": level}


def empirical_regimes(profiles, floor=None, num_classes=None) -> dict:
    return {name: {repr(noise): _label(p, noise, floor, num_classes)
                   for noise in p.noise_levels}
            for name, p in profiles.items()}


def theory_regimes(cfg) -> dict:
    out = {}
    for m in cfg["methods"]:
        spec, _ = theory_spectrum(m)
        out[m["name"]] = {}
        for noise in cfg["noise_levels"]:
            if noise <= 0:
                continue
            try:
                reg = classify_regime(spec, noise)
                lab = {"regime": reg.kind.value, "level": reg.asymptotic_mse}
            except Unclassified:
                lab = {"regime": "Unclassified", "level": None}
            out[m["name"]][repr(noise)] = lab
    return out


def run_checks(cfg, profiles, regimes, overlay_rows=None) -> list:
    """(description, passed) pairs for the config's [[checks]] tables."""
    results = []
    for chk in cfg["checks"]:
        kind = chk["kind"]
        if kind == "overlay":
            if overlay_rows is None:
                results.append(("overlay: no overlay computed", False))
                continue
            g = max_gap(overlay_rows)
            limit = chk.get("max_gap", 0.1)
            results.append((f"overlay max gap {g:.4g} <= {limit}", g <= limit))
            continue
        name = chk["method"]
        prof = profiles[name]
        noise = float(chk.get("noise", prof.noise_levels[0]))
        if kind == "range":
            n = chk.get("n", prof.n_values[-1])
            med = prof.cells[(noise, n)].median
            lo, hi = chk.get("low", -math.inf), chk.get("high", math.inf)
            results.append((f"{name} noise={noise:g} n={n}: median {med:.4g} in [{lo}, {hi}]",
                            lo <= med <= hi))
            continue
        if cfg["experiment"] == "theory":
            got = regimes[name][repr(noise)]
        else:
            got = _label(prof, noise, chk.get("floor"), chk.get("num_classes"), chk.get("tol"))
        ok = got["regime"] == chk["expect"]
        if ok and "level" in chk:
            ok = got["level"] is not None and math.isclose(got["level"], chk["level"],
                                                           rel_tol=chk.get("rtol", 0.1))
        results.append((f"{name} noise={noise:g}: {got['regime']} "
                        f"(level {got['level']}) expected {chk['expect']}", ok))
    return results


def run_command(experiment, config_path, out, seeds, check) -> int:
    cfg = load_config(experiment, config_path, seeds)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config_mod.dump_json(cfg))
    records = run_experiment(cfg)
    write_csv(records, out / "records.csv")
    text, profiles = profile_rows(records)
    (out / "profile.csv").write_text(text)
    if experiment == "theory":
        regimes = theory_regimes(cfg)
    else:
        regimes = empirical_regimes(profiles)
    (out / "regimes.json").write_text(json.dumps(regimes, indent=2, sort_keys=True) + "\n")
    overlay_rows = None
    if experiment == "synthetic" and cfg.get("overlay"):
        overlay_rows = theory_overlay(cfg, records)
        (out / "overlay.csv").write_text(overlay_csv_text(overlay_rows))
    print(text, end="")
    for name, per_noise in regimes.items():
        for noise, lab in per_noise.items():
            print(f"regime {name} noise={noise}: {lab['regime']} level={lab['level']}")
    failed = sum(not r.ok for r in records)
    if failed:
        print(f"{failed} of {len(records)} cells failed", file=sys.stderr)
    results = run_checks(cfg, profiles, regimes, overlay_rows)
    if results:
        lines = [f"{'PASS' if ok else 'FAIL'} {desc}" for desc, ok in results]
        (out / "checks.txt").write_text("\n".join(lines) + "\n")
        print("\n".join(lines))
    if check and not all(ok for _, ok in results):
        return 1
    return 0


def report_command(records_path, out, num_classes, floor) -> int:
    records = read_csv(records_path)
    text, profiles = profile_rows(records)
    regimes = empirical_regimes(profiles, floor, num_classes)
    print(text, end="")
    print(json.dumps(regimes, indent=2, sort_keys=True))
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "profile.csv").write_text(text)
        (out / "regimes.json").write_text(json.dumps(regimes, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tempered", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for exp in config_mod.EXPERIMENTS:
        p = sub.add_parser(exp, help=f"run a {exp} experiment")
        p.add_argument("--config", help="TOML config (default: packaged)")
        p.add_argument("--out", default=f"runs/{exp}", help="output directory")
        p.add_argument("--seeds", type=int, help="override the seed count")
        p.add_argument("--check", action="store_true",
                       help="exit nonzero when a configured check fails")
    p = sub.add_parser("report", help="profile and label an existing records.csv")
    p.add_argument("records")
    p.add_argument("--out")
    p.add_argument("--num-classes", type=int)
    p.add_argument("--floor", type=float, help="Bayes floor of the risk")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return report_command(args.records, args.out, args.num_classes, args.floor)
        return run_command(args.command, args.config, args.out, args.seeds, args.check)
    except (TemperedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
