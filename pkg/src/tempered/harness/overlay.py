"""Join empirical synthetic-KR medians with the closed-form risk estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..eigenlearning import risk_estimate
from ..errors import NoSpectrum, TemperedError
from .profile import build_noise_profile
from .runner import run_experiment, theory_spectrum

__all__ = ["OverlayRow", "theory_overlay", "overlay_csv_text", "max_gap"]


@dataclass(frozen=True)
class OverlayRow:
    method: str
    n: int
    noise: float
    empirical: float
    predicted: float
    gap: float          # |empirical - predicted| / predicted


def _predicted(method: dict, n: int, noise: float) -> float:
    spec, coeffs = theory_spectrum(method)
    return risk_estimate(spec, coeffs, n, noise).predicted_mse


def theory_overlay(cfg: dict, records=None) -> list:
    """One row per (method, noise, n) for a resolved synthetic config.

    The prediction uses the same truncated spectrum and coefficients as the
    simulation.  ``records`` are rerun from ``cfg`` when omitted.
    """
    if cfg["experiment"] != "synthetic":
        raise NoSpectrum(f"{cfg['experiment']} experiments have no spectral model")
    for m in cfg["methods"]:
        if m["kind"] == "laplace-sphere":
            raise NoSpectrum(f"method {m['name']!r} ({m['kind']}) has no known spectrum")
    if records is None:
        records = run_experiment(cfg)
    rows = []
    for m in cfg["methods"]:
        prof = build_noise_profile(records, m["name"])
        for noise, n, cell in prof.rows():
            try:
                pred = _predicted(m, n, noise)
            except TemperedError:
                pred = float("nan")
            if pred > 0:
                gap = abs(cell.median - pred) / pred
            else:
                gap = 0.0 if cell.median == pred else float("inf")
            rows.append(OverlayRow(m["name"], n, noise, cell.median, pred, gap))
    return rows


def overlay_csv_text(rows) -> str:
    lines = ["method,n,noise_level,empirical_median,predicted,gap"]
    for r in rows:
        lines.append(f"{r.method},{r.n},{r.noise!r},{r.empirical!r},{r.predicted!r},"
                     f"{r.gap!r}")
    return "\n".join(lines) + "\n"


def max_gap(rows) -> float:
    gaps = [r.gap for r in rows]
    return max(gaps) if gaps and not any(math.isnan(g) for g in gaps) else float("nan")
