"""Noise profiles: per-(noise, n) risk summaries and empirical regime labels."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import IncompleteGrid

__all__ = ["CellStats", "Asymptote", "NoiseProfile", "build_noise_profile",
           "EmpiricalKind", "EmpiricalRegime", "label_regime", "AGREEMENT"]

AGREEMENT = 0.15


@dataclass(frozen=True)
class CellStats:
    median: float
    q25: float
    q75: float
    count: int
    errors: int


@dataclass(frozen=True)
class Asymptote:
    """Mean of the two largest-n medians; ``agrees`` is the 15% gate."""

    value: float
    agrees: bool
    points: tuple


def _agree(a: float, b: float) -> bool:
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(a - b) <= AGREEMENT * max(abs(a), abs(b))


@dataclass
class NoiseProfile:
    experiment_id: str
    method: str
    metric: str
    noise_kind: str
    noise_levels: list
    n_values: list
    cells: dict = field(repr=False)
    asymptotes: dict = field(repr=False)

    def medians(self, noise: float) -> list:
        return [self.cells[(noise, n)].median for n in self.n_values]

    def rows(self):
        for noise in self.noise_levels:
            for n in self.n_values:
                c = self.cells[(noise, n)]
                yield noise, n, c


def _quantiles(values) -> tuple:
    if not values:
        nan = float("nan")
        return nan, nan, nan
    a = np.asarray(values, dtype=float)
    with np.errstate(invalid="ignore"):
        q = np.percentile(a, [50, 25, 75])
        if np.isnan(q).any():
            # linear interpolation between infinities yields nan; fall back to order statistics
            q = np.where(np.isnan(q), np.percentile(a, [50, 25, 75], method="higher"), q)
    return float(q[0]), float(q[1]), float(q[2])


def build_noise_profile(records, method: str | None = None) -> NoiseProfile:
    """Summarize the records of one method.

    Every (noise, n) pair on the grid spanned by the records must have at
    least one row, otherwise :class:`IncompleteGrid` lists the holes.
    """
    records = list(records)
    methods = sorted({r.method for r in records})
    if method is None:
        if len(methods) != 1:
            raise ValueError(f"records hold {len(methods)} methods; pass method=")
        method = methods[0]
    recs = [r for r in records if r.method == method]
    if not recs:
        raise ValueError(f"no records for method {method!r}")
    noises = sorted({r.noise_level for r in recs})
    ns = sorted({r.n for r in recs})
    groups = {}
    for r in recs:
        groups.setdefault((r.noise_level, r.n), []).append(r)
    missing = [(a, b) for a in noises for b in ns if (a, b) not in groups]
    if missing:
        raise IncompleteGrid(missing)
    cells = {}
    for key, rows in groups.items():
        ok = [r.risk for r in rows if r.ok]
        med, lo, hi = _quantiles(ok)
        cells[key] = CellStats(med, lo, hi, len(ok), len(rows) - len(ok))
    asym = {}
    for noise in noises:
        tail = [cells[(noise, n)].median for n in ns[-2:]]
        if len(tail) == 2:
            asym[noise] = Asymptote(float(np.mean(tail)), _agree(*tail), tuple(tail))
        else:
            asym[noise] = Asymptote(tail[0], False, tuple(tail))
    first = recs[0]
    return NoiseProfile(first.experiment_id, method, first.metric, first.noise_kind,
                        noises, ns, cells, asym)


class EmpiricalKind(enum.Enum):
    BENIGN = "Benign"
    TEMPERED = "Tempered"
    CATASTROPHIC = "Catastrophic"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class EmpiricalRegime:
    kind: EmpiricalKind
    level: float | None
    evidence: dict

    def __str__(self):
        if self.kind is EmpiricalKind.TEMPERED:
            return f"Tempered({self.level:.4g})"
        return self.kind.value


def label_regime(profile: NoiseProfile, bayes_floor: float | None = None,
                 num_classes: int | None = None, noise_level: float | None = None,
                 tol: float | None = None) -> EmpiricalRegime:
    """Label the large-n behaviour of one noise level of ``profile``.

    Rules, applied in order to the medians on the n grid:

    * Benign: the largest-n risk is within ``tol`` of the Bayes floor.
    * Catastrophic: classification risk within ``tol`` of chance
      (1 - 1/K); regression risk that is infinite, or rises over the last
      three points by a factor of at least 1.5.
    * Tempered: the last two points agree within 15% above the floor.
    * Inconclusive otherwise, or with fewer than three grid points.

    ``tol`` defaults to 0.02 for classification and 0.1 * sigma^2 for
    regression.  ``bayes_floor`` defaults to 0 for excess risk and clean
    test labels, and to sigma^2 for plain MSE.
    """
    if noise_level is None:
        if len(profile.noise_levels) != 1:
            raise ValueError("profile spans several noise levels; pass noise_level=")
        noise_level = profile.noise_levels[0]
    classification = profile.metric == "ClassificationError"
    if tol is None:
        tol = 0.02 if classification else 0.1 * noise_level
    if bayes_floor is None:
        bayes_floor = noise_level if profile.metric == "MSE" else 0.0
    r = profile.medians(noise_level)
    ev = {"n": list(profile.n_values), "medians": r, "floor": bayes_floor, "tol": tol}
    if len(r) < 3 or any(math.isnan(x) for x in r[-3:]):
        return EmpiricalRegime(EmpiricalKind.INCONCLUSIVE, None, ev)
    last = r[-1]
    if last <= bayes_floor + tol:
        return EmpiricalRegime(EmpiricalKind.BENIGN, last, ev)
    if classification:
        K = num_classes or 2
        if last >= 1 - 1 / K - tol:
            return EmpiricalRegime(EmpiricalKind.CATASTROPHIC, last, ev)
    else:
        a, b, c = r[-3:]
        if math.isinf(c) or (a < b < c and c >= 1.5 * a):
            return EmpiricalRegime(EmpiricalKind.CATASTROPHIC, last, ev)
    if _agree(r[-2], r[-1]):
        return EmpiricalRegime(EmpiricalKind.TEMPERED, (r[-2] + r[-1]) / 2, ev)
    return EmpiricalRegime(EmpiricalKind.INCONCLUSIVE, None, ev)
