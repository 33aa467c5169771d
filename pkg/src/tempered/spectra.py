"""Kernel eigenvalue sequences and target eigencoefficients.

A :class:`Spectrum` is an immutable, truncated, nonincreasing list of
eigenvalues together with the explicit ridge and an optional tail-mass
ridge.  Eigenvalue families use the natural logarithm throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special

__all__ = [
    "Powerlaw",
    "LogPowerlaw",
    "SuperPolynomial",
    "Explicit",
    "Spectrum",
    "TargetCoefficients",
    "Assumption1Report",
    "make_spectrum",
    "powerlaw_coefficients",
    "zero_coefficients",
    "truncation_tail",
    "fold_tail",
    "validate_assumption1",
]


@dataclass(frozen=True)
class Powerlaw:
    alpha: float

    def describe(self) -> str:
        return f"powerlaw({self.alpha:g})"


@dataclass(frozen=True)
class LogPowerlaw:
    alpha: float

    def describe(self) -> str:
        return f"logpowerlaw({self.alpha:g})"


@dataclass(frozen=True)
class SuperPolynomial:
    def describe(self) -> str:
        return "superpolynomial"


@dataclass(frozen=True)
class Explicit:
    values: tuple

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    def describe(self) -> str:
        return f"explicit[{len(self.values)}]"


Family = Union[Powerlaw, LogPowerlaw, SuperPolynomial, Explicit]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _family_values(family: Family, M: int) -> np.ndarray:
    i = np.arange(1, M + 1, dtype=float)
    if isinstance(family, Powerlaw):
        return i ** -family.alpha
    if isinstance(family, LogPowerlaw):
        lam = np.empty(M)
        lam[1:] = 1.0 / (i[1:] * np.log(i[1:]) ** family.alpha)
        # log 1 = 0 makes the first mode singular; copy the second one.
        lam[0] = lam[1]
        return lam
    if isinstance(family, SuperPolynomial):
        return np.exp(-np.log(i) ** 2)
    raise TypeError(f"not a spectrum family: {family!r}")


@dataclass(frozen=True)
class Spectrum:
    """Truncated kernel spectrum.

    ``ridge`` is the explicit ridge added to the kernel matrix; ``tailsum`` is
    the aggregate mass of neglected tiny modes, which enters the
    effective-ridge equation exactly like a ridge but leaves the kernel
    interpolating.
    """

    family: Family
    M: int
    ridge: float
    tailsum: float
    eigenvalues: np.ndarray = field(repr=False, compare=False)

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0))

    @property
    def total_ridge(self) -> float:
        return self.ridge + self.tailsum

    def describe(self) -> str:
        s = f"{self.family.describe()} M={self.M} ridge={self.ridge:g}"
        if self.tailsum:
            s += f" tailsum={self.tailsum:g}"
        return s


def make_spectrum(family: Family, M: int | None = None, ridge: float = 0.0,
                  tailsum: float = 0.0) -> Spectrum:
    """Build a validated :class:`Spectrum`.

    For :class:`Explicit` families ``M`` defaults to the list length and must
    match it when given.
    """
    if isinstance(family, Explicit):
        vals = np.asarray(family.values, dtype=float)
        if M is None:
            M = len(vals)
        if M != len(vals):
            raise ValueError(f"M={M} does not match {len(vals)} explicit values")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("explicit eigenvalues must be finite and nonnegative")
        if np.any(np.diff(vals) > 0):
            raise ValueError("explicit eigenvalues are not nonincreasing")
    else:
        if M is None:
            raise ValueError("M is required for parametric families")
        if isinstance(family, (Powerlaw, LogPowerlaw)) and not family.alpha > 0:
            raise ValueError(f"alpha must be positive, got {family.alpha}")
    if M < 2:
        raise ValueError(f"need M >= 2, got {M}")
    if ridge < 0 or tailsum < 0:
        raise ValueError("ridge and tailsum must be nonnegative")
    if isinstance(family, Explicit):
        lam = vals
    else:
        lam = _family_values(family, int(M))
    return Spectrum(family, int(M), float(ridge), float(tailsum), _readonly(lam))


def truncation_tail(family: Family, M: int) -> float:
    """Eigenvalue mass beyond index ``M`` (infinite for divergent families)."""
    if isinstance(family, Explicit):
        return 0.0
    if isinstance(family, Powerlaw):
        if family.alpha <= 1:
            return float("inf")
        return float(special.zeta(family.alpha, M + 1))
    if isinstance(family, LogPowerlaw):
        if family.alpha <= 1:
            return float("inf")
        # integral of 1/(z log^a z) from M + 1/2, midpoint-corrected
        return float(np.log(M + 0.5) ** (1 - family.alpha) / (family.alpha - 1))
    if isinstance(family, SuperPolynomial):
        total, start, block = 0.0, M + 1, 1 << 16
        while True:
            i = np.arange(start, start + block, dtype=float)
            part = float(np.sum(np.exp(-np.log(i) ** 2)))
            total += part
            if part <= 1e-17 * max(total, 1e-300) or part == 0.0:
                return total
            start += block
    raise TypeError(f"not a spectrum family: {family!r}")


def fold_tail(spectrum: Spectrum) -> Spectrum:
    """Return a copy whose ``tailsum`` absorbs the mass beyond truncation.

    Only sensible at sample sizes where the effective ridge is far above
    ``lambda_{M+1}``.  Note that a positive tailsum makes
    :func:`tempered.eigenlearning.classify_regime` report the spectrum as
    benign.
    """
    tail = truncation_tail(spectrum.family, spectrum.M)
    if not np.isfinite(tail):
        raise ValueError("tail mass diverges; nothing finite to fold")
    return Spectrum(spectrum.family, spectrum.M, spectrum.ridge,
                    spectrum.tailsum + tail, spectrum.eigenvalues)


@dataclass(frozen=True)
class TargetCoefficients:
    values: np.ndarray = field(compare=False)
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    @classmethod
    def normalized(cls, raw, budget: float) -> "TargetCoefficients":
        raw = np.asarray(raw, dtype=float)
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        peak = float(np.max(np.abs(raw))) if raw.size else 0.0
        if peak == 0.0:
            if budget != 0:
                raise ValueError("cannot scale a zero vector to a positive budget")
            return cls(raw.copy(), 0.0)
        unit = raw / peak                       # rescale first so squares cannot underflow
        return cls(unit * np.sqrt(budget / float(np.sum(unit ** 2))), float(budget))

    @property
    def squared(self) -> np.ndarray:
        return self.values ** 2


def powerlaw_coefficients(M: int, exponent: float = 2.0,
                          budget: float = 10.0) -> TargetCoefficients:
    """v_i proportional to i^-exponent, scaled so sum(v_i^2) == budget."""
    i = np.arange(1, M + 1, dtype=float)
    return TargetCoefficients.normalized(i ** -exponent, budget)


def zero_coefficients(M: int) -> TargetCoefficients:
    return TargetCoefficients(np.zeros(M), 0.0)


PASS, FAIL, APPROX = "pass", "fail", "approximated by truncation M"


@dataclass
class Assumption1Report:
    clauses: dict
    notes: dict

    @property
    def ok(self) -> bool:
        return all(v != FAIL for v in self.clauses.values())


def _trace_converges(family: Family) -> bool:
    if isinstance(family, (Powerlaw, LogPowerlaw)):
        return family.alpha > 1
    return True


def validate_assumption1(spectrum: Spectrum,
                         coeffs: TargetCoefficients | None = None) -> Assumption1Report:
    """Check the finite-M readings of the spectral/target assumptions.

    Clause (c), infinite rank, cannot be tested on a truncated list and is
    reported as approximated.  Clause (b) uses the analytic convergence rule
    for parametric families; the partial traces at M/2 and M are reported as
    evidence.
    """
    lam = spectrum.eigenvalues
    clauses, notes = {}, {}
    clauses["a"] = PASS if np.all(np.diff(lam) <= 0) and np.all(lam >= 0) else FAIL

    half = spectrum.M // 2
    tr_half, tr_full = float(np.sum(lam[:half])), float(np.sum(lam))
    notes["b"] = {"trace_half_M": tr_half, "trace_M": tr_full,
                  "growth": tr_full - tr_half}
    finite = np.isfinite(tr_full)
    clauses["b"] = PASS if finite and _trace_converges(spectrum.family) else FAIL
    if clauses["b"] == FAIL:
        notes["b"]["reason"] = "partial trace grows without bound along M"

    clauses["c"] = APPROX
    notes["c"] = {"rank": spectrum.rank, "M": spectrum.M}

    if coeffs is not None:
        v = coeffs.values
        if len(v) != spectrum.M:
            raise ValueError("coefficient length does not match spectrum")
        clauses["d"] = PASS if np.isfinite(np.sum(v ** 2)) else FAIL
        bad = np.flatnonzero((lam == 0) & (v != 0))
        clauses["e"] = FAIL if bad.size else PASS
        if bad.size:
            notes["e"] = {"weighted_zero_modes": (bad + 1).tolist()}
    return Assumption1Report(clauses, notes)
