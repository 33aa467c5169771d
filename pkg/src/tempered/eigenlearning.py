"""Spectral risk estimate for kernel regression.

Given eigenvalues ``lam``, eigencoefficients ``v``, ridge ``delta`` and
training size ``n``, the effective ridge ``C`` solves

    sum_i lam_i / (lam_i + C) + delta / C = n,

learnabilities are ``L_i = lam_i / (lam_i + C)``, the overfitting
coefficient is ``E0 = n / (n - sum L_i^2)`` and the predicted test MSE
(including test-label noise) is ``E0 * (sum (1 - L_i)^2 v_i^2 + noise)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DegenerateE0, NoSolution, NonConvergence, Unclassified
from .spectra import (Explicit, LogPowerlaw, Powerlaw, Spectrum, SuperPolynomial,
                      TargetCoefficients)

__all__ = [
    "EffectiveRidge",
    "RiskEstimate",
    "RegimeKind",
    "Regime",
    "SweepPoint",
    "self_consistency_residual",
    "ridge_bounds",
    "solve_effective_ridge",
    "risk_estimate",
    "classify_regime",
    "asymptotic_sweep",
    "powerlaw_ridge_asymptote",
]

TOL = 1e-10
MAX_ITER = 200


@dataclass(frozen=True)
class EffectiveRidge:
    C: float
    residual: float
    bracket: tuple
    iterations: int = 0


def self_consistency_residual(lam: np.ndarray, ridge: float, n: float, C: float) -> float:
    """LHS minus n of the effective-ridge equation; strictly decreasing in C."""
    return float(np.sum(lam / (lam + C)) + ridge / C - n)


def ridge_bounds(lam: np.ndarray, ridge: float, n: int) -> tuple:
    """Certified (lo, hi) for C from the gamma-family bounds.

    hi = min over gamma = m/n in (0, 1) of (ridge + sum_{i >= n - m} lam_i)/m,
    plus the gamma -> 1 limit (trace + ridge) / n.
    lo = max over gamma = m/n > 0 with n + m <= M of (m/n) lam_{n+m},
    plus ridge / n.
    Indices are 1-based as in the formulas.
    """
    M = len(lam)
    hi = (float(np.sum(lam)) + ridge) / n
    if n >= 2:
        m = np.arange(1, n)
        start = n - m                                   # 1-based index i >= n - m
        suffix = np.concatenate([np.cumsum(lam[::-1])[::-1], [0.0]])
        tail = suffix[np.minimum(start - 1, M)]
        hi = min(hi, float(np.min((ridge + tail) / m)))
    lo = ridge / n
    if M > n:
        m = np.arange(1, M - n + 1)
        lo = max(lo, float(np.max(m / n * lam[n + m - 1])))
    return lo, hi


def solve_effective_ridge(spectrum: Spectrum, n: int, tol: float = TOL,
                          max_iter: int = MAX_ITER) -> EffectiveRidge:
    """Brent's method on log C; returns C with |residual| <= tol * n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    lam = spectrum.eigenvalues
    ridge = spectrum.total_ridge
    if ridge == 0 and spectrum.rank <= n:
        raise NoSolution(
            f"ridgeless spectrum of rank {spectrum.rank} cannot absorb n={n} samples")

    def f(log_c):
        return self_consistency_residual(lam, ridge, n, math.exp(log_c))

    # the certified bounds make a tight starting bracket; widen only if needed
    bounds = ridge_bounds(lam, ridge, n)
    lo = bounds[0] if bounds[0] > 0 else lam[lam > 0][-1] * 1e-3
    a = math.log(lo) - 1e-6
    b = math.log(bounds[1]) + 1e-6
    fa, fb = f(a), f(b)
    grow = 0
    while fa < 0:
        a -= 2.0 ** grow
        fa = f(a)
        grow += 1
        if grow > 60:
            raise NonConvergence("could not bracket the root from below")
    grow = 0
    while fb > 0:
        b += 2.0 ** grow
        fb = f(b)
        grow += 1
        if grow > 60:
            raise NonConvergence("could not bracket the root from above")

    target = tol * n
    if abs(fa) <= target or abs(fb) <= target:
        x = a if abs(fa) <= abs(fb) else b
        return EffectiveRidge(math.exp(x), f(x), bounds, 0)
    x, info = optimize.brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                              maxiter=max_iter, full_output=True, disp=False)
    res = f(x)
    if abs(res) > target:
        raise NonConvergence(
            f"residual {res:.3e} above {target:.3e} after {info.iterations} iterations")
    return EffectiveRidge(math.exp(x), res, bounds, info.iterations)


@dataclass(frozen=True)
class RiskEstimate:
    n: int
    C: float
    learnabilities: np.ndarray = field(repr=False, compare=False)
    learnability_sq_sum: float
    E0: float
    bias_term: float
    noise: float
    predicted_mse: float
    predicted_excess: float


def risk_estimate(spectrum: Spectrum, coeffs: TargetCoefficients | None, n: int,
                  noise: float, ridge_solution: EffectiveRidge | None = None) -> RiskEstimate:
    if noise < 0:
        raise ValueError("noise variance must be nonnegative")
    sol = ridge_solution or solve_effective_ridge(spectrum, n)
    lam = spectrum.eigenvalues
    L = lam / (lam + sol.C)
    L.setflags(write=False)
    sq = float(np.sum(L ** 2))
    gap = n - sq
    if gap <= TOL * n:
        raise DegenerateE0(f"sum L^2 = {sq:.12g} reached n = {n}")
    E0 = n / gap
    if coeffs is None:
        bias = 0.0
    else:
        if len(coeffs.values) != len(lam):
            raise ValueError("coefficient length does not match spectrum")
        bias = float(np.sum((1.0 - L) ** 2 * coeffs.squared))
    mse = E0 * (bias + noise)
    return RiskEstimate(n, sol.C, L, sq, E0, bias, noise, mse, mse - noise)


class RegimeKind(enum.Enum):
    BENIGN = "Benign"
    TEMPERED = "Tempered"
    CATASTROPHIC = "Catastrophic"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    asymptotic_mse: float | None = None

    def __str__(self):
        if self.kind is RegimeKind.TEMPERED:
            return f"Tempered({self.asymptotic_mse:g})"
        return self.kind.value


def _superpoly_ratio_holds(lam: np.ndarray) -> bool:
    if np.any(lam <= 0):
        return False
    i = np.arange(1, len(lam), dtype=float)
    log_ref = np.log(i + 1) ** 2 - np.log(i) ** 2   # log of i^-ln i / (i+1)^-ln(i+1)
    log_ratio = np.log(lam[:-1]) - np.log(lam[1:])
    return bool(np.all(log_ratio >= log_ref - 1e-12))


def _explicit_powerlaw_exponent(lam: np.ndarray) -> float | None:
    if np.any(lam <= 0) or lam[0] != 1.0:
        return None
    i = np.arange(2, len(lam) + 1, dtype=float)
    alphas = -np.log(lam[1:]) / np.log(i)
    alpha = float(np.median(alphas))
    if np.allclose(lam, np.arange(1, len(lam) + 1, dtype=float) ** -alpha,
                   rtol=1e-9, atol=0):
        return alpha
    return None


def classify_regime(spectrum: Spectrum, noise: float) -> Regime:
    """Rule-based regime of the n -> infinity limit of the risk estimate."""
    if not noise > 0:
        raise ValueError("regimes are defined for positive noise only")
    fam = spectrum.family
    if spectrum.ridge > 0 or spectrum.tailsum > 0:
        return Regime(RegimeKind.BENIGN)
    if isinstance(fam, LogPowerlaw) and fam.alpha > 1:
        return Regime(RegimeKind.BENIGN)
    if isinstance(fam, Powerlaw) and fam.alpha > 1:
        return Regime(RegimeKind.TEMPERED, fam.alpha * noise)
    if isinstance(fam, SuperPolynomial):
        return Regime(RegimeKind.CATASTROPHIC)
    if isinstance(fam, Explicit):
        lam = spectrum.eigenvalues
        if _superpoly_ratio_holds(lam):
            return Regime(RegimeKind.CATASTROPHIC)
        alpha = _explicit_powerlaw_exponent(lam)
        if alpha is not None and alpha > 1:
            return Regime(RegimeKind.TEMPERED, alpha * noise)
    raise Unclassified(f"no regime rule matches {spectrum.describe()}")


@dataclass(frozen=True)
class SweepPoint:
    n: int
    estimate: RiskEstimate | None
    error: str | None = None


def asymptotic_sweep(spectrum: Spectrum, coeffs: TargetCoefficients | None,
                     noise: float, n_grid) -> list:
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    out = []
    for n in n_grid:
        try:
            out.append(SweepPoint(n, risk_estimate(spectrum, coeffs, n, noise)))
        except (NoSolution, NonConvergence, DegenerateE0) as exc:
            out.append(SweepPoint(n, None, f"{type(exc).__name__}: {exc}"))
    return out


def powerlaw_ridge_asymptote(alpha: float, n: float) -> float:
    """Large-n effective ridge of the ridgeless i^-alpha spectrum."""
    return (math.pi / alpha / math.sin(math.pi / alpha)) ** alpha * n ** -alpha
