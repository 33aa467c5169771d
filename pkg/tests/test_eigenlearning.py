import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempered.eigenlearning import (TOL, RegimeKind, asymptotic_sweep, classify_regime,
                                    powerlaw_ridge_asymptote, ridge_bounds, risk_estimate,
                                    self_consistency_residual, solve_effective_ridge)
from tempered.errors import NoSolution, Unclassified
from tempered.spectra import (Explicit, LogPowerlaw, Powerlaw, SuperPolynomial,
                              TargetCoefficients, make_spectrum, powerlaw_coefficients)


def zero_spectrum(M=5, ridge=1.0):
    return make_spectrum(Explicit([0.0] * M), ridge=ridge)


def test_pure_ridge_solution():
    sol = solve_effective_ridge(zero_spectrum(), 10)
    assert sol.C == pytest.approx(0.1, rel=1e-9)
    assert abs(sol.residual) <= TOL * 10


def test_two_mode_quadratic():
    # 1/(1+C) + 0.5/(0.5+C) = 1  <=>  C^2 = 0.5
    sol = solve_effective_ridge(make_spectrum(Explicit([1.0, 0.5])), 1)
    assert sol.C == pytest.approx(math.sqrt(0.5), rel=1e-9)


def test_no_solution_when_rank_too_small():
    with pytest.raises(NoSolution):
        solve_effective_ridge(make_spectrum(Explicit([1.0, 0.5, 0.0])), 2)


@pytest.mark.property
def test_residual_is_strictly_decreasing():
    lam = make_spectrum(Powerlaw(2.0), 1000).eigenvalues
    cs = np.logspace(-8, 2, 50)
    r = [self_consistency_residual(lam, 0.0, 10, c) for c in cs]
    assert np.all(np.diff(r) < 0)


def test_repeat_solutions_agree():
    s = make_spectrum(Powerlaw(1.7), 20_000)
    a, b = solve_effective_ridge(s, 300), solve_effective_ridge(s, 300)
    assert abs(a.C - b.C) <= 2 * TOL


def test_powerlaw_asymptote_alpha2():
    s = make_spectrum(Powerlaw(2.0), 10**6)
    C = solve_effective_ridge(s, 1000).C
    assert C == pytest.approx(powerlaw_ridge_asymptote(2.0, 1000), rel=0.01)
    assert powerlaw_ridge_asymptote(2.0, 1000) == pytest.approx((math.pi / 2) ** 2 * 1e-6)


def _certify(spectrum, n):
    lam = spectrum.eigenvalues
    ridge = spectrum.total_ridge
    C = solve_effective_ridge(spectrum, n).C
    lo, hi = ridge_bounds(lam, ridge, n)
    slack = 1e-8 * C
    assert lo - slack <= C <= hi + slack
    # gamma = 1/2 upper bound and gamma = 1 lower bound, checked directly
    if n % 2 == 0 and n // 2 <= len(lam):
        assert C <= 2 / n * (ridge + lam[n // 2 - 1:].sum()) + slack
    if 2 * n <= len(lam):
        assert C >= lam[2 * n - 1] - slack
    return C


@pytest.mark.parametrize("family", [Powerlaw(1.5), Powerlaw(3.0), LogPowerlaw(2.0),
                                    SuperPolynomial()])
@pytest.mark.parametrize("n", [1, 2, 10, 64, 500])
@pytest.mark.parametrize("ridge", [0.0, 0.01])
def test_bound_certificates(family, n, ridge):
    _certify(make_spectrum(family, 5000, ridge=ridge), n)


@pytest.mark.property
@settings(max_examples=25, deadline=None)
@given(st.floats(1.1, 4.0), st.integers(1, 400), st.integers(1, 200),
       st.floats(0.0, 1.0))
def test_C_decreases_in_n(alpha, n, dn, ridge):
    s = make_spectrum(Powerlaw(alpha), 2000, ridge=ridge)
    assert solve_effective_ridge(s, n + dn).C < solve_effective_ridge(s, n).C


@pytest.mark.property
@settings(max_examples=25, deadline=None)
@given(st.floats(1.1, 4.0), st.integers(1, 400), st.floats(0.0, 1.0), st.floats(1e-3, 1.0))
def test_C_increases_in_ridge(alpha, n, ridge, bump):
    a = solve_effective_ridge(make_spectrum(Powerlaw(alpha), 2000, ridge=ridge), n).C
    b = solve_effective_ridge(make_spectrum(Powerlaw(alpha), 2000, ridge=ridge + bump), n).C
    assert b > a


@pytest.mark.property
@settings(max_examples=30, deadline=None)
@given(st.floats(1.1, 4.0), st.integers(1, 500), st.floats(0.0, 1.0), st.floats(0.0, 3.0),
       st.floats(0.0, 20.0))
def test_learnability_and_E0_bounds(alpha, n, ridge, noise, budget):
    M = 2000
    s = make_spectrum(Powerlaw(alpha), M, ridge=ridge)
    est = risk_estimate(s, powerlaw_coefficients(M, 2.0, budget) if budget else None, n, noise)
    L = est.learnabilities
    assert np.all((L >= 0) & (L <= 1))
    assert np.all(np.diff(L) <= 0)
    assert est.E0 >= 1.0
    assert est.predicted_mse >= est.E0 * noise - 1e-12
    assert est.E0 * noise >= noise


@pytest.mark.property
def test_E0_is_one_when_nothing_learned():
    est = risk_estimate(zero_spectrum(ridge=1.0), TargetCoefficients(np.zeros(5), 0.0), 10, 1.0)
    assert est.E0 == 1.0
    assert np.all(est.learnabilities == 0)
    assert est.predicted_mse == 1.0


def test_powerlaw_noise_only_near_alpha():
    est = risk_estimate(make_spectrum(Powerlaw(2.0), 10**6), None, 1024, 1.0)
    assert est.predicted_mse == pytest.approx(2.0, rel=0.05)


def test_two_mode_estimate_against_mpmath():
    s = make_spectrum(Explicit([1.0, 0.5]))
    coeffs = TargetCoefficients(np.array([1.0, 0.0]), 1.0)
    est = risk_estimate(s, coeffs, 1, 0.5)
    mpmath.mp.dps = 50
    C = mpmath.sqrt(mpmath.mpf("0.5"))
    L1, L2 = 1 / (1 + C), mpmath.mpf("0.5") / (mpmath.mpf("0.5") + C)
    E0 = 1 / (1 - L1 ** 2 - L2 ** 2)
    mse = E0 * ((1 - L1) ** 2 + mpmath.mpf("0.5"))
    assert est.E0 == pytest.approx(float(E0), rel=1e-8)
    assert est.predicted_mse == pytest.approx(float(mse), rel=1e-8)


@pytest.mark.parametrize("spec,noise,expect", [
    (make_spectrum(Powerlaw(3.0), 1000), 1.0, (RegimeKind.TEMPERED, 3.0)),
    (make_spectrum(Powerlaw(3.0), 1000, ridge=0.1), 1.0, (RegimeKind.BENIGN, None)),
    (make_spectrum(Powerlaw(3.0), 1000, tailsum=0.1), 1.0, (RegimeKind.BENIGN, None)),
    (make_spectrum(SuperPolynomial(), 1000), 1.0, (RegimeKind.CATASTROPHIC, None)),
    (make_spectrum(LogPowerlaw(2.0), 1000), 1.0, (RegimeKind.BENIGN, None)),
    (make_spectrum(Powerlaw(2.0), 1000), 0.5, (RegimeKind.TEMPERED, 1.0)),
])
def test_classify_regime(spec, noise, expect):
    r = classify_regime(spec, noise)
    assert (r.kind, r.asymptotic_mse) == expect


def test_classify_explicit_lists():
    pl = make_spectrum(Explicit(list(np.arange(1, 51, dtype=float) ** -2.5)))
    assert classify_regime(pl, 1.0).asymptotic_mse == pytest.approx(2.5)
    sp = make_spectrum(Explicit([math.exp(-math.log(i) ** 2) for i in range(1, 40)]))
    assert classify_regime(sp, 1.0).kind is RegimeKind.CATASTROPHIC
    with pytest.raises(Unclassified):
        classify_regime(make_spectrum(Explicit([1.0, 0.9, 0.1])), 1.0)
    with pytest.raises(ValueError):
        classify_regime(make_spectrum(Powerlaw(2.0), 10), 0.0)


def test_sweep_constant_for_pure_ridge():
    pts = asymptotic_sweep(zero_spectrum(), None, 1.0, [1, 2, 4, 8])
    assert [p.estimate.predicted_mse for p in pts] == [1.0] * 4


def test_sweep_records_errors_in_row():
    pts = asymptotic_sweep(make_spectrum(Explicit([1.0, 0.5, 0.25])), None, 1.0, [1, 2, 3, 4])
    assert pts[0].error is None
    assert pts[-1].estimate is None and pts[-1].error.startswith("NoSolution")
    with pytest.raises(ValueError):
        asymptotic_sweep(zero_spectrum(), None, 1.0, [4, 2])


GRID = [64 * 2 ** k for k in range(8)]      # 64 .. 8192


def test_sweep_tempered_powerlaw():
    pts = asymptotic_sweep(make_spectrum(Powerlaw(1.5), 10**7), None, 1.0, GRID)
    assert pts[-1].estimate.predicted_mse == pytest.approx(1.5, rel=0.10)
    assert pts[-1].estimate.predicted_excess == pytest.approx(0.5, abs=0.1)


def test_sweep_benign_logpowerlaw_non_increasing():
    pts = asymptotic_sweep(make_spectrum(LogPowerlaw(2.0), 10**7), None, 1.0,
                           [32 * 2 ** k for k in range(8)])
    excess = [p.estimate.predicted_excess for p in pts]
    assert all(b <= a for a, b in zip(excess, excess[1:]))


def test_sweep_catastrophic_superpolynomial():
    pts = asymptotic_sweep(make_spectrum(SuperPolynomial(), 10**5), None, 1.0,
                           [64, 256, 1024, 4096])
    mse = [p.estimate.predicted_mse for p in pts]
    assert all(b > a for a, b in zip(mse, mse[1:]))
    assert mse[-1] > 10.0
