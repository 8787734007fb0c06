import math

import numpy as np
import pytest

from consensus_clock.errors import DomainError, SecurityThresholdError
from consensus_clock.mm1 import (BitcoinParams, busy_lt, cycle_lt,
                                 denominator_d, dominant_pole, kappa_lt,
                                 pole_function_g, residual_lt, tail_exponent,
                                 ttc_excursion_lt, ttc_lt, ttc_mean,
                                 unstable_cycle_lt)

RAW12 = BitcoinParams.from_rates(1.0, 2.0)
BP72 = BitcoinParams(p=0.72, q=0.9)


def test_constructor_enforces_security_threshold():
    with pytest.raises(SecurityThresholdError):
        BitcoinParams(p=0.5, q=0.9)
    with pytest.raises(SecurityThresholdError):
        BitcoinParams(p=0.52, q=0.9)  # p*q = 0.468 < 0.48


def test_derived_constants():
    assert BP72.lam + BP72.mu == pytest.approx(0.1, abs=1e-15)
    assert BP72.rho == pytest.approx(0.28 / 0.648, rel=1e-12)
    assert 0.5 < BP72.p_hat < 1.0
    assert 0.0 < BP72.theta < 0.5
    assert BP72.s_star > 0.0
    assert BP72.theta == pytest.approx(0.42137, abs=5e-6)


def test_from_rates_roundtrip():
    assert RAW12.lam == pytest.approx(1.0, rel=1e-12)
    assert RAW12.mu == pytest.approx(2.0, rel=1e-12)


def test_busy_lt_examples():
    assert busy_lt(RAW12, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert busy_lt(RAW12, 1.0) == pytest.approx(2 - math.sqrt(2), abs=1e-12)
    s_star = RAW12.s_star
    assert s_star == pytest.approx(3 - 2 * math.sqrt(2), abs=1e-12)
    assert busy_lt(RAW12, -s_star) == pytest.approx(math.sqrt(2), abs=1e-9)
    with pytest.raises(DomainError):
        busy_lt(RAW12, -s_star - 1e-3)


def test_boundary_identity_random_params():
    rng = np.random.default_rng(99)
    for _ in range(20):
        p = float(rng.uniform(0.6, 0.98))
        q = float(rng.uniform(0.8, 1.0))
        if p * q <= 1 - p:
            continue
        bp = BitcoinParams(p=p, q=q)
        assert busy_lt(bp, -bp.s_star) == pytest.approx(bp.rho ** -0.5, abs=1e-9)


def test_busy_quadratic_identity():
    lam, mu = RAW12.lam, RAW12.mu
    for s in np.geomspace(1e-3, 10, 40):
        b = busy_lt(RAW12, float(s))
        assert lam * b * b - (lam + mu + s) * b + mu == pytest.approx(0.0, abs=1e-10)


def test_transforms_equal_one_at_zero():
    for f in (busy_lt, cycle_lt, residual_lt, unstable_cycle_lt, kappa_lt, ttc_lt):
        assert f(BP72, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_residual_limit_near_zero():
    assert residual_lt(BP72, 1e-8) == pytest.approx(1.0, abs=1e-6)
    assert residual_lt(BP72, 1e-12) == pytest.approx(1.0, abs=1e-9)


def test_cycle_composition_example():
    # lam/(lam+s) * B(s) at s=1 with rates (1, 2)
    assert cycle_lt(RAW12, 1.0) == pytest.approx((2 - math.sqrt(2)) / 2, abs=1e-12)


def test_ttc_lt_forms_agree_on_grid():
    for s in np.geomspace(1e-4 * BP72.rate_scale, 10 * BP72.rate_scale, 60):
        v = ttc_lt(BP72, float(s))  # internal 1e-9 agreement assertion
        assert 0.0 < v <= 1.0


def test_ttc_lt_decreasing_in_s():
    grid = np.linspace(0.01 * BP72.rate_scale, BP72.rate_scale, 25)
    vals = [ttc_lt(BP72, float(s)) for s in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v < 1.0 for v in vals)


def test_ttc_lt_domain_error_beyond_pole():
    s2 = dominant_pole(BP72)
    with pytest.raises(DomainError):
        ttc_lt(BP72, -s2 - 1e-6)


def test_composite_mean_matches_its_closed_form():
    # dual route on the composite transform: finite differences vs the
    # closed-form combination of component means
    lam, mu, rho, ph = BP72.lam, BP72.mu, BP72.rho, BP72.p_hat
    h = 1e-6 * BP72.rate_scale
    fd = -(ttc_lt(BP72, h) - ttc_lt(BP72, -h)) / (2 * h)
    m_b = 1.0 / (mu - lam)
    m_psi = mu / (mu - lam) ** 2
    m_phi = 1.0 / lam + m_b
    m_gam = 1.0 / mu + m_b
    m_kappa = m_gam + ph / (1.0 - ph) * m_phi
    closed = rho * m_psi + rho / (1.0 - rho) * m_kappa
    assert fd == pytest.approx(closed, rel=1e-3)


def test_excursion_lt_at_zero_and_monotone():
    for init in ("tie", "stationary"):
        assert ttc_excursion_lt(BP72, 0.0, init=init) == pytest.approx(1.0, abs=1e-12)
    grid = np.linspace(0.001, 0.2, 30)
    vals = [ttc_excursion_lt(BP72, float(s)) for s in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_ttc_mean_operating_point():
    # headline operating point: about an hour at p = 0.72
    m = ttc_mean(BP72)
    assert 54.0 <= m <= 66.0
    assert m == pytest.approx(60.0, rel=0.10)
    # closed form for the tie start
    assert m == pytest.approx((BP72.lam + BP72.mu) / (BP72.mu - BP72.lam) ** 2,
                              rel=1e-6)


def test_ttc_mean_monotone_in_p():
    assert ttc_mean(BitcoinParams(p=0.9, q=0.9)) < ttc_mean(BP72)


def test_dominant_pole_bracket_signs():
    th = BP72.theta
    assert pole_function_g(BP72, 0.0) > 0.0
    assert pole_function_g(BP72, math.sqrt(2 * th) - 1.0) < 0.0


def test_dominant_pole_sign_scan_oracle():
    # independent oracle: dense sign scan of g over the bracket
    th = BP72.theta
    lo = math.sqrt(2 * th) - 1.0
    xs = np.linspace(lo, 0.0, 1_000_001)
    vals = np.array([pole_function_g(BP72, float(x)) for x in xs[::1000]])
    # coarse pass locates the sign-change cell, fine pass pins it
    k = int(np.nonzero(np.diff(np.sign(vals)))[0][0])
    fine = np.linspace(xs[::1000][k], xs[::1000][k + 1], 1001)
    fvals = np.array([pole_function_g(BP72, float(x)) for x in fine])
    j = int(np.nonzero(np.diff(np.sign(fvals)))[0][0])
    cell = (fine[j], fine[j + 1])
    root = -dominant_pole(BP72) / (BP72.lam + BP72.mu)
    assert cell[0] - 1e-8 <= root <= cell[1] + 1e-8


def test_dominant_pole_below_s_star_on_grid():
    for p in np.arange(0.72, 0.995, 0.03):
        bp = BitcoinParams(p=float(p), q=0.9)
        s2 = dominant_pole(bp)
        assert 0.0 < s2 < bp.s_star
        assert tail_exponent(bp) == s2


def test_denominator_vanishes_at_pole_and_positive_inside():
    s2 = dominant_pole(BP72)
    assert denominator_d(BP72, -s2) == pytest.approx(0.0, abs=1e-9)
    for s in np.linspace(-s2 + 1e-6, 0.0, 100):
        assert denominator_d(BP72, float(s)) > 0.0


def test_g_is_rescaled_denominator():
    # both forms carry sqrt(machine-eps) noise at the branch endpoint, so
    # the identity is checked on the interior of the bracket
    scale = BP72.lam + BP72.mu
    lo = math.sqrt(2 * BP72.theta) - 1.0
    for x in np.linspace(0.95 * lo, 0.0, 50):
        g = pole_function_g(BP72, float(x))
        d = 2.0 * denominator_d(BP72, scale * float(x)) / scale ** 2
        assert g == pytest.approx(d, abs=1e-10)


def test_kappa_pole_reported():
    # the kappa denominator 1 - p_hat * Phi(s) crosses zero inside
    # (-s_star, 0); evaluating at the crossing must raise, not return junk
    from consensus_clock.solvers import bisect_root
    ph = BP72.p_hat
    res = bisect_root(lambda s: 1.0 - ph * cycle_lt(BP72, s),
                      -BP72.s_star + 1e-12, 0.0, tol=1e-16)
    with pytest.raises(DomainError):
        kappa_lt(BP72, res.root)
