from math import exp, log, sin

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakwalk.survival import (
    LOG_FLOOR,
    PathDistribution,
    figure1_theta,
    is_strictly_decreasing,
    log_survival,
    log_survival_fast,
    log_survival_leading_order,
    monotonicity_scan,
    overwrite_prob_exact,
    overwrite_prob_gaussian,
    overwrite_prob_recursion,
    overwrite_probs,
    overwrite_probs_closed_form,
    overwrite_probs_recursion,
    survival_all_tracks,
    survival_curve,
)

# 50-digit mpmath evaluations of the binomial path sum, frozen
ORACLE_P = {
    (1, 0.3, 0.0): 0.022331755437196988538,
    (7, 0.1, 0.25): 0.042634149227649695596,
    (30, 0.02, 0.1): 0.0064478330809618810249,
    (200, 0.3, 0.5): 0.97620649020757848475,
    (200, 0.02, -0.25): 0.70201206557287314027,
}
ORACLE_S85 = {0.0: 0.49789448409676216406, 0.2: 0.00085886439475065929165}


@pytest.mark.parametrize("key", sorted(ORACLE_P))
def test_path_sum_against_high_precision(key):
    assert overwrite_prob_exact(*key) == pytest.approx(ORACLE_P[key], abs=1e-13)
    assert overwrite_prob_recursion(*key) == pytest.approx(ORACLE_P[key], abs=1e-13)


@pytest.mark.parametrize("e", sorted(ORACLE_S85))
def test_anchor_survival_against_high_precision(e):
    assert survival_curve(85, 0.0277, e).survival == pytest.approx(ORACLE_S85[e], rel=1e-12)


def test_single_round_is_one_step_escape():
    for e in (0.0, 0.3, -0.5):
        assert overwrite_prob_exact(1, 0.2, e) == pytest.approx(sin(0.1) ** 2, abs=1e-16)


def test_path_distribution_moments():
    d = PathDistribution(10, 0.1, 0.2)
    assert d.p_plus == pytest.approx(0.7)
    assert d.mean == pytest.approx(10 * 0.1 * 2 * 0.2)
    assert d.variance == pytest.approx(10 * 0.01 * (1 - 0.16))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 150), st.sampled_from([0.01, 0.1, 0.5, 1.2]), st.floats(-0.5, 0.5))
def test_three_exact_routes_agree(m, theta, e):
    a = overwrite_probs(m, theta, e, "exact")
    np.testing.assert_allclose(a, overwrite_probs_recursion(m, theta, e), atol=1e-11)
    np.testing.assert_allclose(a, overwrite_probs_closed_form(m, theta, e), atol=1e-11)


def test_windowed_sum_beyond_direct_limit():
    # i > 60 switches to the log-space windowed sum; the recursion is the reference
    ref = overwrite_probs_recursion(2000, 0.01, 0.3)
    np.testing.assert_allclose(overwrite_probs(2000, 0.01, 0.3, "exact"), ref, atol=1e-11)


def test_curve_is_monotone_and_tagged():
    c = survival_curve(40, 0.09, 0.25, "exact")
    assert c.track == "exact"
    assert np.all(np.diff(c.log_survival) <= 0)
    assert c.survival_at(40) == pytest.approx(c.survival)
    assert set(survival_all_tracks(10, 0.1, 0.0)) == {"exact", "gaussian", "leading_order"}


def test_unknown_track_rejected():
    with pytest.raises(ValueError):
        survival_curve(5, 0.1, 0.0, "made_up")


def test_underflow_floor():
    c = survival_curve(3000, 1.0, 0.5, "exact")
    assert c.underflow
    assert c.final_log_survival == LOG_FLOOR
    assert not survival_curve(30, 0.1, 0.2).underflow


def test_gaussian_track_close_for_small_theta():
    for i in (10, 50, 200):
        assert overwrite_prob_gaussian(i, 0.01, 0.2) == pytest.approx(overwrite_prob_exact(i, 0.01, 0.2), abs=2e-4)


def test_leading_order_formula():
    m, th, e = 85, 0.0277, 0.2
    assert -log_survival_leading_order(m, th, e) == pytest.approx(m * m * th * th / 8 + m**3 * e * e * th * th / 3)
    arr = log_survival_leading_order(np.arange(1, 4), th, e)
    assert arr.shape == (3,)


def drift(m, theta, e):
    return log_survival(m, theta, 0.0) - log_survival(m, theta, e)


@pytest.mark.parametrize("m", [20, 40])
def test_drift_cubic_at_fixed_theta(m):
    assert drift(2 * m, 0.005, 0.25) / drift(m, 0.005, 0.25) == pytest.approx(8.0, rel=0.01)


@pytest.mark.parametrize("m", [100, 200])
def test_drift_linear_at_fixed_m_theta(m):
    assert drift(2 * m, 1.0 / (2 * m), 0.1) / drift(m, 1.0 / m, 0.1) == pytest.approx(2.0, rel=0.01)


def test_monotonicity_scan_flags_overestimate():
    rows = monotonicity_scan(85, 0.0277, [0.0, 0.2, 0.4])
    assert is_strictly_decreasing([r.s_exact for r in rows])
    assert rows[2].approx_overestimates
    assert rows[1].s_exact == pytest.approx(ORACLE_S85[0.2], rel=1e-12)


def test_fast_log_survival_matches_exact():
    assert log_survival_fast(500, 0.004, 0.1) == pytest.approx(log_survival(500, 0.004, 0.1), abs=1e-10)


def test_figure1_theta_lands_in_window():
    a = figure1_theta()
    assert a.method == "fitted"
    assert a.inverted_theta == pytest.approx((8 * -log(0.55)) ** 0.5 / 25)
    assert 0.045 <= a.s1 <= 0.050
    assert 0.53 <= a.s0 <= 0.57
    assert a.s1 < exp(-3)


def test_frozen_walk_never_escapes():
    for i in (1, 5, 90):
        assert overwrite_prob_exact(i, 0.0, 0.3) == 0.0


def test_two_step_enumeration():
    # paths ++, +-, -+, --: only the two same-sign paths leave |0>
    assert overwrite_prob_exact(2, 0.2, 0.0) == pytest.approx(sin(0.2) ** 2 / 2, abs=1e-16)


def test_gaussian_track_small_quantity_regime():
    worst = 0.0
    for theta in (0.01, 0.0277, 0.0875, 0.3):
        for e in (0.0, 0.1, 0.2, 0.25, 0.5):
            for i in range(10, 400):
                if i * e * theta <= 0.5:
                    ex = overwrite_prob_exact(i, theta, e)
                    worst = max(worst, abs(overwrite_prob_gaussian(i, theta, e) - ex) / ex)
    assert worst <= 0.05


@pytest.mark.parametrize("m,e", [(25, 0.0), (25, 0.25), (85, 0.0), (85, 0.2)])
def test_leading_order_regime(m, e):
    theta = figure1_theta().theta if m == 25 else 0.0277
    exact = log_survival(m, theta, e)
    assert abs(log_survival_leading_order(m, theta, e) - exact) <= 0.1 * abs(exact)
