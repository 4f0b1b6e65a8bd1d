import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal, norm

from seqtrial.design import hr_to_z
from seqtrial.inference import (
    StoppedTrialDatum,
    adjusted_ci,
    adjusted_summary,
    datum_from_course,
    median_unbiased_hr,
    naive_hr_ci,
    single_look,
    stagewise_p,
)
from seqtrial.monitoring import record_analysis


@pytest.fixture(scope="module")
def trial_two(table):
    z_bound_ia2 = 2.518949  # recalculated for 255 events
    return StoppedTrialDatum((255, 385), (z_bound_ia2, table.row("Primary").efficacy_z_bound), 0,
                             hr_to_z(0.689, 255))


def test_trial_two_z():
    # -ln(0.689) * sqrt(255) / 2
    assert hr_to_z(0.689, 255) == pytest.approx(2.97429, abs=1e-5)


def test_trial_two_adjusted_estimates(trial_two):
    assert median_unbiased_hr(trial_two) == pytest.approx(0.691, abs=5e-3)
    lo, hi = adjusted_ci(trial_two)
    assert lo == pytest.approx(0.540, abs=5e-3)
    assert hi == pytest.approx(0.883, abs=5e-3)
    # frozen values of this implementation
    assert median_unbiased_hr(trial_two) == pytest.approx(0.68900, abs=1e-5)
    assert (lo, hi) == pytest.approx((0.53903, 0.88070), abs=1e-5)


def test_stop_at_first_look_p_value_is_normal_tail(trial_two):
    assert stagewise_p(trial_two, 0.0) == pytest.approx(norm.sf(trial_two.z_observed), rel=1e-10)
    assert adjusted_summary(trial_two)["p_value"] == pytest.approx(0.0014684, abs=1e-7)


def test_stop_at_second_look_matches_multivariate_normal():
    d = StoppedTrialDatum((120, 240), (2.8, 2.0), 1, 2.3)
    theta = 0.1
    info = np.array([30.0, 60.0])
    rho = math.sqrt(0.5)
    mean = theta * np.sqrt(info)
    p1 = norm.sf(2.8 - mean[0])
    below_both = multivariate_normal.cdf([2.8, 2.3], mean, [[1, rho], [rho, 1]], abseps=1e-11, releps=1e-11)
    below_first = norm.cdf(2.8 - mean[0])
    assert stagewise_p(d, theta) == pytest.approx(p1 + below_first - below_both, abs=1e-7)


@pytest.mark.parametrize("hr,events", [(0.689, 255), (0.8, 100), (1.2, 40)])
def test_single_look_collapses_to_naive(hr, events):
    datum = single_look(hr_to_z(hr, events), events)
    _, lo, hi = naive_hr_ci(hr, events)
    assert median_unbiased_hr(datum) == pytest.approx(hr, rel=1e-9)
    assert adjusted_ci(datum) == pytest.approx((lo, hi), rel=1e-9)


def test_naive_interval():
    hr, lo, hi = naive_hr_ci(0.689, 255)
    half = norm.ppf(0.975) * 2 / math.sqrt(255)
    assert (lo, hi) == pytest.approx((0.689 * math.exp(-half), 0.689 * math.exp(half)), rel=1e-12)
    assert hi == pytest.approx(0.881, abs=1e-3)
    assert math.log(hi) - math.log(hr) == pytest.approx(math.log(hr) - math.log(lo))


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.5, 0.8), st.floats(0.01, 0.3), st.floats(2.0, 4.0))
def test_p_value_function_increases_with_theta(theta, step, z):
    d = StoppedTrialDatum((100, 200, 300), (3.2, 2.6, 2.0), 1, max(z, 2.6))
    assert stagewise_p(d, theta + step) > stagewise_p(d, theta)


def test_later_stop_is_less_extreme():
    early = StoppedTrialDatum((100, 200), (2.8, 2.0), 0, 2.9)
    late = StoppedTrialDatum((100, 200), (2.8, 2.0), 1, 3.5)
    assert stagewise_p(early, 0.0) < stagewise_p(late, 0.0)


def test_datum_validation():
    with pytest.raises(ValueError):
        StoppedTrialDatum((100, 200), (2.8, 2.0), 0, 2.5)
    with pytest.raises(ValueError):
        StoppedTrialDatum((200, 100), (2.8, 2.0), 1, 2.5)
    with pytest.raises(ValueError):
        adjusted_ci(single_look(2.0, 100), level=1.5)


def test_datum_from_course(config, trial_two):
    c = config.new_course()
    c = record_analysis(c, "IA1", date(2021, 12, 14), date(2022, 1, 25), 130, observed_hr=0.93)
    c = record_analysis(c, "IA2", date(2023, 4, 10), date(2023, 5, 30), 255, observed_hr=0.689)
    d = datum_from_course(c)
    assert d.events == trial_two.events and d.stage == 0
    assert d.z_bounds == pytest.approx(trial_two.z_bounds, abs=1e-5)
    assert median_unbiased_hr(d) == pytest.approx(median_unbiased_hr(trial_two), abs=1e-6)
