import math
import warnings
from datetime import date

import numpy as np
import pytest
from scipy import integrate

from seqtrial.timing import (
    TrialModel,
    ccod_for_events,
    expected_events,
    expected_events_by_arm,
    minimal_follow_up,
    month_to_date,
    predicted_schedule,
    sample_entry_times,
)


@pytest.fixture(scope="module")
def model(config):
    return config.model


def _events_by_quad(model, tau):
    """Expected events by direct numerical integration over entry time."""
    eta = model.hazard_dropout
    total = 0.0
    start = 0.0
    for rate, dur in zip(model.accrual_rates, model.accrual_durations):
        for p, lam in model.arms():
            h = lam + eta

            def f(u):
                return rate * p * lam / h * (1 - math.exp(-h * (tau - u)))

            hi = min(start + dur, tau)
            if hi > start:
                total += integrate.quad(f, start, hi, epsabs=1e-12)[0]
        start += dur
    return total


@pytest.mark.parametrize("tau", [3.0, 12.0, 19.7, 55.0, 120.0])
def test_expected_events_matches_quadrature(model, tau):
    assert expected_events(model, tau) == pytest.approx(_events_by_quad(model, tau), rel=1e-10)


def test_piecewise_accrual_matches_quadrature():
    m = TrialModel((40.0, 120.0, 60.0), (5.0, 6.0, 4.0), 20.0, 30.0, 0.05, allocation_ratio=2.0)
    for tau in (4.0, 9.0, 30.0):
        assert expected_events(m, tau) == pytest.approx(_events_by_quad(m, tau), rel=1e-10)


def test_expected_events_matches_patient_level_monte_carlo(model):
    """10^6 simulated patients, each contributing an event indicator at tau."""
    rng = np.random.default_rng(11)
    n = 10**6
    tau = 35.6
    entry = sample_entry_times(model, rng.random(n))
    arm = rng.random(n) < 0.5
    lam = np.where(arm, model.hazard_experimental, model.hazard_control)
    t_event = rng.exponential(1.0 / lam)
    t_drop = rng.exponential(1.0 / model.hazard_dropout, n)
    observed = (t_event <= t_drop) & (entry + t_event <= tau)
    frac = observed.mean()
    se = math.sqrt(frac * (1 - frac) / n)
    assert abs(expected_events(model, tau) / model.n_total - frac) < 4 * se


def test_arm_split_favours_control(model):
    ctrl, exp = expected_events_by_arm(model, 40.0)
    assert ctrl > exp > 0


def test_predicted_months_and_follow_up(model, table, config):
    rows = predicted_schedule(model, table, 500, 72.0, date(2020, 4, 23))
    assert [r.target_events for r in rows] == [129, 257, 385, 500]
    for r, month, fu in zip(rows, [19.7, 35.6, 54.8, 76.4], [7.7, 23.6, 42.8, 64.4]):
        assert r.predicted_month == pytest.approx(month, abs=0.3)
        assert r.minimal_followup_months == pytest.approx(fu, abs=0.3)
    assert abs((rows[0].predicted_date - date(2021, 12, 14)).days) <= 10


def test_updated_analysis_capped_by_minimal_follow_up(model, table):
    rows = predicted_schedule(model, table, 700, 24.0)
    assert rows[-1].predicted_month == pytest.approx(model.accrual_end + 24.0)


def test_zero_dropout_is_earlier(model, config):
    from dataclasses import replace

    no_drop = replace(model, annual_dropout_rate=0.0)
    assert ccod_for_events(no_drop, 257) < ccod_for_events(model, 257)


def test_ccod_inverts_expected_events(model):
    for target in (1, 129, 600, 900):
        assert expected_events(model, ccod_for_events(model, target)) == pytest.approx(target, abs=1e-3)
    assert ccod_for_events(model, 0) == 0.0


def test_unreachable_target(model):
    with pytest.raises(ValueError, match="unreachable"):
        ccod_for_events(model, model.asymptotic_events() + 1)


def test_follow_up_before_accrual_end_warns(model):
    with pytest.warns(UserWarning):
        assert minimal_follow_up(model, 6.0) == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert minimal_follow_up(model, 20.0) == pytest.approx(8.0)


def test_month_to_date_uses_mean_month():
    assert month_to_date(date(2020, 1, 1), 12.0) == date(2020, 12, 31)


def test_offsets_only_without_first_patient_in(model, table):
    assert all(r.predicted_date is None for r in predicted_schedule(model, table))


def test_entry_times_are_uniform_over_accrual():
    m = TrialModel((50.0, 150.0), (4.0, 4.0), 10.0, 12.0)
    u = np.linspace(0, 1, 9)
    entry = sample_entry_times(m, u)
    assert entry[0] == 0 and entry[-1] == pytest.approx(8.0)
    assert sample_entry_times(m, [0.25])[0] == pytest.approx(4.0)


def test_model_validation():
    with pytest.raises(ValueError):
        TrialModel((10.0,), (0.0,), 10, 12)
    with pytest.raises(ValueError):
        TrialModel((10.0,), (5.0,), 10, 12, annual_dropout_rate=1.0)


def test_expected_events_shape(model):
    tau = np.linspace(0.0, 200.0, 801)
    ev = np.array([expected_events(model, t) for t in tau])
    assert np.all(np.diff(ev) >= 0)
    after = ev[tau >= model.accrual_end]
    assert np.all(np.diff(after, 2) <= 1e-9)
    assert expected_events(model, 5000.0) == pytest.approx(model.asymptotic_events(), rel=1e-9)
