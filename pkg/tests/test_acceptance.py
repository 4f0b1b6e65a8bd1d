"""Acceptance criteria, one test per criterion, at the stated tolerances."""

import math
import re
import time

import numpy as np
import pytest
from scipy import stats

from seqtrial.design import (
    Design,
    fixed_design_events,
    hr_to_z,
    minimal_detectable_difference,
    power,
)
from seqtrial.inference import (
    StoppedTrialDatum,
    adjusted_ci,
    median_unbiased_hr,
    naive_hr_ci,
    single_look,
)
from seqtrial.monitoring import Decision, ReportingLabel, designate, recalc_interim_level
from seqtrial.report import render_report
from seqtrial.simulation import SimConfig, operating_characteristics, simulate_trials
from seqtrial.timing import predicted_schedule

from designation_cases import TABLE_COLUMNS, column_of, enumerate_paths, run_path

N_SIM = 10**5


def _timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


@pytest.fixture(scope="module")
def futility_power_run(config, table):
    cfg = SimConfig(config.model, config.spec, table, hr_true=0.75, n_trials=N_SIM, seed=2024, honor_futility=True)
    return _timed(lambda: operating_characteristics(cfg))


@pytest.fixture(scope="module")
def perturbed_null_run(config, table):
    cfg = SimConfig(config.model, config.spec, table, hr_true=1.0, n_trials=N_SIM, seed=2025,
                    honor_futility=False, perturbation=0.15)
    return _timed(lambda: operating_characteristics(cfg))


@pytest.fixture(scope="module")
def null_run(config, table):
    cfg = SimConfig(config.model, config.spec, table, hr_true=1.0, n_trials=N_SIM, seed=2026, honor_futility=True)
    return simulate_trials(cfg)


def test_criterion_1_fixed_design_calibration():
    (events, mdd), secs = _timed(lambda: (fixed_design_events(0.025, 0.80, 0.75, 1),
                                          minimal_detectable_difference(380, 0.025)))
    assert events == 380
    assert mdd == pytest.approx(0.8177, abs=5e-4)
    assert secs < 1.0


def test_criterion_2_boundary_table_reproduction(config):
    design, secs = _timed(lambda: Design.from_spec(config.spec))
    t = design.table
    assert t.max_events == 385
    assert [r.target_events for r in t.rows] == [129, 257, 385]
    ia2, prim = t.row("IA2"), t.row("Primary")
    assert ia2.nominal_level_two_sided == pytest.approx(0.012, abs=5e-4)
    assert prim.nominal_level_two_sided == pytest.approx(0.046, abs=5e-4)
    assert ia2.efficacy_hr_bound == pytest.approx(0.731, abs=1e-3)
    assert prim.efficacy_hr_bound == pytest.approx(0.816, abs=1e-3)
    assert secs < 5.0


def test_criterion_3_timing_reproduction(config, table):
    rows, secs = _timed(lambda: predicted_schedule(config.model, table, config.updated.target_events,
                                                   config.updated.min_followup_months))
    assert [r.predicted_month for r in rows] == pytest.approx([19.7, 35.6, 54.8, 76.4], abs=0.3)
    assert [r.minimal_followup_months for r in rows] == pytest.approx([7.7, 23.6, 42.8, 64.4], abs=0.3)
    assert secs < 1.0


def test_criterion_4_recalculation_after_underrunning(table):
    b, secs = _timed(lambda: recalc_interim_level(table, "IA2", 255))
    assert b.alpha_2sided == pytest.approx(0.0117, abs=5e-4)
    assert b.hr == pytest.approx(0.729, abs=1e-3)
    assert secs < 1.0


def test_criterion_5_futility_power_loss(config, table, futility_power_run):
    analytic_fut = power(config.spec, 385, 0.75, honor_futility=True, table=table)
    analytic = power(config.spec, 385, 0.75, table=table)
    oc, secs = futility_power_run
    assert analytic_fut == pytest.approx(0.78, abs=5e-3)
    assert analytic == pytest.approx(0.80, abs=5e-3)
    assert abs(oc.rejection_probability - analytic_fut) <= 3 * oc.rejection_se
    assert secs < 120.0


def test_criterion_6_adjusted_inference(table):
    def run():
        bound = recalc_interim_level(table, "IA2", 255).z
        datum = StoppedTrialDatum((255, 385), (bound, table.row("Primary").efficacy_z_bound), 0,
                                  hr_to_z(0.689, 255))
        return median_unbiased_hr(datum), adjusted_ci(datum)

    (mue, (lo, hi)), secs = _timed(run)
    assert mue == pytest.approx(0.691, abs=5e-3)
    assert lo == pytest.approx(0.540, abs=5e-3)
    assert hi == pytest.approx(0.883, abs=5e-3)
    for hr, d in ((0.689, 255), (0.9, 60), (1.3, 400)):
        one = single_look(hr_to_z(hr, d), d)
        _, nlo, nhi = naive_hr_ci(hr, d)
        assert median_unbiased_hr(one) == pytest.approx(hr, rel=1e-9)
        assert adjusted_ci(one) == pytest.approx((nlo, nhi), rel=1e-9)
    assert secs < 5.0


def test_criterion_7_type_one_error_under_perturbation(perturbed_null_run):
    oc, secs = perturbed_null_run
    assert oc.n_trials == N_SIM
    assert oc.rejection_probability <= 0.025 + 3 * math.sqrt(0.025 * 0.975 / N_SIM)
    assert secs < 300.0


def test_criterion_8_designation_state_machine(config):
    design_labels = [a.label for a in config.spec.analyses]
    seen = set()
    for key, hrs in enumerate_paths():
        course = run_path(config, hrs)
        col = column_of(key)
        seen.add(col)
        labels = designate(course).labels
        for analysis, expected in TABLE_COLUMNS[col].items():
            if expected is None:
                assert labels[analysis] in (None, ReportingLabel.NOT_CONDUCTED)
            else:
                assert labels[analysis] is expected
        assert sum(v is ReportingLabel.CONFIRMATORY for v in labels.values()) <= 1
        text = render_report(course)
        for label in design_labels:
            assert not re.search(rf"\b{re.escape(label)}\b", text)
        assert "interim analysis" not in text.lower() and "final analysis" not in text.lower()
    assert seen == set(TABLE_COLUMNS)


def test_criterion_9_distributional_stand_ins(null_run):
    z1 = np.array([o.z[0] for o in null_run])
    assert stats.kstest(z1, "norm").pvalue > 1e-3
    assert abs(z1.mean()) < 3 / math.sqrt(N_SIM)
    futile = np.mean([o.labels == ("IA1",) and o.decision is Decision.STOP_FUTILITY for o in null_run])
    assert abs(futile - 0.5) <= 3 * math.sqrt(0.25 / N_SIM)
