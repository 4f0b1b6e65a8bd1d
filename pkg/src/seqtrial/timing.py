"""Calendar timing of event-driven analyses.

Expected event counts under piecewise-uniform accrual, exponential survival
and exponential dropout, and the clinical cutoff times at which event
targets are expected to be reached.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from .design import BoundaryTable
from .numerics import find_root

DAYS_PER_MONTH = 365.25 / 12
CCOD_RESOLUTION = 0.01


@dataclass(frozen=True)
class TrialModel:
    """Accrual, survival and dropout assumptions, all in months.

    ``accrual_rates[j]`` patients per month are recruited uniformly over the
    ``j``-th interval of length ``accrual_durations[j]``.
    """

    accrual_rates: tuple[float, ...]
    accrual_durations: tuple[float, ...]
    median_survival_control: float
    median_survival_experimental: float
    annual_dropout_rate: float = 0.0
    allocation_ratio: float = 1.0

    def __post_init__(self):
        rates = tuple(float(v) for v in self.accrual_rates)
        durations = tuple(float(v) for v in self.accrual_durations)
        object.__setattr__(self, "accrual_rates", rates)
        object.__setattr__(self, "accrual_durations", durations)
        if len(rates) != len(durations) or not rates:
            raise ValueError("accrual rates and durations must be non-empty and of equal length")
        if any(r < 0 for r in rates) or any(d <= 0 for d in durations) or sum(rates) == 0:
            raise ValueError("accrual rates must be nonnegative and durations positive")
        if self.median_survival_control <= 0 or self.median_survival_experimental <= 0:
            raise ValueError("median survival times must be positive")
        if not 0.0 <= self.annual_dropout_rate < 1.0:
            raise ValueError("annual dropout rate must lie in [0, 1)")
        if self.allocation_ratio <= 0:
            raise ValueError("allocation_ratio must be positive")

    @classmethod
    def uniform(cls, rate_per_month: float, n_total: int, **kwargs) -> "TrialModel":
        return cls((rate_per_month,), (n_total / rate_per_month,), **kwargs)

    @property
    def n_total(self) -> float:
        return float(sum(r * d for r, d in zip(self.accrual_rates, self.accrual_durations)))

    @property
    def accrual_end(self) -> float:
        return float(sum(self.accrual_durations))

    @property
    def hazard_control(self) -> float:
        return math.log(2.0) / self.median_survival_control

    @property
    def hazard_experimental(self) -> float:
        return math.log(2.0) / self.median_survival_experimental

    @property
    def hazard_dropout(self) -> float:
        return -math.log1p(-self.annual_dropout_rate) / 12.0

    def arms(self):
        """``(fraction of patients, event hazard)`` for control then experimental."""
        p_exp = self.allocation_ratio / (1.0 + self.allocation_ratio)
        return ((1.0 - p_exp, self.hazard_control), (p_exp, self.hazard_experimental))

    def with_hazard_ratio(self, hr: float) -> "TrialModel":
        return replace(self, median_survival_experimental=self.median_survival_control / hr)

    def asymptotic_events(self) -> float:
        eta = self.hazard_dropout
        return self.n_total * sum(p * lam / (lam + eta) for p, lam in self.arms())


def _interval_starts(model: TrialModel) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(model.accrual_durations)[:-1]])


def expected_events_by_arm(model: TrialModel, tau: float) -> tuple[float, float]:
    """Expected (control, experimental) events observed by calendar month ``tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    eta = model.hazard_dropout
    out = []
    for p, lam in model.arms():
        h = lam + eta
        total = 0.0
        for s, dur, rate in zip(_interval_starts(model), model.accrual_durations, model.accrual_rates):
            if tau <= s:
                break
            m = min(s + dur, tau)
            # integral over entry time u in [s, m] of 1 - exp(-h (tau - u))
            exposure = (m - s) - (math.exp(-h * (tau - m)) - math.exp(-h * (tau - s))) / h
            total += rate * exposure
        out.append(p * lam / h * total)
    return out[0], out[1]


def expected_events(model: TrialModel, tau: float) -> float:
    return float(sum(expected_events_by_arm(model, tau)))


def ccod_for_events(model: TrialModel, target: float) -> float:
    """Calendar month at which ``target`` events are expected."""
    if target <= 0:
        return 0.0
    if target >= model.asymptotic_events():
        raise ValueError(
            f"unreachable target: {target} events exceeds the asymptote {model.asymptotic_events():.1f}"
        )
    hi = max(model.accrual_end, 1.0)
    while expected_events(model, hi) < target:
        hi *= 2.0
    return find_root(lambda t: expected_events(model, t) - target, 0.0, hi, tol=CCOD_RESOLUTION / 100)


def minimal_follow_up(model: TrialModel, ccod: float) -> float:
    """Follow-up of the last recruited patient at ``ccod``."""
    fu = ccod - model.accrual_end
    if fu < 0:
        warnings.warn(
            f"cutoff at month {ccod:.2f} precedes end of accrual at {model.accrual_end:.2f}",
            stacklevel=2,
        )
        return 0.0
    return fu


def month_to_date(first_patient_in: date, months: float) -> date:
    return first_patient_in + timedelta(days=round(months * DAYS_PER_MONTH))


@dataclass(frozen=True)
class ScheduleRow:
    label: str
    target_events: int
    predicted_month: float
    minimal_followup_months: float
    predicted_date: date | None = None


def predicted_schedule(
    model: TrialModel,
    table: BoundaryTable,
    extra_events: int | None = None,
    min_followup_months: float | None = None,
    first_patient_in: date | None = None,
    updated_label: str = "Updated",
) -> list[ScheduleRow]:
    """Predicted cutoff month of each planned analysis.

    An updated analysis is added when ``extra_events`` is given; it occurs at
    the earlier of the month its events are expected and the month every
    patient has ``min_followup_months`` of follow-up.
    """
    targets: list[tuple[str, int]] = [(r.label, r.target_events) for r in table.rows]
    months = [ccod_for_events(model, d) for _, d in targets]
    if extra_events is not None:
        when = math.inf
        try:
            when = ccod_for_events(model, extra_events)
        except ValueError:
            if min_followup_months is None:
                raise
        if min_followup_months is not None:
            when = min(when, model.accrual_end + min_followup_months)
        targets.append((updated_label, int(extra_events)))
        months.append(when)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for (label, d), m in zip(targets, months):
            rows.append(ScheduleRow(
                label, d, m, minimal_follow_up(model, m),
                month_to_date(first_patient_in, m) if first_patient_in else None,
            ))
    return rows


def sample_entry_times(model: TrialModel, u: Sequence[float] | np.ndarray) -> np.ndarray:
    """Map uniform draws to entry months through the accrual CDF."""
    u = np.asarray(u, dtype=float)
    counts = np.asarray(model.accrual_rates) * np.asarray(model.accrual_durations)
    cum = np.concatenate([[0.0], np.cumsum(counts)]) / counts.sum()
    starts = np.concatenate([_interval_starts(model), [model.accrual_end]])
    return np.interp(u, cum, starts)
