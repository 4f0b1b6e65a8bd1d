"""Estimation after a group-sequential trial has stopped.

Naive Wald interval on the log hazard-ratio scale, and stagewise-ordering
p-value function, median-unbiased estimate and adjusted confidence interval.
Only efficacy looks enter the ordering; futility looks are non-binding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import (
    ContinuationRegion,
    events_to_information,
    expanding_root,
    norm_quantile,
    stage_probabilities,
)

THETA_BRACKET = (-2.0, 2.0)


def naive_hr_ci(observed_hr: float, events: int, level: float = 0.05, allocation_ratio: float = 1.0):
    """Unadjusted ``(hr, lower, upper)`` with coverage ``1 - level``."""
    if observed_hr <= 0 or events < 1 or not 0.0 < level < 1.0:
        raise ValueError("need observed_hr > 0, events >= 1 and 0 < level < 1")
    r = allocation_ratio
    se = (1.0 + r) / math.sqrt(events * r)
    half = norm_quantile(1.0 - level / 2.0) * se
    log_hr = math.log(observed_hr)
    return observed_hr, math.exp(log_hr - half), math.exp(log_hr + half)


@dataclass(frozen=True)
class StoppedTrialDatum:
    """Efficacy-look history of a stopped trial.

    ``events`` and ``z_bounds`` list every efficacy look of the design in
    order, with bounds frozen at the values actually used; ``stage`` is the
    0-based index of the look at which the trial stopped.
    """

    events: tuple[float, ...]
    z_bounds: tuple[float, ...]
    stage: int
    z_observed: float
    allocation_ratio: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(float(e) for e in self.events))
        object.__setattr__(self, "z_bounds", tuple(float(b) for b in self.z_bounds))
        if len(self.events) != len(self.z_bounds):
            raise ValueError("events and z_bounds must have equal length")
        if not 0 <= self.stage < len(self.events):
            raise ValueError("stage outside the efficacy look history")
        if any(b <= a for a, b in zip(self.events, self.events[1:])):
            raise ValueError("event counts must be strictly increasing")
        if self.stage < len(self.events) - 1 and self.z_observed < self.z_bounds[self.stage]:
            raise ValueError("an early stop requires the observed z to reach the efficacy bound")

    @property
    def information(self) -> list[float]:
        return list(events_to_information(self.events[: self.stage + 1], self.allocation_ratio))

    @property
    def observed_events(self) -> float:
        return self.events[self.stage]

    @property
    def naive_theta(self) -> float:
        return self.z_observed / math.sqrt(self.information[-1])


def stagewise_p(datum: StoppedTrialDatum, theta: float) -> float:
    """P_theta of an outcome at least as extreme in the stagewise ordering.

    Earlier efficacy stops are more extreme than any stop at ``stage``; at
    ``stage`` itself larger z is more extreme. Increasing in ``theta``.
    """
    k = datum.stage
    upper = list(datum.z_bounds[:k]) + [datum.z_observed]
    region = ContinuationRegion.upper_only(upper, datum.information)
    return stage_probabilities(region, theta).total_upper


def _solve_theta(datum: StoppedTrialDatum, target: float) -> float:
    centre = datum.naive_theta
    lo, hi = THETA_BRACKET
    return expanding_root(lambda th: stagewise_p(datum, th) - target, centre + lo, centre + hi)


def median_unbiased_hr(datum: StoppedTrialDatum) -> float:
    return math.exp(-_solve_theta(datum, 0.5))


def adjusted_ci(datum: StoppedTrialDatum, level: float = 0.05) -> tuple[float, float]:
    """Stagewise-ordering confidence interval for the hazard ratio."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    theta_low = _solve_theta(datum, level / 2.0)
    theta_high = _solve_theta(datum, 1.0 - level / 2.0)
    return math.exp(-theta_high), math.exp(-theta_low)


def datum_from_course(course, label: str | None = None) -> StoppedTrialDatum:
    """Build the estimation input from a course stopped (or concluded) by an efficacy test.

    Looks that were not conducted keep their planned event targets and bounds.
    """
    from .monitoring import Decision

    tested = [a for a in course.analyses if a.decision is not None and a.recalculated is not None]
    if not tested:
        raise ValueError("no efficacy test has been conducted")
    stop = tested[-1] if label is None else course.analysis(label)
    events: list[float] = []
    bounds: list[float] = []
    conducted = {a.label: a for a in tested}
    for row in course.table.efficacy_rows:
        if row.label in conducted:
            a = conducted[row.label]
            events.append(a.observed_events)
            bounds.append(a.recalculated.z)
        else:
            events.append(row.target_events)
            bounds.append(row.efficacy_z_bound)
    stage = [r.label for r in course.table.efficacy_rows].index(stop.label)
    if stop.decision not in (Decision.STOP_EFFICACY, Decision.REACH_PRIMARY):
        raise ValueError(f"{stop.label} did not conclude the hypothesis test")
    return StoppedTrialDatum(tuple(events), tuple(bounds), stage, stop.z, course.spec.allocation_ratio)


def single_look(z_observed: float, events: float, allocation_ratio: float = 1.0) -> StoppedTrialDatum:
    return StoppedTrialDatum((events,), (z_observed,), 0, z_observed, allocation_ratio)


def adjusted_summary(datum: StoppedTrialDatum, level: float = 0.05) -> dict[str, float]:
    lo, hi = adjusted_ci(datum, level)
    return {
        "p_value": stagewise_p(datum, 0.0),
        "median_unbiased_hr": median_unbiased_hr(datum),
        "ci_lower": lo,
        "ci_upper": hi,
    }

