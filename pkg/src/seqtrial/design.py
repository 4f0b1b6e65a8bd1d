"""Group-sequential design for a log-rank test.

Event targets, Lan-DeMets O'Brien-Fleming type efficacy boundaries on the z
and hazard-ratio scales, minimal detectable differences and power with or
without adherence to futility thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .numerics import (
    ContinuationRegion,
    events_to_information,
    expanding_root,
    norm_quantile,
    norm_sf,
    stage_probabilities,
)

# Smallest stage alpha the recursion can resolve reliably.
MIN_STAGE_ALPHA = 1e-15


class SpendingFamily(str, Enum):
    LAN_DEMETS_OBF = "LanDeMetsOBF"


@dataclass(frozen=True)
class AnalysisPlan:
    label: str
    information_fraction: float
    efficacy: bool = False
    futility_hr_threshold: float | None = None

    def __post_init__(self):
        if not 0.0 < self.information_fraction <= 1.0:
            raise ValueError(f"{self.label}: information fraction must lie in (0, 1]")
        if self.futility_hr_threshold is not None and self.futility_hr_threshold <= 0:
            raise ValueError(f"{self.label}: futility threshold must be a positive hazard ratio")

    @property
    def futility(self) -> bool:
        return self.futility_hr_threshold is not None


@dataclass(frozen=True)
class DesignSpec:
    alpha_one_sided: float
    power_target: float
    hr_alternative: float
    analyses: tuple[AnalysisPlan, ...]
    allocation_ratio: float = 1.0
    spending_family: SpendingFamily = SpendingFamily.LAN_DEMETS_OBF
    binding_futility: bool = False

    def __post_init__(self):
        object.__setattr__(self, "analyses", tuple(self.analyses))
        object.__setattr__(self, "spending_family", SpendingFamily(self.spending_family))
        if not 0.0 < self.alpha_one_sided < 0.5:
            raise ValueError("alpha_one_sided must lie in (0, 0.5)")
        if not 0.0 < self.power_target < 1.0:
            raise ValueError("power_target must lie in (0, 1)")
        if self.power_target <= self.alpha_one_sided:
            raise ValueError("power_target must exceed alpha_one_sided")
        if not 0.0 < self.hr_alternative < 1.0:
            raise ValueError("hr_alternative must lie in (0, 1) for a superiority design")
        if self.allocation_ratio <= 0:
            raise ValueError("allocation_ratio must be positive")
        fractions = [a.information_fraction for a in self.analyses]
        if not fractions:
            raise ValueError("at least one analysis is required")
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValueError("information fractions must be strictly increasing")
        if fractions[-1] != 1.0:
            raise ValueError("the last analysis must be at information fraction 1")
        if not any(a.efficacy for a in self.analyses):
            raise ValueError("at least one analysis must have the efficacy role")
        labels = [a.label for a in self.analyses]
        if len(set(labels)) != len(labels):
            raise ValueError("analysis labels must be unique")
        for a in self.analyses:
            if a.futility and a.futility_hr_threshold < self.hr_alternative:
                raise ValueError(
                    f"{a.label}: futility threshold {a.futility_hr_threshold} is tighter "
                    f"than the alternative hazard ratio {self.hr_alternative}"
                )

    @property
    def primary(self) -> AnalysisPlan:
        return self.analyses[-1]

    def plan(self, label: str) -> AnalysisPlan:
        for a in self.analyses:
            if a.label == label:
                return a
        raise KeyError(f"unknown analysis label {label!r}")

    def without_interims(self) -> "DesignSpec":
        primary = AnalysisPlan(self.primary.label, 1.0, efficacy=True)
        return DesignSpec(
            self.alpha_one_sided, self.power_target, self.hr_alternative, (primary,),
            self.allocation_ratio, self.spending_family, self.binding_futility,
        )


@dataclass(frozen=True)
class BoundaryRow:
    label: str
    information_fraction: float
    target_events: int
    efficacy: bool
    cumulative_alpha_spent: float | None = None
    nominal_level_one_sided: float | None = None
    efficacy_z_bound: float | None = None
    efficacy_hr_bound: float | None = None
    futility_hr_bound: float | None = None
    futility_z_bound: float | None = None

    @property
    def nominal_level_two_sided(self) -> float | None:
        if self.nominal_level_one_sided is None:
            return None
        return 2.0 * self.nominal_level_one_sided


@dataclass(frozen=True)
class BoundaryTable:
    rows: tuple[BoundaryRow, ...]
    max_events: int
    alpha_one_sided: float
    allocation_ratio: float = 1.0

    def row(self, label: str) -> BoundaryRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(f"unknown analysis label {label!r}")

    @property
    def efficacy_rows(self) -> list[BoundaryRow]:
        return [r for r in self.rows if r.efficacy]

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rows]


def spend(t: float, alpha: float) -> float:
    """Lan-DeMets O'Brien-Fleming type cumulative one-sided alpha at fraction ``t``."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"information fraction must lie in (0, 1], got {t!r}")
    if t == 1.0:
        return alpha
    return float(2.0 * norm_sf(norm_quantile(1.0 - alpha / 2.0) / math.sqrt(t)))


def _schoenfeld_scale(events: float, allocation_ratio: float) -> float:
    return math.sqrt(events * allocation_ratio) / (1.0 + allocation_ratio)


def hr_to_z(hr: float, events: float, allocation_ratio: float = 1.0) -> float:
    """z-statistic equivalent of an observed hazard ratio (positive favours experimental)."""
    if hr <= 0:
        raise ValueError("hazard ratio must be positive")
    if events < 1 or allocation_ratio <= 0:
        raise ValueError("events must be >= 1 and allocation_ratio positive")
    return -math.log(hr) * _schoenfeld_scale(events, allocation_ratio)


def z_to_hr(z: float, events: float, allocation_ratio: float = 1.0) -> float:
    if events < 1 or allocation_ratio <= 0:
        raise ValueError("events must be >= 1 and allocation_ratio positive")
    return math.exp(-z / _schoenfeld_scale(events, allocation_ratio))


def fixed_design_events(
    alpha_one_sided: float, power_target: float, hr_alternative: float, allocation_ratio: float = 1.0
) -> int:
    """Schoenfeld event count for a single-look design, rounded up."""
    if hr_alternative <= 0 or hr_alternative == 1.0:
        raise ValueError("hr_alternative must be positive and different from 1")
    if not 0.0 < alpha_one_sided < 0.5 or not alpha_one_sided < power_target < 1.0:
        raise ValueError("need 0 < alpha < 0.5 and alpha < power < 1")
    r = allocation_ratio
    zsum = norm_quantile(1.0 - alpha_one_sided) + norm_quantile(power_target)
    d = zsum**2 * (1.0 + r) ** 2 / r / math.log(hr_alternative) ** 2
    return math.ceil(d - 1e-9)


def minimal_detectable_difference(
    events: float, alpha_level_one_sided: float, allocation_ratio: float = 1.0
) -> float:
    """Critical value of the one-sided test expressed as a hazard ratio."""
    if not 0.0 < alpha_level_one_sided < 0.5:
        raise ValueError("level must lie in (0, 0.5)")
    return z_to_hr(norm_quantile(1.0 - alpha_level_one_sided), events, allocation_ratio)


def target_events(information_fraction: float, max_events: int) -> int:
    """Event target of a look: ``information_fraction * max_events`` rounded up."""
    # tolerance absorbs float noise such as (2/3) * 384 = 256.00000000000003
    return int(math.ceil(information_fraction * max_events - 1e-9))


def solve_upper_bound(
    prior_bounds: Sequence[float],
    information: Sequence[float],
    cumulative_alpha: float,
    prior_lower: Sequence[float] | None = None,
    theta: float = 0.0,
) -> float:
    """z-bound for the last stage so that cumulative upper exit equals ``cumulative_alpha``.

    ``information`` covers all stages including the new one; ``prior_bounds``
    are frozen bounds for the earlier stages.
    """
    k = len(prior_bounds)
    if len(information) != k + 1:
        raise ValueError("information must have one more entry than prior_bounds")
    lower = list(prior_lower) if prior_lower is not None else [-math.inf] * k
    if k == 0:
        # one-dimensional tail: closed form keeps the single-look case exact
        return norm_quantile(1.0 - cumulative_alpha) + theta * math.sqrt(information[0])

    def excess(b: float) -> float:
        region = ContinuationRegion(lower + [-math.inf], list(prior_bounds) + [b], information)
        return stage_probabilities(region, theta).total_upper - cumulative_alpha

    already = excess(math.inf)
    if already >= 0:
        raise ValueError("alpha already exhausted by earlier stages")
    return expanding_root(excess, -2.0, 8.0)


def compute_boundaries(spec: DesignSpec, max_events: int) -> BoundaryTable:
    """Stagewise solve of efficacy bounds from the spending function.

    Spending at each efficacy look uses ``target_events / max_events`` so
    that a look conducted exactly at its target reproduces this table.
    Futility thresholds enter the null computation only for binding designs.
    """
    if max_events < 1:
        raise ValueError("max_events must be positive")
    r = spec.allocation_ratio
    rows: list[BoundaryRow] = []
    prior_bounds: list[float] = []
    prior_lower: list[float] = []
    prior_info: list[float] = []
    for plan in spec.analyses:
        d = target_events(plan.information_fraction, max_events)
        if d < 1:
            raise ValueError(f"{plan.label}: fewer than one event targeted")
        fut_z = hr_to_z(plan.futility_hr_threshold, d, r) if plan.futility else None
        if not plan.efficacy:
            if spec.binding_futility and fut_z is not None:
                # a futility-only look becomes a stage with no upper bound
                prior_bounds.append(math.inf)
                prior_lower.append(fut_z)
                prior_info.append(float(events_to_information(d, r)))
            rows.append(BoundaryRow(plan.label, plan.information_fraction, d, False,
                                    futility_hr_bound=plan.futility_hr_threshold, futility_z_bound=fut_z))
            continue
        cum = spend(d / max_events, spec.alpha_one_sided)
        already = 0.0
        if prior_bounds:
            region = ContinuationRegion(prior_lower + [-math.inf], prior_bounds + [math.inf],
                                        prior_info + [float(events_to_information(d, r))])
            already = stage_probabilities(region).total_upper
        if cum - already < MIN_STAGE_ALPHA:
            raise ValueError(f"{plan.label}: spending {cum - already:.3g} is below achievable resolution")
        z = solve_upper_bound(prior_bounds, prior_info + [float(events_to_information(d, r))], cum,
                              prior_lower=prior_lower)
        rows.append(BoundaryRow(
            plan.label, plan.information_fraction, d, True,
            cumulative_alpha_spent=cum,
            nominal_level_one_sided=float(norm_sf(z)),
            efficacy_z_bound=z,
            efficacy_hr_bound=z_to_hr(z, d, r),
            futility_hr_bound=plan.futility_hr_threshold,
            futility_z_bound=fut_z,
        ))
        prior_bounds.append(z)
        prior_lower.append(fut_z if (spec.binding_futility and fut_z is not None) else -math.inf)
        prior_info.append(float(events_to_information(d, r)))
    return BoundaryTable(tuple(rows), max_events, spec.alpha_one_sided, r)


def _power_region(spec: DesignSpec, table: BoundaryTable, honor_futility: bool) -> ContinuationRegion | None:
    lower, upper, info = [], [], []
    for row in table.rows:
        use_fut = honor_futility and row.futility_z_bound is not None
        if not row.efficacy and not use_fut:
            continue
        lower.append(row.futility_z_bound if use_fut else -math.inf)
        upper.append(row.efficacy_z_bound if row.efficacy else math.inf)
        info.append(float(events_to_information(row.target_events, table.allocation_ratio)))
    return ContinuationRegion(lower, upper, info)


def power(
    spec: DesignSpec,
    max_events: int,
    hr_true: float,
    honor_futility: bool = False,
    table: BoundaryTable | None = None,
) -> float:
    """Probability of rejecting the null at any efficacy analysis.

    With ``honor_futility`` the futility thresholds act as binding lower
    bounds; otherwise they are ignored.
    """
    if hr_true <= 0:
        raise ValueError("hr_true must be positive")
    if table is None:
        table = compute_boundaries(spec, max_events)
    region = _power_region(spec, table, honor_futility)
    return stage_probabilities(region, -math.log(hr_true)).total_upper


def required_max_events(spec: DesignSpec, honor_futility: bool = False) -> int:
    """Smallest maximum event count whose power reaches ``spec.power_target``.

    Futility losses are not compensated unless ``honor_futility`` is set.
    """
    def shortfall(d: int) -> float:
        return power(spec, d, spec.hr_alternative, honor_futility) - spec.power_target

    lo = fixed_design_events(spec.alpha_one_sided, spec.power_target, spec.hr_alternative,
                             spec.allocation_ratio)
    if len(spec.analyses) == 1 and not honor_futility:
        return lo
    # bracket: lo - 1 is underpowered for any sequential design
    lo = max(1, lo - 1)
    while shortfall(lo) >= 0 and lo > 1:
        lo = max(1, lo // 2)
    hi = lo + 1
    while shortfall(hi) < 0:
        hi = lo + 2 * (hi - lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if shortfall(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class Design:
    """A design specification bundled with its derived boundary table."""

    spec: DesignSpec
    table: BoundaryTable
    fixed_events: int = field(default=0)

    @classmethod
    def from_spec(cls, spec: DesignSpec, max_events: int | None = None, compensate_futility: bool = False):
        if max_events is None:
            max_events = required_max_events(spec, honor_futility=compensate_futility)
        fixed = fixed_design_events(spec.alpha_one_sided, spec.power_target, spec.hr_alternative,
                                    spec.allocation_ratio)
        return cls(spec, compute_boundaries(spec, max_events), fixed)

    def power(self, hr_true: float, honor_futility: bool = False) -> float:
        return power(self.spec, self.table.max_events, hr_true, honor_futility, table=self.table)
