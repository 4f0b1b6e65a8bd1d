"""Live-trial bookkeeping for a group-sequential design.

Recalculation of nominal levels when analyses over- or underrun their event
targets, evaluation of the pre-specified decision rules, and the mapping of
design-stage analysis names to reporting-stage designations.

A :class:`TrialCourse` is an immutable value; :func:`record_analysis`
returns a new course with one more conducted analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .design import (
    AnalysisPlan,
    BoundaryRow,
    BoundaryTable,
    DesignSpec,
    hr_to_z,
    solve_upper_bound,
    spend,
    z_to_hr,
)
from .numerics import events_to_information, norm_quantile, norm_sf


class MonitoringError(Exception):
    """A request that would violate the pre-specified testing procedure."""


class DelayedPrimaryError(MonitoringError):
    pass


class Decision(str, Enum):
    CONTINUE = "continue"
    STOP_FUTILITY = "stop_futility"
    STOP_EFFICACY = "stop_efficacy"
    REACH_PRIMARY = "reach_primary"


class HypothesisState(str, Enum):
    OPEN = "open"
    REJECTED = "rejected"
    RETAINED_AT_PRIMARY = "retained_at_primary"
    ABANDONED_FUTILITY = "abandoned_futility"


class ReportingLabel(str, Enum):
    FUTILITY = "futility_analysis"
    CONFIRMATORY = "confirmatory_analysis"
    UPDATED = "updated_analysis"
    NOT_CONDUCTED = "not_conducted"


@dataclass(frozen=True)
class RecalculatedBounds:
    alpha_1sided: float
    z: float
    hr: float

    @property
    def alpha_2sided(self) -> float:
        return 2.0 * self.alpha_1sided


def _frozen_history(conducted: Iterable[tuple[int, float]]) -> tuple[list[float], list[float]]:
    events, bounds = [], []
    for d, level in conducted:
        events.append(float(d))
        bounds.append(norm_quantile(1.0 - level))
    return events, bounds


def recalc_interim_level(
    table: BoundaryTable,
    plan_label: str,
    observed_events: int,
    conducted: Sequence[tuple[int, float]] = (),
    hypothesis_state: HypothesisState = HypothesisState.OPEN,
) -> RecalculatedBounds:
    """Nominal level and bounds of an efficacy interim at its observed event count.

    Spending is evaluated at ``observed_events / max_events``; earlier efficacy
    looks in ``conducted`` (``(events, nominal one-sided level)`` pairs) stay
    frozen at the levels actually used.
    """
    if HypothesisState(hypothesis_state) is not HypothesisState.OPEN:
        raise MonitoringError("the null hypothesis is no longer open for testing")
    row = table.row(plan_label)
    if not row.efficacy:
        raise MonitoringError(f"{plan_label} has no efficacy role; nothing to recalculate")
    if observed_events >= table.max_events:
        raise MonitoringError(
            f"{observed_events} events reach the maximum of {table.max_events}; use the primary-analysis recalculation"
        )
    events, bounds = _frozen_history(conducted)
    if events and observed_events <= events[-1]:
        raise MonitoringError("observed events must exceed those of earlier efficacy looks")
    cum = spend(observed_events / table.max_events, table.alpha_one_sided)
    info = list(events_to_information(events + [observed_events], table.allocation_ratio))
    z = solve_upper_bound(bounds, info, cum)
    return RecalculatedBounds(float(norm_sf(z)), z, z_to_hr(z, observed_events, table.allocation_ratio))


def recalc_primary_level(
    table: BoundaryTable,
    conducted: Sequence[tuple[int, float]],
    observed_final_events: int,
) -> RecalculatedBounds:
    """Final bound spending the alpha left over by the frozen earlier looks.

    Information fractions are taken relative to ``observed_final_events``.
    """
    events, bounds = _frozen_history(conducted)
    if events and observed_final_events <= events[-1]:
        raise MonitoringError("final event count must exceed that of the last interim")
    info = list(events_to_information(events + [observed_final_events], table.allocation_ratio))
    z = solve_upper_bound(bounds, info, table.alpha_one_sided)
    return RecalculatedBounds(float(norm_sf(z)), z, z_to_hr(z, observed_final_events, table.allocation_ratio))


@dataclass(frozen=True)
class Evaluation:
    decision: Decision
    rejected: bool | None = None
    futility_recommended: bool = False


def evaluate_decision(
    table: BoundaryTable,
    plan_label: str,
    observed_hr: float,
    observed_events: int,
    bounds: RecalculatedBounds | None = None,
) -> Evaluation:
    """Apply the efficacy bound and the (non-binding) futility threshold.

    ``bounds`` overrides the planned efficacy bound, normally with the
    recalculated one for the observed event count.
    """
    try:
        row = table.row(plan_label)
    except KeyError:
        raise MonitoringError(f"unknown analysis label {plan_label!r}") from None
    hr_bound = bounds.hr if bounds is not None else row.efficacy_hr_bound
    efficacy_met = row.efficacy and observed_hr <= hr_bound
    if row is table.rows[-1]:
        return Evaluation(Decision.REACH_PRIMARY, rejected=bool(efficacy_met))
    if efficacy_met:
        return Evaluation(Decision.STOP_EFFICACY, rejected=True)
    if row.futility_hr_bound is not None and observed_hr >= row.futility_hr_bound:
        return Evaluation(Decision.STOP_FUTILITY, futility_recommended=True)
    return Evaluation(Decision.CONTINUE)


@dataclass(frozen=True)
class ObservedAnalysis:
    label: str
    ccod: date
    ssd: date
    observed_events: int
    observed_hr: float
    recalculated: RecalculatedBounds | None = None
    decision: Decision | None = None
    allocation_ratio: float = 1.0

    def __post_init__(self):
        if self.ssd < self.ccod:
            raise ValueError("snapshot date cannot precede the clinical cutoff date")
        if self.observed_events <= 0:
            raise ValueError("observed events must be positive")
        if self.observed_hr <= 0:
            raise ValueError("observed hazard ratio must be positive")

    @property
    def z(self) -> float:
        return hr_to_z(self.observed_hr, self.observed_events, self.allocation_ratio)

    def to_dict(self) -> dict[str, Any]:
        rec = self.recalculated
        return {
            "label": self.label,
            "ccod": self.ccod.isoformat(),
            "ssd": self.ssd.isoformat(),
            "observed_events": self.observed_events,
            "observed_hr": self.observed_hr,
            "recalculated": None if rec is None else {"alpha_1sided": rec.alpha_1sided, "z": rec.z, "hr": rec.hr},
            "decision": None if self.decision is None else self.decision.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], allocation_ratio: float = 1.0) -> "ObservedAnalysis":
        rec = d.get("recalculated")
        return cls(
            label=d["label"],
            ccod=date.fromisoformat(d["ccod"]),
            ssd=date.fromisoformat(d["ssd"]),
            observed_events=int(d["observed_events"]),
            observed_hr=float(d["observed_hr"]),
            recalculated=None if rec is None else RecalculatedBounds(rec["alpha_1sided"], rec["z"], rec["hr"]),
            decision=None if d.get("decision") is None else Decision(d["decision"]),
            allocation_ratio=allocation_ratio,
        )


@dataclass(frozen=True)
class UpdatedAnalysisPlan:
    label: str = "Updated"
    target_events: int | None = None
    min_followup_months: float | None = None


@dataclass(frozen=True)
class TrialCourse:
    spec: DesignSpec
    table: BoundaryTable
    analyses: tuple[ObservedAnalysis, ...] = ()
    hypothesis_state: HypothesisState = HypothesisState.OPEN
    updated: UpdatedAnalysisPlan = field(default_factory=UpdatedAnalysisPlan)
    endpoint: str = "overall survival"
    first_patient_in: date | None = None
    decisive_override: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "analyses", tuple(self.analyses))
        object.__setattr__(self, "hypothesis_state", HypothesisState(self.hypothesis_state))
        stops = [a for a in self.analyses if a.decision is Decision.STOP_EFFICACY]
        if len(stops) > 1:
            raise ValueError("a null hypothesis can only be rejected once")

    @property
    def primary_label(self) -> str:
        return self.spec.primary.label

    @property
    def is_open(self) -> bool:
        return self.hypothesis_state is HypothesisState.OPEN

    def analysis(self, label: str) -> ObservedAnalysis:
        for a in self.analyses:
            if a.label == label:
                return a
        raise KeyError(label)

    def conducted_labels(self) -> list[str]:
        return [a.label for a in self.analyses]

    def efficacy_history(self) -> list[tuple[int, float]]:
        """``(events, nominal one-sided level)`` of conducted efficacy tests."""
        return [
            (a.observed_events, a.recalculated.alpha_1sided)
            for a in self.analyses
            if a.recalculated is not None and a.decision is not None
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "design": design_to_dict(self.spec, self.updated, self.endpoint, self.first_patient_in),
            "boundary_table": table_to_dict(self.table),
            "analyses": [a.to_dict() for a in self.analyses],
            "hypothesis_state": self.hypothesis_state.value,
            "designations": designate(self, partial=True).to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TrialCourse":
        spec, updated, endpoint, fpi = design_from_dict(d["design"])
        table = table_from_dict(d["boundary_table"])
        analyses = tuple(ObservedAnalysis.from_dict(a, spec.allocation_ratio) for a in d["analyses"])
        designations = d.get("designations") or {}
        return cls(spec, table, analyses, HypothesisState(d["hypothesis_state"]), updated, endpoint, fpi,
                   designations.get("decisive_override"))


def design_to_dict(spec: DesignSpec, updated: UpdatedAnalysisPlan, endpoint: str, fpi: date | None) -> dict:
    return {
        "alpha_one_sided": spec.alpha_one_sided,
        "power_target": spec.power_target,
        "hr_alternative": spec.hr_alternative,
        "allocation_ratio": spec.allocation_ratio,
        "spending_family": spec.spending_family.value,
        "binding_futility": spec.binding_futility,
        "analyses": [
            {
                "label": a.label,
                "information_fraction": a.information_fraction,
                "efficacy": a.efficacy,
                "futility_hr_threshold": a.futility_hr_threshold,
            }
            for a in spec.analyses
        ],
        "updated_analysis": {
            "label": updated.label,
            "target_events": updated.target_events,
            "min_followup_months": updated.min_followup_months,
        },
        "endpoint": endpoint,
        "first_patient_in": fpi.isoformat() if fpi else None,
    }


def design_from_dict(d: Mapping[str, Any]):
    spec = DesignSpec(
        alpha_one_sided=d["alpha_one_sided"],
        power_target=d["power_target"],
        hr_alternative=d["hr_alternative"],
        allocation_ratio=d.get("allocation_ratio", 1.0),
        spending_family=d.get("spending_family", "LanDeMetsOBF"),
        binding_futility=d.get("binding_futility", False),
        analyses=tuple(
            AnalysisPlan(a["label"], a["information_fraction"], a.get("efficacy", False),
                         a.get("futility_hr_threshold"))
            for a in d["analyses"]
        ),
    )
    u = d.get("updated_analysis") or {}
    updated = UpdatedAnalysisPlan(u.get("label", "Updated"), u.get("target_events"), u.get("min_followup_months"))
    fpi = d.get("first_patient_in")
    return spec, updated, d.get("endpoint", "overall survival"), date.fromisoformat(fpi) if fpi else None


_ROW_FIELDS = (
    "label", "information_fraction", "target_events", "efficacy", "cumulative_alpha_spent",
    "nominal_level_one_sided", "efficacy_z_bound", "efficacy_hr_bound", "futility_hr_bound", "futility_z_bound",
)


def table_to_dict(table: BoundaryTable) -> dict:
    return {
        "max_events": table.max_events,
        "alpha_one_sided": table.alpha_one_sided,
        "allocation_ratio": table.allocation_ratio,
        "rows": [{f: getattr(r, f) for f in _ROW_FIELDS} for r in table.rows],
    }


def table_from_dict(d: Mapping[str, Any]) -> BoundaryTable:
    rows = tuple(BoundaryRow(**{f: r.get(f) for f in _ROW_FIELDS}) for r in d["rows"])
    return BoundaryTable(rows, int(d["max_events"]), float(d["alpha_one_sided"]),
                         float(d.get("allocation_ratio", 1.0)))


def record_analysis(
    course: TrialCourse,
    label: str,
    ccod: date,
    ssd: date,
    observed_events: int,
    observed_hr: float | None = None,
    observed_z: float | None = None,
    follow_futility: bool = True,
    overrun_tolerance: float = 0.15,
) -> TrialCourse:
    """Append a conducted analysis, recalculating bounds and applying the rules.

    A futility stop is a recommendation; with ``follow_futility=False`` the
    sponsor overrules it and the hypothesis stays open. The primary analysis
    may overrun its target by at most ``overrun_tolerance``; deliberately
    postponing it is refused.

    Raises:
        MonitoringError: On any request the testing procedure forbids.
    """
    if (observed_hr is None) == (observed_z is None):
        raise ValueError("supply exactly one of observed_hr and observed_z")
    r = course.spec.allocation_ratio
    if observed_hr is None:
        observed_hr = z_to_hr(observed_z, observed_events, r)
    if label in course.conducted_labels():
        raise MonitoringError(f"{label} has already been conducted")
    state = course.hypothesis_state

    def append(**kw) -> TrialCourse:
        obs = ObservedAnalysis(label, ccod, ssd, observed_events, observed_hr, allocation_ratio=r,
                               recalculated=kw.pop("recalculated", None), decision=kw.pop("decision", None))
        return replace(course, analyses=course.analyses + (obs,), **kw)

    if label == course.updated.label:
        if state is HypothesisState.OPEN:
            raise MonitoringError("an updated analysis can only follow the confirmatory analysis")
        if state is HypothesisState.ABANDONED_FUTILITY:
            raise MonitoringError("after a futility stop no update beyond the primary-time analysis is conducted")
        return append()

    try:
        plan = course.spec.plan(label)
    except KeyError:
        raise MonitoringError(f"unknown analysis label {label!r}") from None
    order = [a.label for a in course.spec.analyses]
    done = [order.index(a.label) for a in course.analyses if a.label in order]
    if done and order.index(label) < max(done):
        raise MonitoringError(f"{label} cannot follow a later pre-specified analysis")

    if state is HypothesisState.REJECTED:
        raise MonitoringError(
            "the null hypothesis was already rejected; a hypothesis can only be rejected once "
            "and further analyses are updated analyses"
        )
    if state is HypothesisState.RETAINED_AT_PRIMARY:
        raise MonitoringError("the primary analysis has already been conducted")
    if state is HypothesisState.ABANDONED_FUTILITY:
        if label != course.primary_label:
            raise MonitoringError("after a futility stop only the primary-time update is conducted")
        return append()

    table = course.table
    history = course.efficacy_history()
    if label == course.primary_label:
        limit = table.max_events * (1.0 + overrun_tolerance)
        if observed_events > limit:
            raise DelayedPrimaryError(
                f"{observed_events} events exceed the target of {table.max_events} by more than "
                f"{overrun_tolerance:.0%}; postponing the primary analysis after an unsuccessful interim "
                "amounts to a sample-size re-estimation and inflates the type I error"
            )
        bounds = recalc_primary_level(table, history, observed_events)
    elif plan.efficacy:
        bounds = recalc_interim_level(table, label, observed_events, history, state)
    else:
        bounds = None

    ev = evaluate_decision(table, label, observed_hr, observed_events, bounds)
    decision = ev.decision
    new_state = state
    if decision is Decision.STOP_EFFICACY:
        new_state = HypothesisState.REJECTED
    elif decision is Decision.REACH_PRIMARY:
        new_state = HypothesisState.REJECTED if ev.rejected else HypothesisState.RETAINED_AT_PRIMARY
    elif decision is Decision.STOP_FUTILITY:
        if follow_futility:
            new_state = HypothesisState.ABANDONED_FUTILITY
        else:
            decision = Decision.CONTINUE
    return append(recalculated=bounds, decision=decision, hypothesis_state=new_state)


@dataclass(frozen=True)
class Designation:
    """Reporting-stage names of all planned analyses.

    ``labels`` maps every design-stage analysis (plus the updated analysis) to
    a :class:`ReportingLabel`, or ``None`` when the analysis was conducted but
    carries no reporting-stage role or is still pending.
    """

    labels: dict[str, ReportingLabel | None]
    decisive: str | None
    conducted: frozenset[str]
    decisive_override: str | None = None

    def with_label(self, label: ReportingLabel) -> list[str]:
        return [k for k, v in self.labels.items() if v is label]

    @property
    def confirmatory(self) -> str | None:
        found = self.with_label(ReportingLabel.CONFIRMATORY)
        return found[0] if found else None

    def to_dict(self) -> dict:
        return {
            "labels": {k: (v.value if v is not None else None) for k, v in self.labels.items()},
            "decisive": self.decisive,
            "decisive_override": self.decisive_override,
        }


def designate(course: TrialCourse, partial: bool = False) -> Designation:
    """Map the course's outcome to reporting-stage analysis names.

    Raises:
        MonitoringError: If the course is still open and ``partial`` is not set.
    """
    design_labels = [a.label for a in course.spec.analyses]
    all_labels = design_labels + [course.updated.label]
    conducted = frozenset(course.conducted_labels())
    labels: dict[str, ReportingLabel | None] = dict.fromkeys(all_labels)
    state = course.hypothesis_state
    if state is HypothesisState.OPEN:
        if not partial:
            raise MonitoringError("the course is still open; request a partial designation")
        return Designation(labels, None, conducted)

    testing = [a for a in course.analyses if a.decision is not None]
    deciding = testing[-1]
    k = design_labels.index(deciding.label)
    primary = course.primary_label
    for lab in design_labels[k + 1:]:
        labels[lab] = ReportingLabel.NOT_CONDUCTED
    if state is HypothesisState.ABANDONED_FUTILITY:
        labels[deciding.label] = ReportingLabel.FUTILITY
        labels[primary] = ReportingLabel.UPDATED
        labels[course.updated.label] = ReportingLabel.NOT_CONDUCTED
        decisive = None
    else:
        labels[deciding.label] = ReportingLabel.CONFIRMATORY
        labels[course.updated.label] = ReportingLabel.UPDATED
        decisive = deciding.label
    designation = Designation(labels, decisive, conducted)
    if course.decisive_override is not None:
        designation = mark_decisive(designation, course.decisive_override)
    return designation


def mark_decisive(designation: Designation, analysis_label: str) -> Designation:
    """Move the decisive flag to a conducted confirmatory or updated analysis."""
    role = designation.labels.get(analysis_label)
    if role not in (ReportingLabel.CONFIRMATORY, ReportingLabel.UPDATED):
        raise MonitoringError(f"{analysis_label} is not a confirmatory or updated analysis")
    if analysis_label not in designation.conducted:
        raise MonitoringError(f"{analysis_label} has not been conducted")
    return replace(designation, decisive=analysis_label, decisive_override=analysis_label)


def set_decisive(course: TrialCourse, analysis_label: str) -> TrialCourse:
    mark_decisive(designate(course), analysis_label)
    return replace(course, decisive_override=analysis_label)


def observed_information_fraction(course: TrialCourse, label: str) -> float:
    return course.analysis(label).observed_events / course.table.max_events
