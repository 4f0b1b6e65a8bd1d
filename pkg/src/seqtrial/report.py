"""Plain-text trial reports in reporting-stage terminology.

Once a course is closed, analyses are named by their reporting role
(futility, confirmatory or updated analysis). Design-stage names are
planning vocabulary and are kept out of closed-course reports; a lint
enforces this before any text is returned.
"""

from __future__ import annotations

import re
from datetime import date

from .inference import adjusted_summary, datum_from_course, naive_hr_ci
from .monitoring import (
    Decision,
    HypothesisState,
    ObservedAnalysis,
    ReportingLabel,
    TrialCourse,
    designate,
    observed_information_fraction,
)
from .timing import DAYS_PER_MONTH


class TerminologyError(ValueError):
    """Report text uses terms that are not allowed at the reporting stage."""


_ROLE_NAMES = {
    ReportingLabel.FUTILITY: "futility analysis",
    ReportingLabel.CONFIRMATORY: "confirmatory analysis",
    ReportingLabel.UPDATED: "updated analysis",
}

_ALWAYS_BANNED = ("final analysis",)
_CLOSED_BANNED = ("interim analysis", "interim analyses", "primary analysis")


def lint_report(text: str, course: TrialCourse) -> None:
    """Raise :class:`TerminologyError` on forbidden terminology.

    "final analysis" is never allowed. For closed courses the design-stage
    labels of the plan and the phrases "interim analysis" and "primary
    analysis" are refused as well.
    """
    lowered = text.lower()
    found = [t for t in _ALWAYS_BANNED if t in lowered]
    if not course.is_open:
        found += [t for t in _CLOSED_BANNED if t in lowered]
        found += [
            a.label for a in course.spec.analyses
            if re.search(rf"(?<![\w-]){re.escape(a.label)}(?![\w-])", text)
        ]
    if found:
        raise TerminologyError("report uses non-reporting-stage terms: " + ", ".join(sorted(set(found))))


def _fmt_date(d: date) -> str:
    return f"{d.day} {d:%B %Y}"


def _level(alpha_1sided: float, two_sided: bool) -> str:
    value = 2.0 * alpha_1sided if two_sided else alpha_1sided
    return f"{value:.4f} ({'two' if two_sided else 'one'}-sided)"


def _timing(course: TrialCourse, a: ObservedAnalysis) -> str:
    text = f"clinical cutoff date {_fmt_date(a.ccod)}"
    if course.first_patient_in is not None:
        months = (a.ccod - course.first_patient_in).days / DAYS_PER_MONTH
        text += f" ({months:.1f} months after first patient in on {_fmt_date(course.first_patient_in)})"
    weeks = (a.ssd - a.ccod).days / 7.0
    lag = f"{weeks:.0f}" if weeks == int(weeks) else f"{weeks:.1f}"
    return text + f", snapshot date {_fmt_date(a.ssd)} ({lag} weeks after the cutoff)"


def _events(course: TrialCourse, a: ObservedAnalysis, target: int | None) -> str:
    text = f"{a.observed_events} events"
    if target is not None:
        text += f" against a target of {target}"
    if a.label in course.table.labels:
        row = course.table.row(a.label)
        text += (f"; observed information fraction {observed_information_fraction(course, a.label):.3f}"
                 f" (planned {row.information_fraction:.3f})")
    return text


def _paragraph(course: TrialCourse, a: ObservedAnalysis, name: str, two_sided: bool) -> str:
    r = course.spec.allocation_ratio
    target = course.table.row(a.label).target_events if a.label in course.table.labels else course.updated.target_events
    hr, lo, hi = naive_hr_ci(a.observed_hr, a.observed_events, allocation_ratio=r)
    lines = [
        f"{name[0].upper()}{name[1:]}: {_timing(course, a)}.",
        f"  Data: {_events(course, a, target)}.",
        f"  Observed hazard ratio {hr:.3f} (unadjusted 95% CI {lo:.3f} to {hi:.3f}).",
    ]
    if a.label in course.table.labels and a.decision is not None:
        row = course.table.row(a.label)
        if row.futility_hr_bound is not None:
            met = a.observed_hr >= row.futility_hr_bound
            lines.append(f"  Futility threshold: hazard ratio {row.futility_hr_bound:g}; "
                         f"{'met' if met else 'not met'}.")
        if a.recalculated is not None:
            rec = a.recalculated
            lines.append(
                f"  Efficacy bound: nominal level recalculated from {_level(row.nominal_level_one_sided, two_sided)}"
                f" to {_level(rec.alpha_1sided, two_sided)} for the observed events, moving the critical "
                f"hazard ratio from {row.efficacy_hr_bound:.3f} to {rec.hr:.3f}."
            )
        lines.append(f"  Outcome: {_outcome_text(course, a)}.")
    return "\n".join(lines)


def _outcome_text(course: TrialCourse, a: ObservedAnalysis) -> str:
    if a.decision is Decision.STOP_EFFICACY:
        return "efficacy bound crossed, null hypothesis rejected"
    if a.decision is Decision.STOP_FUTILITY:
        return "futility criterion met, stopping the trial for futility recommended"
    if a.decision is Decision.REACH_PRIMARY:
        rejected = course.hypothesis_state is HypothesisState.REJECTED
        return "efficacy bound crossed, null hypothesis rejected" if rejected else \
            "efficacy bound not crossed, null hypothesis not rejected"
    row = course.table.row(a.label)
    if row.futility_hr_bound is not None and a.observed_hr >= row.futility_hr_bound:
        return "futility criterion met but overruled, trial continued"
    return "no stopping criterion met, trial continued"


def _estimation(course: TrialCourse, a: ObservedAnalysis) -> str:
    s = adjusted_summary(datum_from_course(course, a.label))
    hr, lo, hi = naive_hr_ci(a.observed_hr, a.observed_events, allocation_ratio=course.spec.allocation_ratio)
    return (
        "Estimation at the confirmatory analysis:\n"
        f"  Unadjusted hazard ratio {hr:.3f} (95% CI {lo:.3f} to {hi:.3f}).\n"
        f"  Stagewise-ordering median-unbiased hazard ratio {s['median_unbiased_hr']:.3f} "
        f"(adjusted 95% CI {s['ci_lower']:.3f} to {s['ci_upper']:.3f}; adjusted one-sided p-value "
        f"{s['p_value']:.5f})."
    )


def _status_summary(course: TrialCourse, two_sided: bool) -> str:
    lines = [f"Trial status for {course.endpoint}: ongoing, null hypothesis not yet tested to conclusion.", ""]
    if not course.analyses:
        lines.append("No analysis has been conducted.")
    for a in course.analyses:
        lines.append(_paragraph(course, a, f"look {a.label}", two_sided))
    return "\n".join(lines) + "\n"


def render_report(course: TrialCourse, two_sided: bool = True) -> str:
    """Report text for ``course``; open courses get a status summary.

    Raises:
        TerminologyError: If the text fails :func:`lint_report`.
    """
    if course.is_open:
        text = _status_summary(course, two_sided)
        lint_report(text, course)
        return text

    des = designate(course)
    state = course.hypothesis_state
    headline = {
        HypothesisState.REJECTED: "null hypothesis rejected",
        HypothesisState.RETAINED_AT_PRIMARY: "null hypothesis not rejected",
        HypothesisState.ABANDONED_FUTILITY: "trial stopped for futility",
    }[state]
    lines = [f"Trial report for {course.endpoint}: {headline}.", ""]
    for a in course.analyses:
        role = des.labels.get(a.label)
        if role is None:
            name = "earlier look" if a.decision is not None else "additional analysis"
        else:
            name = _ROLE_NAMES[role]
        lines.append(_paragraph(course, a, name, two_sided))
        lines.append("")
    for label, role in des.labels.items():
        if role is ReportingLabel.NOT_CONDUCTED:
            target = (course.table.row(label).target_events if label in course.table.labels
                      else course.updated.target_events)
            what = f"after {target} events" if target is not None else "as an update"
            lines.append(f"The analysis planned {what} was not conducted.")
    if state is HypothesisState.ABANDONED_FUTILITY:
        lines.append("Following the futility stop, the only further analysis is an update at the time "
                     "originally planned for testing; no hypothesis test is performed there.")
    elif state is HypothesisState.REJECTED and course.updated.label not in course.conducted_labels():
        u = course.updated
        parts = []
        if u.target_events is not None:
            parts.append(f"{u.target_events} events")
        if u.min_followup_months is not None:
            parts.append(f"{u.min_followup_months:g} months minimal follow-up")
        if parts:
            lines.append(f"An updated analysis for estimation is planned after {' or '.join(parts)}, "
                         "whichever comes first.")
    lines.append("")
    if des.decisive is not None:
        role = des.labels[des.decisive]
        cut = _fmt_date(course.analysis(des.decisive).ccod)
        lines.append(f"Decisive analysis: the {_ROLE_NAMES[role]} with clinical cutoff date {cut}.")
        lines.append("")
    if state is HypothesisState.REJECTED:
        confirmatory = course.analysis(des.confirmatory)
        lines.append(_estimation(course, confirmatory))
        lines.append("")
    text = "\n".join(lines).rstrip("\n") + "\n"
    lint_report(text, course)
    return text
