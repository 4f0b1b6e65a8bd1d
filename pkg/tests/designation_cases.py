"""Outcome paths through the hypothetical plan, shared by several test modules."""

from datetime import date, timedelta

from seqtrial.monitoring import HypothesisState, ReportingLabel, record_analysis

LAG = timedelta(weeks=6)
FUT = ReportingLabel.FUTILITY
CONF = ReportingLabel.CONFIRMATORY
UPD = ReportingLabel.UPDATED


def rec(course, label, events, hr, ccod=date(2022, 1, 1), **kw):
    return record_analysis(course, label, ccod, ccod + LAG, events, observed_hr=hr, **kw)


# outcome columns of the designation table; None marks a blank cell
TABLE_COLUMNS = {
    "stop at IA1": {"IA1": FUT, "IA2": None, "Primary": UPD, "Updated": None},
    "stop at IA2 for futility": {"IA1": None, "IA2": FUT, "Primary": UPD, "Updated": None},
    "stop at IA2 for efficacy": {"IA1": None, "IA2": CONF, "Primary": None, "Updated": UPD},
    "stop at primary analysis": {"IA1": None, "IA2": None, "Primary": CONF, "Updated": UPD},
}

# observed hazard ratio producing each outcome at a look
_IA1 = {"pass": 0.9, "futile": 1.05}
_IA2 = {"pass": 0.8, "futile": 0.95, "efficacy": 0.68}
_PRIM = {"reject": 0.78, "retain": 0.9}


def enumerate_paths():
    """Every path through the plan, with futility followed or overruled."""
    for a1, h1 in _IA1.items():
        for follow1 in (True, False):
            if a1 == "pass" and not follow1:
                continue
            for a2, h2 in _IA2.items():
                for follow2 in (True, False):
                    if a2 != "futile" and not follow2:
                        continue
                    for p, h3 in _PRIM.items():
                        yield (a1, follow1, a2, follow2, p), (h1, h2, h3, follow1, follow2)


def run_path(config, hrs):
    h1, h2, h3, f1, f2 = hrs
    c = config.new_course()
    c = rec(c, "IA1", 129, h1, follow_futility=f1)
    if c.is_open:
        c = rec(c, "IA2", 257, h2, follow_futility=f2)
    if c.is_open:
        c = rec(c, "Primary", 385, h3)
    elif c.hypothesis_state is HypothesisState.ABANDONED_FUTILITY:
        c = rec(c, "Primary", 385, h3)
    if c.hypothesis_state in (HypothesisState.REJECTED, HypothesisState.RETAINED_AT_PRIMARY):
        c = rec(c, "Updated", 500, h3, ccod=date(2026, 9, 1))
    return c


def column_of(key):
    a1, f1, a2, f2, _ = key
    if a1 == "futile" and f1:
        return "stop at IA1"
    if a2 == "futile" and f2:
        return "stop at IA2 for futility"
    if a2 == "efficacy":
        return "stop at IA2 for efficacy"
    return "stop at primary analysis"
