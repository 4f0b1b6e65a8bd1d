"""Command-line front end.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
request violates the monitoring contract or the report terminology lint.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import date, timedelta
from pathlib import Path

from .config import ConfigError, TrialConfig, load_config
from .design import BoundaryRow, BoundaryTable, Design
from .monitoring import MonitoringError, TrialCourse, designate, record_analysis, set_decisive
from .report import TerminologyError, render_report
from .simulation import SimConfig, operating_characteristics, outcomes_csv, simulate_trials
from .timing import predicted_schedule

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRACT = 3

DESIGN_COLUMNS = [
    "label", "information_fraction", "target_events", "predicted_month", "futility_hr",
    "nominal_alpha_2sided", "efficacy_z", "efficacy_hr",
    # extra columns so the table can be read back without re-derivation
    "efficacy", "cumulative_alpha_1sided", "nominal_alpha_1sided", "futility_z",
]
TIMING_COLUMNS = ["analysis", "target_events", "predicted_month", "predicted_date", "minimal_followup_months"]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _opt_float(text: str) -> float | None:
    return float(text) if text != "" else None


def _write_csv(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Path | None, name: str) -> None:
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _schedule(cfg: TrialConfig, table: BoundaryTable):
    return predicted_schedule(cfg.model, table, cfg.updated.target_events, cfg.updated.min_followup_months,
                              cfg.first_patient_in, cfg.updated.label)


def design_csv(cfg: TrialConfig, design: Design) -> str:
    months = {s.label: s.predicted_month for s in _schedule(cfg, design.table)}
    rows = [
        [r.label, r.information_fraction, r.target_events, months[r.label], r.futility_hr_bound,
         r.nominal_level_two_sided, r.efficacy_z_bound, r.efficacy_hr_bound,
         r.efficacy, r.cumulative_alpha_spent, r.nominal_level_one_sided, r.futility_z_bound]
        for r in design.table.rows
    ]
    if cfg.updated.target_events is not None:
        u = cfg.updated.label
        rows.append([u, None, cfg.updated.target_events, months[u]] + [None] * 8)
    return _write_csv(DESIGN_COLUMNS, rows)


def read_design_csv(path: str | Path, cfg: TrialConfig) -> BoundaryTable:
    """Boundary table from a design CSV, values taken verbatim."""
    with open(path, newline="") as fh:
        records = [r for r in csv.DictReader(fh) if r["efficacy"] != ""]
    if not records:
        raise ConfigError([f"{path}: no planned analyses found"])
    rows = tuple(
        BoundaryRow(
            label=r["label"],
            information_fraction=float(r["information_fraction"]),
            target_events=int(r["target_events"]),
            efficacy=r["efficacy"] == "true",
            cumulative_alpha_spent=_opt_float(r["cumulative_alpha_1sided"]),
            nominal_level_one_sided=_opt_float(r["nominal_alpha_1sided"]),
            efficacy_z_bound=_opt_float(r["efficacy_z"]),
            efficacy_hr_bound=_opt_float(r["efficacy_hr"]),
            futility_hr_bound=_opt_float(r["futility_hr"]),
            futility_z_bound=_opt_float(r["futility_z"]),
        )
        for r in records
    )
    if [r.label for r in rows] != [a.label for a in cfg.spec.analyses]:
        raise ConfigError([f"{path}: analysis labels do not match the configuration"])
    return BoundaryTable(rows, rows[-1].target_events, cfg.spec.alpha_one_sided, cfg.spec.allocation_ratio)


def _fmt(value, spec: str) -> str:
    return "" if value is None else format(value, spec)


def design_text(cfg: TrialConfig, design: Design) -> str:
    """Human-readable boundary table, blank where a cell does not apply."""
    sched = {s.label: s for s in _schedule(cfg, design.table)}
    sided = "2-sided" if cfg.two_sided_presentation else "1-sided"
    header = ["Analysis", "Info. fraction", "Events", "Month", "Futility HR", f"Nominal alpha ({sided})",
              "Efficacy HR"]
    body = [["First patient in", "0", "0", "0", "", "", ""]]
    for r in design.table.rows:
        level = r.nominal_level_two_sided if cfg.two_sided_presentation else r.nominal_level_one_sided
        body.append([r.label, f"{r.information_fraction:.2f}", str(r.target_events),
                     f"{sched[r.label].predicted_month:.1f}", _fmt(r.futility_hr_bound, "g"),
                     _fmt(level, ".3f"), _fmt(r.efficacy_hr_bound, ".3f")])
    if cfg.updated.target_events is not None:
        u = sched[cfg.updated.label]
        body.append([u.label, "", str(u.target_events), f"{u.predicted_month:.1f}", "", "", ""])
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header] + body]
    power_line = f"Maximum events {design.table.max_events}; power at HR {cfg.spec.hr_alternative:g}: " \
                 f"{design.power(cfg.spec.hr_alternative):.4f} without futility, " \
                 f"{design.power(cfg.spec.hr_alternative, honor_futility=True):.4f} with futility stops"
    return "\n".join(lines + ["", power_line]) + "\n"


def _load(args) -> tuple[TrialConfig, Design]:
    cfg = load_config(args.config)
    table = read_design_csv(args.design, cfg) if getattr(args, "design", None) else None
    return cfg, cfg.design(table)


def cmd_design(args) -> int:
    cfg, design = _load(args)
    csv_text = design_csv(cfg, design)
    text = design_text(cfg, design)
    sys.stdout.write(csv_text if args.format == "csv" else text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "design.csv").write_text(csv_text)
        (args.out / "design.txt").write_text(text)
    return EXIT_OK


def cmd_timing(args) -> int:
    cfg, design = _load(args)
    sched = _schedule(cfg, design.table)
    rows = [[s.label, s.target_events, s.predicted_month,
             s.predicted_date.isoformat() if s.predicted_date else None, s.minimal_followup_months]
            for s in sched]
    csv_text = _write_csv(TIMING_COLUMNS, rows)
    if args.format == "csv":
        sys.stdout.write(csv_text)
    else:
        for s in sched:
            when = f"  {s.predicted_date.isoformat()}" if s.predicted_date else ""
            sys.stdout.write(f"{s.label:<10} {s.target_events:>5} events  month {s.predicted_month:6.2f}{when}  "
                             f"minimal follow-up {s.minimal_followup_months:6.2f}\n")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "schedule.csv").write_text(csv_text)
    return EXIT_OK


def _read_course(path: Path) -> TrialCourse:
    try:
        return TrialCourse.from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"{path}: not a valid course file ({exc})"]) from None


def _write_course(course: TrialCourse, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(course.to_dict(), indent=2) + "\n")


def cmd_monitor(args) -> int:
    path = args.course
    if args.init:
        if args.config is None:
            raise ConfigError(["--init requires --config"])
        cfg, design = _load(args)
        course = TrialCourse(cfg.spec, design.table, updated=cfg.updated, endpoint=cfg.endpoint,
                             first_patient_in=cfg.first_patient_in)
        _write_course(course, path)
        print(f"initialised course at {path}")
        if args.label is None:
            return EXIT_OK
    course = _read_course(path)
    if args.label is not None:
        if args.ccod is None or args.events is None or (args.hr is None) == (args.z is None):
            raise ConfigError(["recording needs --ccod, --events and exactly one of --hr and --z"])
        ccod = date.fromisoformat(args.ccod)
        ssd = date.fromisoformat(args.ssd) if args.ssd else ccod + timedelta(weeks=args.ssd_lag_weeks)
        course = record_analysis(course, args.label, ccod, ssd, args.events, observed_hr=args.hr,
                                 observed_z=args.z, follow_futility=not args.overrule_futility)
        a = course.analyses[-1]
        print(f"recorded {a.label}: {a.observed_events} events, HR {a.observed_hr:.4f}, z {a.z:.4f}")
        if a.recalculated is not None:
            rec = a.recalculated
            print(f"recalculated bound: nominal alpha {rec.alpha_2sided:.6f} (2-sided), "
                  f"{rec.alpha_1sided:.6f} (1-sided), z {rec.z:.5f}, HR {rec.hr:.4f}")
        print(f"decision: {a.decision.value if a.decision else 'none (estimation only)'}")
    if args.decisive is not None:
        course = set_decisive(course, args.decisive)
    print(f"hypothesis state: {course.hypothesis_state.value}")
    des = designate(course, partial=True)
    for label, role in des.labels.items():
        print(f"  {label}: {role.value if role else '-'}")
    if des.decisive:
        print(f"  decisive: {des.decisive}")
    _write_course(course, path if args.out is None else args.out / "course.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, design = _load(args)
    hr_true = cfg.spec.hr_alternative if args.hr_true is None else args.hr_true
    sim = SimConfig(cfg.model, cfg.spec, design.table, hr_true, n_trials=args.trials, seed=args.seed,
                    honor_futility=args.honor_futility, perturbation=args.perturbation,
                    ssd_lag_weeks=cfg.ssd_lag_weeks)
    oc = operating_characteristics(sim, n_workers=args.workers)
    summary = {"hr_true": hr_true, "seed": args.seed, "honor_futility": args.honor_futility,
               "perturbation": args.perturbation, **oc.to_dict()}
    oc_json = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.format == "csv":
        flat = {k: v for k, v in summary.items() if not isinstance(v, dict)}
        for key, value in summary.items():
            if isinstance(value, dict):
                flat.update({f"{key}.{lab}": v for lab, v in value.items()})
        sys.stdout.write(_write_csv(list(flat), [list(flat.values())]))
    else:
        sys.stdout.write(
            f"{oc.n_trials} trials at HR {hr_true:g} (seed {args.seed}, futility "
            f"{'honored' if args.honor_futility else 'ignored'})\n"
            f"rejection probability {oc.rejection_probability:.4f} (SE {oc.rejection_se:.4f})\n"
            + "".join(f"  stop at {lab}: efficacy {oc.efficacy_stop_probability[lab]:.4f}, "
                      f"futility {oc.futility_stop_probability[lab]:.4f}\n" for lab in design.table.labels)
            + f"expected events {oc.expected_events:.1f}, expected duration {oc.expected_duration:.1f} months\n"
        )
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "oc.json").write_text(oc_json)
        if args.per_trial:
            (args.out / "trials.csv").write_text(outcomes_csv(simulate_trials(sim)))
    return EXIT_OK


def cmd_report(args) -> int:
    course = _read_course(args.course)
    _emit(render_report(course, two_sided=not args.one_sided), args.out, "report.txt")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqtrial", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def configured(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=name != "monitor", help="JSON configuration")
        p.add_argument("--design", type=Path, help="design CSV to reuse instead of re-deriving bounds")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--format", choices=("csv", "text"), default="text", help="stdout format")
        return p

    p = configured("design", "boundary table")
    p.set_defaults(func=cmd_design)

    p = configured("timing", "predicted analysis schedule")
    p.set_defaults(func=cmd_timing)

    p = configured("monitor", "record an analysis on a course file")
    p.add_argument("--course", type=Path, required=True)
    p.add_argument("--init", action="store_true", help="create the course file from --config")
    p.add_argument("--label")
    p.add_argument("--ccod", help="clinical cutoff date, YYYY-MM-DD")
    p.add_argument("--ssd", help="snapshot date, YYYY-MM-DD")
    p.add_argument("--ssd-lag-weeks", type=float, default=6.0, help="used when --ssd is omitted")
    p.add_argument("--events", type=int)
    p.add_argument("--hr", type=float)
    p.add_argument("--z", type=float)
    p.add_argument("--overrule-futility", action="store_true")
    p.add_argument("--decisive", help="mark a conducted confirmatory or updated analysis as decisive")
    p.set_defaults(func=cmd_monitor)

    p = configured("simulate", "Monte Carlo operating characteristics")
    p.add_argument("--hr-true", type=float, help="defaults to the design alternative")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--honor-futility", type=_bool, default=True, metavar="BOOL")
    p.add_argument("--perturbation", type=float, default=0.0, help="relative information perturbation")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-trial", action="store_true", help="also write trials.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="trial report text")
    p.add_argument("--course", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.add_argument("--one-sided", action="store_true", help="present nominal levels one-sided")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MonitoringError, TerminologyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
