"""Record analyses as they happen and recalculate bounds for the actual events.

The second look was planned at 257 events but the cleaned snapshot holds 255.
The nominal level is recalculated for 255 events, keeping earlier looks
frozen at the levels actually used.
"""

from datetime import date

from seqtrial import designate, hypothetical_config, record_analysis

cfg = hypothetical_config()
course = cfg.new_course()

course = record_analysis(course, "IA1", date(2021, 12, 14), date(2022, 1, 25), 130, observed_hr=0.93)
print(f"first look: HR 0.93 on 130 events -> {course.analyses[-1].decision.value}")

course = record_analysis(course, "IA2", date(2023, 4, 10), date(2023, 5, 29), 255, observed_hr=0.689)
a = course.analyses[-1]
planned = course.table.row("IA2")
print(f"second look: planned level {planned.nominal_level_two_sided:.4f}, HR bound {planned.efficacy_hr_bound:.3f}")
print(f"  recalculated for 255 events: level {a.recalculated.alpha_2sided:.4f}, HR bound {a.recalculated.hr:.3f}")
print(f"  observed HR 0.689 -> {a.decision.value}")

print("\nreporting-stage names:")
for label, role in designate(course).labels.items():
    print(f"  {label:<8} {role.value if role else '(no reporting role)'}")

try:
    record_analysis(course, "Primary", date(2024, 11, 1), date(2024, 12, 13), 385, observed_hr=0.7)
except Exception as exc:
    print(f"\nattempting another test: {exc}")
