"""Size a three-look survival trial and derive its efficacy bounds.

Starts from the single-look Schoenfeld count, then adds a futility-only look
at one third of the events and a combined look at two thirds, and shows what
the non-binding futility rules cost in power.
"""

from seqtrial import Design, fixed_design_events, hypothetical_config, minimal_detectable_difference

cfg = hypothetical_config()
spec = cfg.spec

fixed = fixed_design_events(spec.alpha_one_sided, spec.power_target, spec.hr_alternative)
print(f"single look: {fixed} events, minimal detectable HR {minimal_detectable_difference(fixed, 0.025):.4f}")

design = Design.from_spec(spec)
print(f"with interim looks: {design.table.max_events} events\n")
print(f"{'look':<8} {'events':>6} {'2-sided level':>14} {'z bound':>8} {'HR bound':>9} {'futility HR':>12}")
for row in design.table.rows:
    level = f"{row.nominal_level_two_sided:.4f}" if row.efficacy else ""
    z = f"{row.efficacy_z_bound:.4f}" if row.efficacy else ""
    hr = f"{row.efficacy_hr_bound:.4f}" if row.efficacy else ""
    fut = f"{row.futility_hr_bound:g}" if row.futility_hr_bound is not None else ""
    print(f"{row.label:<8} {row.target_events:>6} {level:>14} {z:>8} {hr:>9} {fut:>12}")

print()
print(f"power ignoring futility stops: {design.power(0.75):.4f}")
print(f"power if futility stops are followed: {design.power(0.75, honor_futility=True):.4f}")

compensated = Design.from_spec(spec, compensate_futility=True)
print(f"events needed to recover 80% with futility followed: {compensated.table.max_events}")
