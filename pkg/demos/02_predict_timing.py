"""When will each analysis happen?

Expected events under uniform accrual, exponential survival and dropout,
inverted to calendar months and dates from first patient in.
"""

from dataclasses import replace

from seqtrial import hypothetical_config
from seqtrial.timing import predicted_schedule

cfg = hypothetical_config()
table = cfg.design().table
u = cfg.updated

for title, model in (("2.5% annual dropout", cfg.model),
                     ("no dropout", replace(cfg.model, annual_dropout_rate=0.0))):
    print(title)
    for row in predicted_schedule(model, table, u.target_events, u.min_followup_months, cfg.first_patient_in):
        print(f"  {row.label:<8} {row.target_events:>4} events  month {row.predicted_month:5.1f}  "
              f"{row.predicted_date}  minimal follow-up {row.minimal_followup_months:5.1f}")
    print()
