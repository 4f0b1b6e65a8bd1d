"""Report text for a futility stop and an efficacy stop."""

from datetime import date

from seqtrial import hypothetical_config, record_analysis, render_report

cfg = hypothetical_config()

futile = record_analysis(cfg.new_course(), "IA1", date(2021, 11, 1), date(2021, 12, 3), 132, observed_hr=1.07)
print(render_report(futile))

efficacious = record_analysis(cfg.new_course(), "IA1", date(2021, 12, 14), date(2022, 1, 25), 130,
                              observed_hr=0.93)
efficacious = record_analysis(efficacious, "IA2", date(2023, 4, 10), date(2023, 5, 29), 255, observed_hr=0.689)
print(render_report(efficacious))
