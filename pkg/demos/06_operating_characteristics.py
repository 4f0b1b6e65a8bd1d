"""Monte Carlo operating characteristics of the design.

Simulates patients, cuts the data when each event target is reached and
applies the monitoring rules with full recalculation. Pass a trial count to
go beyond the quick default.
"""

import argparse

from seqtrial import SimConfig, hypothetical_config, operating_characteristics, power

parser = argparse.ArgumentParser()
parser.add_argument("--trials", type=int, default=4000)
parser.add_argument("--seed", type=int, default=1)
args = parser.parse_args()

cfg = hypothetical_config()
table = cfg.design().table

print(f"{'HR':>5} {'futility':>9} {'simulated':>10} {'SE':>7} {'analytic':>9} {'E[events]':>10} {'E[months]':>10}")
for hr in (1.0, 0.85, 0.75):
    for honor in (False, True):
        sim = SimConfig(cfg.model, cfg.spec, table, hr, n_trials=args.trials, seed=args.seed, honor_futility=honor)
        oc = operating_characteristics(sim)
        analytic = power(cfg.spec, table.max_events, hr, honor_futility=honor, table=table)
        print(f"{hr:>5} {'followed' if honor else 'ignored':>9} {oc.rejection_probability:>10.4f} "
              f"{oc.rejection_se:>7.4f} {analytic:>9.4f} {oc.expected_events:>10.1f} {oc.expected_duration:>10.1f}")
