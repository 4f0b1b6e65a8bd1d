"""Estimation after an early stop under the stagewise ordering.

Prints the p-value function, the median-unbiased hazard ratio and the
adjusted interval for a trial stopped at its first efficacy look, then for
one that reached the last look.
"""

import math

from seqtrial import StoppedTrialDatum, adjusted_ci, hr_to_z, median_unbiased_hr, naive_hr_ci, stagewise_p

early = StoppedTrialDatum((255, 385), (2.51895, 1.99306), 0, hr_to_z(0.689, 255))
late = StoppedTrialDatum((255, 385), (2.51895, 1.99306), 1, hr_to_z(0.80, 385))

for name, datum, hr, d in (("stopped early", early, 0.689, 255), ("reached last look", late, 0.80, 385)):
    _, lo, hi = naive_hr_ci(hr, d)
    alo, ahi = adjusted_ci(datum)
    print(name)
    print(f"  naive HR {hr:.3f} ({lo:.3f}, {hi:.3f})")
    print(f"  median-unbiased HR {median_unbiased_hr(datum):.3f} ({alo:.3f}, {ahi:.3f})")
    for true_hr in (1.0, 0.9, 0.8, 0.7, 0.6):
        print(f"    P(result at least this extreme | HR={true_hr}) = {stagewise_p(datum, -math.log(true_hr)):.4f}")
    print()
