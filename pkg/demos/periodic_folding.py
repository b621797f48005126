"""
Folding a periodic process
==========================

Thirty days of events whose rate depends only on the hour of the day.  Cutting
the record into days and stacking them turns one long realisation into thirty
replicates on [0, 24), which is what the estimators expect.
"""

import numpy as np

from pointintensity import (BinGrid, GmcHyperparams, fold_periodic, l2_distance,
                            rule_of_thumb_bins, run_gmc, simulate_poisson, summarize_chain)
from pointintensity.simulate import NamedIntensity

days = 30


def daily(x):
    hour = np.mod(x, 24.0)
    return 1.0 + 3.0 * np.exp(-0.5 * ((hour - 9.0) / 1.5) ** 2) + 2.0 * np.exp(-0.5 * ((hour - 20.0) / 2.0) ** 2)


lam = NamedIntensity("daily", daily, 6.0, 24.0 * days)
record = simulate_poisson(5, lam, 1)
print(f"{record.total_events()} events over {days} days")

folded = fold_periodic(record, 24.0)
print(f"folded: {folded.n} replicates on [0, {folded.horizon:g})")

grid = BinGrid.uniform(24.0, rule_of_thumb_bins(folded, cap=48))
fit = summarize_chain(run_gmc(folded, grid, GmcHyperparams(), iters=20000, rng=5))
one_day = NamedIntensity("daily", daily, 6.0, 24.0)
print(f"N = {grid.N}, L2 error {l2_distance(fit.mean_intensity(), one_day):.3f}")

lo, hi = fit.band(0.95)
print("\nhour  truth  mean   95% band")
for h in range(0, 24, 2):
    k = grid.locate(np.array([h + 0.5]))[0]
    print(f"{h:4d} {float(daily(h + 0.5)):6.2f} {fit.mean[k]:5.2f}   [{lo[k]:.2f}, {hi[k]:.2f}]")
