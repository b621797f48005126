"""
A spiky intensity
=================

The "Bart Simpson" rate has a broad normal bump with five sharp spikes on top.
With 200 replicates the rule of thumb gives a fine grid, and the adaptive
random walk on log(alpha) settles near its target acceptance rate.
"""

import numpy as np

from pointintensity import (BinGrid, GmcHyperparams, IndepGammaPrior, bin_events, credible_band,
                            fit_conjugate, l2_distance, rule_of_thumb_bins, run_gmc,
                            simulate_poisson, summarize_chain)
from pointintensity.diagnostics import autocorrelation, effective_sample_size
from pointintensity.simulate import bart_simpson

lam = bart_simpson()
print(f"expected events per replicate: {lam.integral():.3f}")

data = simulate_poisson(8, lam, 200)
grid = BinGrid.uniform(lam.horizon, rule_of_thumb_bins(data))
out = run_gmc(data, grid, GmcHyperparams(), iters=30000, rng=8)
gmc = summarize_chain(out)
conj = credible_band(fit_conjugate(bin_events(data, grid), IndepGammaPrior()))

print(f"N = {grid.N}, acceptance {out.acceptance_rate:.3f}, final step {out.mwg_step:.3f}")
print(f"alpha: mean {out.alpha.mean():.2f}, 95% interval "
      f"{np.quantile(out.alpha, 0.025):.2f} .. {np.quantile(out.alpha, 0.975):.2f}")
print("alpha ACF lags 1-5:", np.round(autocorrelation(out.alpha, 5)[1:], 3))
print(f"alpha ESS {effective_sample_size(out.alpha):.0f} of {out.kept} kept draws")

print(f"L2 error  conjugate {l2_distance(conj.mean_intensity(), lam):.4f}"
      f"   GMC {l2_distance(gmc.mean_intensity(), lam):.4f}")

# band coverage of the truth at bin midpoints
mid = 0.5 * (grid.edges[:-1] + grid.edges[1:])
truth = lam(mid)
for level in (0.75, 0.95):
    lo, hi = gmc.band(level)
    print(f"{level:.0%} band covers the truth at {np.mean((lo <= truth) & (truth <= hi)):.0%} of midpoints")
