"""
Reversible jump over the number of bins
=======================================

A sine ripple on a step makes the posterior over N multimodal: coarse grids
explain the step, fine grids also catch the ripple.  Two chains started far
apart (N = 2 and N = 20) are compared with the exact enumeration.
"""

from pointintensity import (IndepGammaPrior, ModelIndexPrior, RjConfig, exact_model_posterior,
                            run_rj, simulate_poisson)
from pointintensity.simulate import step_sine

data = simulate_poisson(3, step_sine(), 200)
prior = ModelIndexPrior.uniform(50)
heights = IndepGammaPrior(2.0, 1.0)
exact = dict(exact_model_posterior(data, RjConfig(psi_prior=heights, model_prior=prior)))
modes = [N for N, p in exact.items()
         if p > 1e-3 and p >= exact.get(N - 1, 0.0) and p >= exact.get(N + 1, 0.0)]
print(f"{data.total_events()} events; local modes of the exact posterior over N: {modes}")

runs = {}
for start in (2, 20):
    cfg = RjConfig(eta=0.45, psi_prior=heights, model_prior=prior,
                   iterations=30000, seed=start, init_n=start)
    out = run_rj(data, cfg)
    runs[start] = out.model_probabilities()
    print(f"start N={start:2d}: acceptance {out.accepted / out.iterations:.2f}, "
          f"{len(out.scores)} models scored")

top = sorted(exact, key=exact.get, reverse=True)[:10]
print("\n  N   exact   from 2  from 20")
for N in sorted(top):
    print(f"{N:3d}  {exact[N]:.3f}   {runs[2].get(N, 0):.3f}    {runs[20].get(N, 0):.3f}")

for start, freq in runs.items():
    tv = 0.5 * sum(abs(freq.get(N, 0.0) - p) for N, p in exact.items())
    print(f"total variation to exact, start {start}: {tv:.3f}")

# The small mode at N = 15 sits behind a valley of near-zero mass, so a
# nearest-neighbour walk of 30000 steps rarely reaches it.  Compare the
# frequencies above with the exact column before trusting a single run.
