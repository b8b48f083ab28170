"""Estimate an output distribution spanning ~10 orders of magnitude.

The toy model scores a sequence of 8 digits by their sum, so the exact
number of sequences per output value is a composition count we can compute
in closed form.  A flat-histogram (Wang-Landau) run never enumerates the
10^8-sequence space, yet recovers log rho(z) to within a fraction of a nat.

Run:  python3 demos/01_exact_vs_wang_landau.py
"""

import numpy as np

from omniinput import (BinGrid, InputSpace, ProposalKernel, SumEnergy,
                       WLConfig, entropy_divergence,
                       exact_output_distribution, wang_landau_run)

space = InputSpace(vocab_size=10, length=8)
model = SumEnergy(space)
grid = BinGrid(0.0, 73.0, 1.0)        # sums 0..72, one bin per value

print(f"input space: {space.total_size:,} sequences")

# ground truth by dynamic programming (no enumeration needed for sums)
exact = exact_output_distribution(space, model, grid)

# the sampler walks the space and learns S(z) = log rho(z) up to a constant
hist, reservoir, diag = wang_landau_run(space, model, grid,
                                        ProposalKernel(), WLConfig(),
                                        rng_seed=1)
print(f"Wang-Landau: {diag['steps']:,} steps, "
      f"{len(diag['log_f_schedule'])} refinement stages, "
      f"converged={diag['converged']}")

# entropies carry an arbitrary additive constant; anchor both at the mode
mode = int(np.argmax(exact.log_counts))
est = hist.entropy_anchor(mode)
ref = exact.entropy_anchor(mode)

print(f"\n{'z':>4} {'exact S':>10} {'estimate':>10} {'error':>8}")
for k in range(0, grid.bin_count, 8):
    if np.isfinite(ref[k]) and np.isfinite(est[k]):
        print(f"{grid.midpoints()[k]:4.0f} {ref[k]:10.3f} "
              f"{est[k]:10.3f} {est[k] - ref[k]:8.3f}")

max_dev, mean_dev = entropy_divergence(hist, exact, mass_coverage=0.99)
print(f"\nover the bins holding 99% of the mass: "
      f"max |error| = {max_dev:.3f} nats, mean = {mean_dev:.3f} nats")
print(f"rare tail reached: bin z=0 holds exactly 1 sequence out of 10^8; "
      f"the sampler visited it {int(hist.visits[0])} times")
