"""From samples to a precision-recall curve over the whole input space.

Pipeline: sample the output distribution, keep up to 30 representative
inputs per output bin, score them with an annotator (here a machine
oracle: "is the digit sum divisible by 30?"), and combine per-bin
precision r(z) with the distribution rho(z) into precision and recall at
every confidence cut.  On this small space we also compute everything by
brute force and print both, so the sampled pipeline can be judged.

Run:  python3 demos/03_precision_recall_pipeline.py
"""

import tempfile
from pathlib import Path

from omniinput import (AnnotationStore, BinGrid, Direction, InputSpace,
                       ModuloAnnotator, ProposalKernel, SumEnergy, WLConfig,
                       Window, aupr, exact_output_distribution,
                       exact_precision_per_bin, pr_curve, wang_landau_run)

space = InputSpace(vocab_size=10, length=4)
model = SumEnergy(space)
grid = BinGrid(0.0, 37.0, 1.0)
oracle = ModuloAnnotator(30)        # "positive" means sum % 30 == 0

# 1. sample rho(z) and collect per-bin representatives
hist, reservoir, _ = wang_landau_run(space, model, grid, ProposalKernel(),
                                     WLConfig(), rng_seed=3,
                                     reservoir_capacity=30)
rho = hist.normalize_to_space(space)

# 2. turn the representatives into annotation tasks and score them
store = AnnotationStore(Path(tempfile.mkdtemp()))
tasks, underfilled = store.create_tasks("demo", reservoir, per_bin_quota=30)
print(f"{len(tasks)} annotation tasks "
      f"({len(underfilled)} bins below quota)")
store.auto_annotate("demo", oracle)
r, spread = store.merge_to_precision("demo", grid)

# 3. sweep the confidence cut lambda (low sum = confident here)
window = Window(0.0, 37.0)
curve = pr_curve(r, rho, Direction.LOWER_IS_CONFIDENT, window)
print(f"\n{'lambda':>7} {'precision':>10} {'recall':>10}")
for p in curve.points[::6]:
    print(f"{p.lam:7.1f} {p.precision:10.4f} {p.recall_norm:10.4f}")
print(f"sampled AUPR  = {aupr(curve):.4f}")

# 4. brute force the same curve for comparison
exact_rho = exact_output_distribution(space, model, grid)
exact_r = exact_precision_per_bin(space, model, oracle, grid)
exact_curve = pr_curve(exact_r, exact_rho, Direction.LOWER_IS_CONFIDENT,
                       window)
print(f"exact AUPR    = {aupr(exact_curve):.4f}")
