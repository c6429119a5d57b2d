r"""
Adaptive sampling from a Lipschitz log-density
==============================================

g(x) = -3|x - 1/2| + sin(20 x)/5 on [0, 1] is 7-Lipschitz.  A grid of m
cells gives a proposal exp(g_hat) that is within exp(+-r_hat) of the target,
and the sampler publishes with probability exp(-2 r_hat) per iteration.  The
grid refines on a fixed timetable, so runtimes reveal nothing about g.
"""

import numpy as np

from privsample import RefinementSchedule, RngStream, adaptive_sample, build_grid
from privsample.adaptive import relative_runtime_ratio
from privsample.harness import example_lipschitz_target

target = example_lipschitz_target()

for m in (5, 15, 45, 135):
    grid = build_grid(target, m)
    print(f"m = {m:>3}: r_hat = {grid.r_hat:.4f}, publish prob {grid.publish_probability:.4f}, "
          f"rejection cost vs plain sampler x{relative_runtime_ratio(grid.r_hat):.3f}")

###############################################################################
# Refining every 500 iterations.

run = adaptive_sample(target, 20_000, RngStream(3), schedule=RefinementSchedule(initial_m=2, doubling_interval=500))
for lvl in run.levels:
    if lvl.iterations:
        print(f"m = {lvl.m:>6}: {lvl.iterations:>6} iterations, publish rate {lvl.publishes / lvl.iterations:.4f}"
              f" (expected {lvl.publish_probability:.4f})")
print(f"{len(run.samples)} samples, {run.n_evaluations} target evaluations, mean {run.samples.mean():.4f}")

hist, edges = np.histogram(run.samples[:, 0], bins=10, range=(0, 1), density=True)
for lo, h in zip(edges, hist):
    print(f"  [{lo:.1f}, {lo + 0.1:.1f})  {'#' * int(20 * h)}")
