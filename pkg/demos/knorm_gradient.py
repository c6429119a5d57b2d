r"""
K-norm gradient mechanism
=========================

For a strongly convex, smooth objective the density exp(-||grad g(x)||) sits
between two l2 K-norm laws.  With alpha = 1, L = 3 in two dimensions the
squeeze sampler's runtime is Geom(1/9) whatever the objective's minimiser.
"""

import numpy as np

from privsample import KNGTarget, RngStream, knorm_envelope, squeeze_reject
from privsample.harness import certify_runtime_law

A = np.diag([1.0, 3.0])
runs = {}
for shift in ((0.0, 0.0), (2.0, -1.0)):
    c = np.array(shift)
    target = KNGTarget.from_gradient(lambda x, c=c: A @ (x - c), 2, 1.0, 3.0, c)
    env = knorm_envelope(target)
    rng = RngStream(4, int(10 * sum(shift)) % 97)
    traces = [squeeze_reject(target, env, rng) for _ in range(10_000)]
    runs[shift] = np.array([t.runtime for t in traces])
    xs = np.array([t.value for t in traces])
    print(f"minimiser {shift}: sample mean {xs.mean(axis=0).round(3)}, mean runtime {runs[shift].mean():.3f}")
    print("  ", certify_runtime_law(runs[shift], 1 / 9).line())
