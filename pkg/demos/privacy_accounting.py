r"""
Accounting for a leaky runtime
==============================

If adjacent databases have acceptance probabilities p and q, the runtime
leak is governed by R = log(1-p)/log(1-q).  This script converts R into
(epsilon, delta) pairs and checks the closed-form curve f_R against the
exact geometric tradeoff.
"""

import numpy as np

from privsample import accounting as acc

###############################################################################
# epsilon as a function of delta for two leak levels.

for R in (2.0, 1.1):
    row = "  ".join(f"{acc.eps_of_delta(R, 10.0**-k):7.3f}" for k in range(1, 7))
    print(f"R = {R:<4}  eps(delta = 1e-1 .. 1e-6): {row}")

###############################################################################
# f_R lower-bounds the exact tradeoff; the bound is tighter for small q.

g = np.linspace(0, 1, 2001)
for q in (0.1, 0.6):
    p = 1 - (1 - q) ** 2
    exact = acc.exact_geometric_tradeoff(p, q)
    slack = exact(g) - acc.f_R(2.0, g)
    print(f"q = {q}: min slack {slack.min():.2e}, max gap {slack.max():.4f}")

###############################################################################
# Exponential mechanism: the best-case acceptance p* bounds R from below by
# e^eps, so the runtime can leak more than the mechanism itself.

for eps in (0.5, 1.0, 2.0):
    Rs = [acc.exp_mech_R(eps, p).R for p in (1e-6, 0.5, 0.9)]
    print(f"eps = {eps}: e^eps = {np.exp(eps):.4f}, R at p* = 1e-6/0.5/0.9: " + ", ".join(f"{r:.4f}" for r in Rs))

###############################################################################
# Running k proposals in parallel per step does not change R.

print("batched R for (0.3, 0.1):", [round(acc.batched_R(0.3, 0.1, k), 12) for k in (1, 4, 16, 64)])
