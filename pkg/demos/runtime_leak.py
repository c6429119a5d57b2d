r"""
Runtime as a side channel
=========================

Plain rejection sampling for a private ridge regression: the number of
iterations follows Geom(p_D), and p_D moves when one record changes.  The
squeeze sampler on the same two databases has the identical runtime law.
"""

import numpy as np

from privsample import RngStream, build_erm_target, gaussian_envelope, simple_reject, squeeze_reject
from privsample.harness import RIDGE_RECORDS, attack_tradeoff, certify_independence, ridge_demo_spec
from privsample.samplers import Envelope

n = 20_000
db_a = ridge_demo_spec()
db_b = ridge_demo_spec(RIDGE_RECORDS[:-1] + [[-0.6, 0.9]])

###############################################################################
# Plain rejection sampling with the upper Gaussian as proposal.  The
# acceptance rate is the target's normalising constant divided by c_U, which
# depends on the records.  The two-sample test below should fail.

plain = {}
for name, spec in (("a", db_a), ("b", db_b)):
    target = build_erm_target(spec)
    env = gaussian_envelope(target, validate=False)
    # drop the squeeze: this is the textbook sampler
    rng = RngStream(1, ord(name))
    plain[name] = np.array([simple_reject(target, Envelope(env.proposal, env.log_cU), rng).runtime
                            for _ in range(n)])
    print(f"plain sampler, database {name}: mean runtime {plain[name].mean():.3f}")

print("plain runtimes:", certify_independence(plain["a"], plain["b"]).line())

###############################################################################
# Squeeze sampler: publication is gated by the lower Gaussian, so the runtime
# is Geom(c_L/c_U) = Geom(sqrt(alpha/L)) on both databases.

squeezed = {}
for name, spec in (("a", db_a), ("b", db_b)):
    target = build_erm_target(spec)
    env = gaussian_envelope(target)
    rng = RngStream(2, ord(name))
    squeezed[name] = np.array([squeeze_reject(target, env, rng).runtime for _ in range(n)])
    print(f"squeeze sampler, database {name}: mean runtime {squeezed[name].mean():.3f}"
          f" (expected {np.exp(-env.log_ratio):.3f})")

print("squeeze runtimes:", certify_independence(squeezed["a"], squeezed["b"]).line())

###############################################################################
# An adversary who knows both acceptance rates runs likelihood-ratio tests on
# the plain runtimes.  Its best achievable errors trace the exact tradeoff.

p_a, p_b = 1 / plain["a"].mean(), 1 / plain["b"].mean()
res = attack_tradeoff(plain["a"], plain["b"], p_a, p_b)
print(f"R = {res.R:.4f}; empirical vs exact tradeoff sup gap {res.sup_gap_empirical:.4f}")
for alpha in (0.5, 0.1, 0.01):
    print(f"  type I {alpha:>5}: best type II {res.exact(alpha):.4f} (random guessing {1 - alpha:.4f})")
