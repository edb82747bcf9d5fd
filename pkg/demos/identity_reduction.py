#! /usr/bin/env python3
"""Testing against an arbitrary reference through the reduction to uniformity.

Three channels (mix with uniform, round down, spread over blocks) turn the
reference q into exactly U_4k and any other p into something at least a
quarter as far away, while one output draw costs one input draw.
"""
import numpy as np

from distcheck import Metric, Pmf, distance, identity_test, reduce_pmf, random_pmf
from distcheck.access import code_from_pmf, stream
from distcheck.reduce import build_partition

rng = stream(0, 0, "identity-demo")
k = 20
q = random_pmf(k, rng)

# =============================================================================
# The pushforward of q itself is uniform over 4k symbols.

image = reduce_pmf(q, q)
print("max |Phi_q(q) - 1/4k| =", np.max(np.abs(image.probs - 1 / (4 * k))))
print("block sizes:", build_partition(q).sizes)

# =============================================================================
# Distances shrink by at most a factor of 4.

p = random_pmf(k, rng)
before = distance(p, q, Metric.TV)
after = distance(reduce_pmf(q, p), Pmf.uniform(4 * k), Metric.TV)
print(f"TV(p, q) = {before:.4f}, TV(Phi_q(p), U) = {after:.4f}, ratio {after / before:.3f}")

# =============================================================================
# End to end: with epsilon = 0.5 the reduced problem is in the large regime.

for name, target in (("p = q", q), ("p far", p)):
    code = code_from_pmf(target, stream(0, 1, name))
    v = identity_test(q, code, 0.5, rng=stream(0, 2, name))
    d = v.diagnostics
    print(f"{name}: {v.decision.value} via {d['regime']} regime on k'={d['k_reduced']}, "
          f"eps'={d['epsilon_reduced']}, uses={code.code_uses}")
