#! /usr/bin/env python3
"""Choosing the constant c of the large-distance uniformity tester.

The tester draws n = ceil(c k^(1/3) / gamma^(2/3)) samples. Its guarantees
need c "large enough", so the shipped default comes from this sweep: the
smallest c for which both cases reach a 0.99 empirical rate at
k in {1e3, 1e4} and gamma in {0.1, 0.5}, under the worst noise per side.

Run: python3 demos/calibrate_large.py [trials]
"""
import sys

from distcheck import InstanceSpec, LargeConfig, Variant, make_instance, run_large
from distcheck.access import code_from_pmf, stream
from distcheck.dist import perturbed_for_chi_sq, perturbed_for_hellinger_sq
from distcheck.qme import NoiseMode, QmeConfig
from distcheck.testers import LARGE_DELTA

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 200

# =============================================================================
# Close instances (should accept) get estimates pushed to the top of the
# allowed band; far instances get estimates pulled towards 0. The close
# PerturbedUniform sits just inside the acceptance region, chi^2 = .9 * .99 gamma.


def cases(k, gamma):
    close = [InstanceSpec(Variant.UNIFORM), perturbed_for_chi_sq(0.9 * 0.99 * gamma)]
    far = [InstanceSpec(Variant.UNIFORM_SUBSET, k // 2), perturbed_for_hellinger_sq(gamma)]
    return [(s, True, NoiseMode.ADV_HIGH) for s in close] + \
           [(s, False, NoiseMode.ADV_TOWARDS) for s in far]


def rate(k, gamma, spec, accept, noise, c):
    p = make_instance(k, spec)
    cfg = LargeConfig(gamma=gamma, c_const=c, qme=QmeConfig(delta=LARGE_DELTA, noise=noise))
    hits = 0
    for t in range(trials):
        code = code_from_pmf(p, stream(5, t, "calibrate/code"))
        hits += run_large(code, k, cfg, stream(5, t, "calibrate/qme")).accepted == accept
    return hits / trials


# =============================================================================
# Sweep c upwards and stop at the first value that clears every cell.

for c in (8, 16, 32, 64, 96, 128, 192):
    worst = 1.0
    for k in (1000, 10000):
        for gamma in (0.1, 0.5):
            for spec, accept, noise in cases(k, gamma):
                r = rate(k, gamma, spec, accept, noise, c)
                worst = min(worst, r)
    print(f"c = {c:4d}: worst success rate {worst:.3f}")
    if worst >= 0.99:
        print(f"smallest passing c: {c}")
        break
