#! /usr/bin/env python3
"""A tour of the uniformity testers and the query ledger.

Every tester talks to a SourceCode, a seeded sampler that counts its own
uses. The ledger breakdown shows where the budget went: classical draws in
phase 1, then the charge of the mean-estimation step.
"""
from distcheck import (GiantConfig, InstanceSpec, LargeConfig, SmallConfig, Variant,
                       classical_baseline, make_instance, run_giant, run_large, run_small)
from distcheck.access import code_from_pmf, code_from_string, rto1_string, stream
from distcheck.qme import NoiseMode, QmeConfig

k = 10_000

# =============================================================================
# Large distance: gamma = 0.2. The uniform distribution passes; half the
# domain fails, because its Y has mean chi^2 = 1.

cfg = LargeConfig(gamma=0.2)
for spec in (InstanceSpec(Variant.UNIFORM), InstanceSpec(Variant.UNIFORM_SUBSET, k // 2)):
    code = code_from_pmf(make_instance(k, spec), stream(1, 0, spec.label))
    v = run_large(code, k, cfg)
    d = v.diagnostics
    print(f"{spec.label:<22} {v.decision.value:<6} n={d['n']} mu_hat={d['mu_hat']:.4f} "
          f"uses={code.code_uses} {dict(code.ledger.breakdown)}")

# A single very heavy symbol never reaches mean estimation: the frequency cap
# L catches it from the phase-1 counts alone.

code = code_from_pmf(make_instance(k, InstanceSpec(Variant.HEAVY_SPIKE, 0.9)), stream(1, 0, "spike"))
v = run_large(code, k, cfg)
print(f"{'HeavySpike(0.9)':<22} {v.decision.value:<6} reason={v.reason.value} "
      f"max_count={v.diagnostics['max_count']} L={v.diagnostics['L']:.1f}")

# =============================================================================
# Small l2 distance: tau = 0.02 on k = 1000, T reduced to keep the demo quick.
# Each round hashes the domain to a random subset and compares the two masses.

k_small, tau = 1000, 0.02
scfg = SmallConfig(tau=tau, T=400, qme=QmeConfig(noise=NoiseMode.UNIFORM))
q = make_instance(k_small, InstanceSpec(Variant.UNIFORM))
for eps in (None, tau * k_small ** 0.5 / 2):
    spec = InstanceSpec(Variant.UNIFORM) if eps is None else InstanceSpec(Variant.PERTURBED_UNIFORM, eps)
    code_p = code_from_pmf(make_instance(k_small, spec), stream(2, 0, "p"))
    code_q = code_from_pmf(q, stream(2, 0, "q"))
    v = run_small(code_p, code_q, k_small, scfg, stream(2, 0, "rounds"))
    print(f"{spec.label:<34} {v.decision.value:<6} vote_rate={v.diagnostics['vote_rate']:.4f}")

# =============================================================================
# Giant distance: an r-to-1 string collides quickly, uniform rarely does.
# The quantum cost reported is ceil(N^(2/3)) for N classical draws.

k_big, theta = 1_000_000, 50_000
gcfg = GiantConfig(theta=theta)
for code in (code_from_pmf(make_instance(k_big, InstanceSpec(Variant.UNIFORM)), stream(3, 0, "u")),
             code_from_string(rto1_string(k_big, 62_500, stream(3, 0, "x")), stream(3, 0, "s"))):
    v = run_giant(code, k_big, gcfg)
    d = v.diagnostics
    print(f"giant: {v.decision.value:<6} N={d['N']} modeled_cost={d['modeled_quantum_cost']} "
          f"collisions={d['collisions']}")

# =============================================================================
# The classical collision tester for comparison: it needs ~sqrt(k)/eps^2 draws.

for spec in (InstanceSpec(Variant.UNIFORM), InstanceSpec(Variant.PERTURBED_UNIFORM, 0.25)):
    code = code_from_pmf(make_instance(k, spec), stream(4, 0, spec.label))
    v = classical_baseline(code, k, 0.25)
    print(f"classical {spec.label:<22} {v.decision.value:<6} m={v.diagnostics['m']}")
