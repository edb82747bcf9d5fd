#! /usr/bin/env python3
"""Empirical scaling of the sample budget.

For each grid point the minimal budget reaching a 0.9 success rate on both
sides is found by bisection, and a line is fitted in log-log space. Writes
CSVs and SVG plots into demos/out/.
"""
from pathlib import Path

from distcheck.harness import BenchConfig, bench_csv, bench_scaling, bench_svg, write_text

out = Path(__file__).with_name("out")

runs = {
    "large_k": BenchConfig(regime="large", param=0.2),
    "large_theta": BenchConfig(regime="large", sweep="theta", k=16384),
    "classical_k": BenchConfig(regime="classical", param=0.25, trials=200),
    "giant_k": BenchConfig(regime="giant", param=100, trials=100,
                           k_grid=(4096, 16384, 65536, 262144, 1048576)),
}

for name, bc in runs.items():
    result = bench_scaling(bc)
    write_text(out / f"{name}.csv", bench_csv(result))
    write_text(out / f"{name}.svg", bench_svg(result))
    f = result.fit
    print(f"{name:<12} slope {f.slope:.3f}  95% [{f.ci_low:.3f}, {f.ci_high:.3f}]")
