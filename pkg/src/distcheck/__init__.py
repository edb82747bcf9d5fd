"""Distribution testers with metered access to a sampler's code."""
from .access import (QueryLedger, SourceCode, StringOracle, code_from_pmf, code_from_string,
                     postprocess, rto1_string, stream)
from .dist import (InstanceSpec, Metric, Pmf, Variant, chi_sq_uniform, distance, make_instance,
                   random_pmf)
from .qme import Backend, MeanEstimate, NoiseMode, QmeConfig, Rv, qme_estimate
from .reduce import identity_test, reduce_instance, reduce_pmf
from .testers import (Decision, GiantConfig, LargeConfig, Reason, SmallConfig, Verdict,
                      classical_baseline, collision_stats, run_giant, run_large, run_small)

__version__ = "0.1.0"
