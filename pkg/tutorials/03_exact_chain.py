"""
Exact hitting times of the (1+1) EA
===================================

For small n the (1+1) EA is a Markov chain on 2^n states that can be solved
exactly. The solution satisfies the drift identity and is checked here
against simulation.
"""

import numpy as np

from trapzeros import ExperimentConfig, build_chain, expected_hitting_times, verify_drift_identity
from trapzeros.exact import hitting_time_cdf
from trapzeros.trials import run_batch

chain = build_chain(8, "trapzeros")
result = expected_hitting_times(chain)
print(f"E[tau] from a uniform start: {result.mean_uniform:.1f} steps (residual {result.residual:.1e})")
print(f"slowest start: {result.expected.max():.1f} steps from state {chain.state_label(result.expected.argmax())}")

report = verify_drift_identity(chain, result)
print(f"drift identity: max |drift - 1| = {report.max_deviation:.1e}")

# the simulated initial population is generation 1, the chain starts at step 0
config = ExperimentConfig(problem="trapzeros", n=8, N=1, trials=1000, seed=1, eval_budget=10**9)
steps = np.array([r.tau - 1 for r in run_batch(config)])
se = steps.std(ddof=1) / np.sqrt(steps.size)
print(f"simulated mean {steps.mean():.1f} +- {se:.1f}")

for t in (1000, 100_000, 1_000_000):
    p = hitting_time_cdf(chain, [t])[0]
    print(f"P(tau <= {t}) exact {p:.4f}, simulated {np.mean(steps <= t):.4f}")
