"""
A larger population can hurt
============================

Run the (N+N) EA on TrapZeros at n=100 for a few population sizes and
compare how often the optimum is found within 20 n^2 evaluations.
"""

import math

from trapzeros import ExperimentConfig
from trapzeros.trials import sweep

n = 100
# 2 * ceil(n / ln n) = 44 is the "large" population
sizes = [1, 5, 12, 2 * math.ceil(n / math.log(n))]

# early abort stops runs stuck deep in the S0 trap; escape from there has
# probability at most N * n^-L per generation, which is ~1e-44 here
base = ExperimentConfig(problem="trapzeros", n=n, N=1, trials=400, seed=7, early_abort=True)
rows = sweep([(n, N) for N in sizes], base)

print(f"{'N':>4} {'p_hat':>7}   95% Wilson interval")
for row in rows:
    e = row.estimate
    print(f"{row.N:>4} {e.p_hat:7.3f}   [{e.wilson_lo:.3f}, {e.wilson_hi:.3f}]")

# the rate falls with N: more initial members means more chances that one
# of them starts in S0, and S0 members outrank everything outside S*
