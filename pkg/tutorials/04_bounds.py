"""
Checking the probability inequalities exactly
=============================================

Each check sums the binomial tail exactly and compares it with the bound.
"""

from trapzeros.bounds import Binomial, chebyshev_check, chernoff_check, sweep, takeover_growth_check, upgrade_prob_A

print(chernoff_check(100, 0.5, 0.2, "lower"))
print(chebyshev_check(Binomial(10, 0.5), 2))
print(takeover_growth_check(5, 0.2, 0.1))

u = upgrade_prob_A(10, 0.98, 10, 100)
print(f"u = {u.u:.6f}, 1/u = {1 / u.u:.3f} <= {u.check.bound:.2f}")

for kind, rows in sweep(200, seed=1).items():
    print(f"{kind:16s} {sum(c.satisfied for c in rows)}/{len(rows)} satisfied")
