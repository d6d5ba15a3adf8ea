"""
Following a run through the decomposition
=========================================

Each generation is labelled E0, A(rho) or B(rho). The timeline keeps one
segment per label with its entry, takeover and exit generations.
"""

from trapzeros import ExperimentConfig, run_trial
from trapzeros.decomposition import takeover_statistics
from trapzeros.trials import run_batch

config = ExperimentConfig(problem="trapzeros", n=30, N=6, trials=1, seed=3)
rec = run_trial(config, 0)
print(f"hit={rec.hit} generations={rec.generations} takeover threshold={config.threshold}")
for s in rec.timeline.segments[:12]:
    print(f"  {s.side}({s.rho}) entry={s.entry} takeover={s.takeover} exit={s.exit} ({s.exit_kind})")

# over many runs: mean takeover time eta per level, and the max over levels
records = run_batch(config.with_(trials=300))
stats = takeover_statistics(r.timeline for r in records)
for row in stats.eta[:8]:
    print(f"eta {row.side}({row.rho}): {row.samples} samples, mean {row.mean:.2f}, q95 {row.q95:.0f}")
print("max mean eta per side:", {k: round(v, 2) for k, v in stats.max_mean_eta.items()})
