""" Trains on the ten-sensor reference scenario and checks the learned
    scheduler against the benchmark.
    This example contains:
      Train with three seeds using the [train] settings of table1.cfg.
      Evaluate learned and benchmark schedulers on identical seeds.
      Relative objective improvement (target: at least 25% for every seed).
      Per-node violation probabilities and CDF at the thresholds.
      Unload toolkit.

    Each seed trains 300 episodes of 1000 tasks with 4 workers. Pass
    EPISODES for a quick look.
"""
from aoipyt import aoinet
import numpy as np

EPISODES = None  # None keeps the scenario's episode count
SEEDS = [0, 1, 2]
MIN_IMPROVEMENT = 0.25

d = aoinet('table1.cfg')
beta = d.getSensorAoIThreshold()
delta = d.getSensorPenaltyWeight()
N = d.getSensorCount()

improvements = []
for seed in SEEDS:
    # Train.
    overrides = {'seed': seed} if EPISODES is None else {'seed': seed, 'episodes': EPISODES}
    d.trainScheduler(**overrides)

    # Evaluate on identical seeds.
    learned = d.evaluatePolicy('learned', seed=seed)
    bench = d.evaluatePolicy('benchmark', seed=seed)

    improvement = 1 - learned.objective / bench.objective
    improvements.append(improvement)
    lower_pv = int(np.sum(learned.violation_prob <= bench.violation_prob))
    weighted = (np.sum(delta * learned.violation_prob), np.sum(delta * bench.violation_prob))

    cdf_at_beta = []
    for n in range(N):
        ages_l, f_l = zip(*learned.cdf[n])
        ages_b, f_b = zip(*bench.cdf[n])
        cdf_at_beta.append(np.interp(beta[n], ages_l, f_l) >= np.interp(beta[n], ages_b, f_b))

    print(f'\nSeed {seed}:')
    print(f'  objective learned {learned.objective:.4f}, benchmark {bench.objective:.4f}, '
          f'improvement {100 * improvement:.1f}%')
    print(f'  nodes with P_V(learned) <= P_V(benchmark): {lower_pv} / {N} (want >= 8)')
    print(f'  weighted violations learned {weighted[0]:.4f}, benchmark {weighted[1]:.4f} (want lower)')
    print(f'  nodes with F_learned(beta) >= F_benchmark(beta): {sum(cdf_at_beta)} / {N} (want >= 8)')
    print(f'  selection frequency {np.round(learned.selection_freq, 3)}')
    print(d.comparePolicies('learned', 'benchmark', seed=seed).to_string())

passed = all(i >= MIN_IMPROVEMENT for i in improvements)
print(f'\nImprovement over the benchmark per seed: {[f"{100 * i:.1f}%" for i in improvements]}')
print(f'All seeds at least {100 * MIN_IMPROVEMENT:.0f}% better: {"yes" if passed else "no"}')

d.unload()
