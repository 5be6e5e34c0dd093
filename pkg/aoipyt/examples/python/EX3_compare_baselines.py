""" Compares the baseline schedulers on identical seeds.
    This example contains:
      Load a scenario.
      Evaluate the benchmark, round-robin and max-age schedulers.
      Display the comparison table.
      Unload toolkit.
"""
from aoipyt import aoinet

# Load a scenario.
d = aoinet('table1.cfg')

# Evaluate the baselines.
table = d.comparePolicies('benchmark', 'round_robin', 'max_age', episodes=5, horizon=1000, seed=0)

# Display the comparison table.
print(table.to_string(float_format=lambda v: f'{v:.4f}'))

# Unload toolkit.
d.unload()
