""" Loads a scenario and displays its sensors.
    This example contains:
      Load the reference scenario.
      Display packet lengths, AoI thresholds and penalty weights.
      Benchmark selection probabilities.
      Change a threshold and the success probability.
      Unload toolkit.
"""
from aoipyt import aoinet

# Load the reference scenario.
d = aoinet('table1.cfg')

# Display sensors info.
d.getSensorsInfo().disp()
print(f'Configuration hash: {d.getConfigHash()}')

# Benchmark selection probabilities (proportional to 1 / beta_n).
probs = d.getBenchmarkProbabilities()
for n, p in enumerate(probs):
    print(f'Sensor {n}: beta = {d.getSensorAoIThreshold(n):6.1f} ms, P(select) = {p:.4f}')

# Change the threshold of the first sensor and the success probability.
d.setSensorAoIThreshold(0, 30)
d.setSuccessProbability(0.8)
print(f'New configuration hash: {d.getConfigHash()}')

# Unload toolkit.
d.unload()
