""" Trains the actor-critic scheduler on the two-sensor scenario.
    This example contains:
      Load the small scenario.
      Train with one worker.
      Display the training statistics.
      Save, reload and evaluate the scheduler.
      Unload toolkit.
"""
from aoipyt import aoinet
import logging

logging.basicConfig(level=logging.INFO, format='%(message)s')

# Load the small scenario.
d = aoinet('two_sensors.cfg')

# Train with one worker.
d.trainScheduler(episodes=50, n_workers=1, seed=0)

# Display the training statistics.
print(d.TrainingStats.to_frame()[['episode', 'mean_reward', 'entropy_weight', 'objective']].tail())

# Save, reload and evaluate the scheduler.
d.saveScheduler('two_sensors_checkpoint.json')
d.loadScheduler('two_sensors_checkpoint.json')
print(d.comparePolicies('learned', 'benchmark', 'max_age').to_string())

# Unload toolkit.
d.unload()
