""" Simulates one episode and exports the task time series.
    This example contains:
      Load a scenario.
      Simulate one episode with the max-age scheduler.
      Display the ages of the first tasks.
      Save the time series to an Excel file.
      Unload toolkit.
"""
from aoipyt import aoinet
import pandas as pd

# Load a scenario.
d = aoinet('table1.cfg')

# Simulate one episode with the max-age scheduler.
res = d.getComputedTimeSeries(d.SchedulerConstants.MAX_AGE, horizon=200, seed=1)

# Display the ages of the first tasks.
ages = pd.DataFrame(res.Age, columns=[f'n={n}' for n in range(d.getSensorCount())])
ages.insert(0, 'Action', res.Action)
ages.insert(0, 'Time [ms]', res.Time)
print(ages.head(12))

# Save the time series to an Excel file.
filename = res.to_excel('max_age_time_series')
print(f'Time series written to {filename}')

# Unload toolkit.
d.unload()
