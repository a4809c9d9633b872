"""
Expected compromise against simulated infection counts
======================================================

"""
import numpy as np

from botnet_tsp.botnet_sim import ScenarioConfig, expected_compromise, run_simulation
from botnet_tsp.graph import random_metric_instance

g = random_metric_instance(6, seed=5)

# per-host attack success and defense; host 0 is the C&C
p = (0.0, 0.95, 0.7, 0.5, 0.3, 0.1)
d = (0.0, 0.0, 0.1, 0.2, 0.0, 0.5)
x = (0, 1, 1, 1, 1, 1)
print("expected infections:", expected_compromise(p, d, x))

# retries off, so each host gets exactly one try
counts = np.array([
    len(run_simulation(ScenarioConfig(g, 0, p, d, seed=s, max_update_retries=0)).infected)
    for s in range(5000)
])
print(f"simulated mean over 5000 runs: {counts.mean():.3f} (sd {counts.std():.3f})")
print("histogram:", np.bincount(counts, minlength=6))

# pushed updates turn a coin flip into near-certain infection
for retries in (0, 1, 3, 10):
    hits = [
        len(run_simulation(ScenarioConfig.uniform(g, 0.5, cnc_vertex=0, seed=s, max_update_retries=retries)).infected)
        for s in range(1000)
    ]
    print(f"retries={retries:2d}  mean infected {np.mean(hits):.3f} of 5")
