"""
A single courier bot working its way through a network
======================================================

"""
from collections import Counter

from botnet_tsp.botnet_sim import EventKind, ScenarioConfig, format_event_log, run_simulation
from botnet_tsp.graph import random_metric_instance

g = random_metric_instance(8, seed=42)

# C&C sits on host 0, every other host is attacked with probability 0.8;
# failures get up to 3 pushed updates before the host is written off
cfg = ScenarioConfig.uniform(g, p_attack=0.8, defense=0.0, cnc_vertex=0, strategy="nn", seed=42, noise_rate=0.0)
log = run_simulation(cfg)

print("planned tour:", log.tour, f"cost {log.tour_cost:.1f}")
print("infected:", sorted(log.infected))

# the attack part of the log, beacons left out
for e in log.events:
    if e.kind in (EventKind.DISPATCH, EventKind.INFECT_SUCCESS, EventKind.INFECT_FAIL, EventKind.UPDATE_PUSH):
        print(f"{e.tick:5d} {e.kind.value:13s} {e.src!s:>4} -> {e.dst}")

# infected hosts beacon back to the C&C at a fixed interval
beacons = [e for e in log.events if e.kind is EventKind.REPORT and e.bot_id is not None]
print("beacons per host:", dict(sorted(Counter(e.src for e in beacons).items())))

# a stubborn network: defense halves every attempt
hard = ScenarioConfig.uniform(g, 0.8, defense=0.5, cnc_vertex=0, seed=42, max_update_retries=0)
print("with defense 0.5 and no retries:", len(run_simulation(hard).infected), "of", g.n - 1)

# same seed, same log, byte for byte
print("reproducible:", format_event_log(run_simulation(cfg)) == format_event_log(log))
