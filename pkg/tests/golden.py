"""Reference scenario shared by the golden-file tests.

Run as a script to regenerate ``tests/data`` after an intentional change to
the event model; review the diff before committing.
"""
from pathlib import Path

from botnet_tsp.botnet_sim import ScenarioConfig, format_event_log, run_simulation
from botnet_tsp.detector import classify_hosts, strip_ground_truth, write_flows
from botnet_tsp.graph import random_metric_instance, write_graph_file

DATA = Path(__file__).parent / "data"


def reference_config() -> ScenarioConfig:
    g = random_metric_instance(8, 42)
    return ScenarioConfig.uniform(
        g, p_attack=0.8, defense=0.0, cnc_vertex=0, strategy="nn", seed=42, max_update_retries=3, noise_rate=0.5
    )


if __name__ == "__main__":
    cfg = reference_config()
    log = run_simulation(cfg)
    write_graph_file(cfg.graph, DATA / "reference_graph.txt")
    (DATA / "reference_log.jsonl").write_text(format_event_log(log))
    flows = strip_ground_truth(log)
    write_flows(flows, DATA / "reference_flows.jsonl")
    report = classify_hosts(flows, cfg.graph).with_metrics(log.ground_truth)
    (DATA / "reference_report.json").write_text(report.to_json())
