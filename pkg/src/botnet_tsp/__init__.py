"""Centralized-botnet traversal simulation, TSP solvers and traversal-pattern detection."""
from .graph import (
    WeightMatrix,
    build_complete_graph,
    mst_weight,
    random_metric_instance,
    read_graph_file,
    triangle_inequality_holds,
    write_graph_file,
)
from .tsp import (
    Tour,
    TspDecision,
    decide_tsp,
    domination_count,
    eval_nn_cost_formula,
    eval_nn_visit_indicator,
    eval_worst_tour_exception,
    exact_tour_bruteforce,
    mst_double_tour,
    nn_tour,
    tour_cost,
)
from .botnet_sim import (
    EventLog,
    ScenarioConfig,
    Strategy,
    expected_compromise,
    plan_traversal,
    run_simulation,
    simulate_background_traffic,
)
from .detector import (
    DetectionReport,
    candidate_cnc,
    classify_hosts,
    evaluate,
    reconstruct_traversal,
    strip_ground_truth,
    traversal_score,
)

__version__ = "0.1.0"
